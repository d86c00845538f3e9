"""Decision support for operating-room day schedules.

Simulates the execution of a one-day schedule under uncertainty, scores it
against KPI targets, compares urgent-case insertion strategies, and runs
prospective (plan-ahead) and retrospective (post-day) analysis pipelines.
"""

from ortwin.engine import (
    CaseOutcome,
    DurationMode,
    SimOptions,
    SimulationTrace,
    Strategy,
    kernel_name,
    ready_time,
    run_replications,
    simulate,
)
from ortwin.kpi import (
    GanttSegment,
    GanttState,
    KpiReport,
    KpiTargets,
    ReplicationSummary,
    aggregate_replications,
    build_gantt,
    compute_kpis,
)
from ortwin.model import (
    CaseType,
    DurationKind,
    DurationSpec,
    PhaseDurations,
    ResourceConfig,
    RoomShift,
    Scenario,
    ScheduleKind,
    SurgicalCase,
    TimePoint,
    Violation,
    ViolationKind,
)
from ortwin.validate import constraint_audit, feasibility_check, validate_scenario

__version__ = "0.1.0"
