"""Prospective (5-step) and retrospective (3-step) analysis pipelines.

Prospective, on a provisional schedule:
  1. deterministic feasibility check
  2. deterministic baseline KPIs
  3. stochastic durations only -> robustness against duration variability
  4. generated urgent arrivals, deterministic durations, one summary per
     strategy -> resilience against disruptions
  5. stochastic durations AND arrivals per strategy

Retrospective, on a performed schedule:
  1. deterministic constraint audit of the realized timeline
  2. replay KPIs plus counterfactual KPIs per insertion strategy
  3. provisional-vs-performed diff with attribution

Both pipelines are deterministic functions of their inputs and base_seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from ortwin.arrivals import ArrivalGeneratorConfig
from ortwin.diffing import ScheduleDiff, diff_schedules
from ortwin.engine import DurationMode, SimOptions, Strategy, simulate
from ortwin.errors import PreconditionError
from ortwin.kpi import KpiReport, KpiTargets, ReplicationSummary, aggregate_replications, compute_kpis
from ortwin.model import DurationSpec, Scenario, ScheduleKind, Violation, deterministic
from ortwin.validate import constraint_audit, error_level, feasibility_check

DEFAULT_COUNTERFACTUAL_STRATEGIES = (Strategy.FIRST_FIT, Strategy.BEST_FIT, Strategy.WORST_FIT)


@dataclass(frozen=True)
class AnalysisThresholds:
    """Verdict rules: robustness = target-hit probability, resilience = KPI degradation margins."""

    robust_hit_probability: float = 0.8
    resilience_utilization_drop: float = 0.10
    resilience_overtime_rise: float = 0.10


@dataclass(frozen=True)
class Verdicts:
    feasible: bool
    robust: bool
    resilient_by_strategy: dict[str, bool]


@dataclass(frozen=True)
class ProspectiveReport:
    step1: tuple[Violation, ...]
    step2: KpiReport
    step3: ReplicationSummary
    step4: dict[str, ReplicationSummary]
    step5: dict[str, ReplicationSummary]
    verdicts: Verdicts


@dataclass(frozen=True)
class RetrospectiveReport:
    step1: tuple[Violation, ...]
    step2_performed: KpiReport
    step2_counterfactual: dict[str, KpiReport]
    step3: ScheduleDiff


def planned_projection(scenario: Scenario) -> Scenario:
    """Replace every stochastic spec by its planned value (for deterministic checks)."""
    cases = []
    for case in scenario.cases:
        phases = case.phases
        new_specs = [s if s.is_deterministic else deterministic(s.planned_value) for s in phases.specs()]
        cases.append(
            replace(
                case,
                phases=replace(
                    phases,
                    setup_with_anesth=new_specs[0],
                    setup_without_anesth=new_specs[1],
                    procedure=new_specs[2],
                    reversal=new_specs[3],
                ),
            )
        )
    return replace(scenario, cases=tuple(cases))


def prospective_analysis(
    scenario: Scenario,
    options: SimOptions,
    arrivals: Optional[ArrivalGeneratorConfig],
    targets: KpiTargets,
    thresholds: AnalysisThresholds = AnalysisThresholds(),
    strategies: tuple[Strategy, ...] = DEFAULT_COUNTERFACTUAL_STRATEGIES,
) -> ProspectiveReport:
    if scenario.schedule_kind is not ScheduleKind.PROVISIONAL or options.schedule_kind is not ScheduleKind.PROVISIONAL:
        raise PreconditionError("prospective analysis requires a provisional schedule")

    deterministic_input = all(c.phases.all_deterministic for c in scenario.cases)
    step1 = tuple(feasibility_check(scenario if deterministic_input else planned_projection(scenario)))

    base = replace(options, schedule_kind=ScheduleKind.PROVISIONAL, inject_arrivals=None)

    opts2 = replace(base, duration_mode=DurationMode.PLANNED_DETERMINISTIC, replications=1)
    step2 = compute_kpis(simulate(scenario, opts2, 0), scenario.rooms, targets)

    opts3 = replace(base, duration_mode=DurationMode.STOCHASTIC)
    step3 = aggregate_replications(
        [compute_kpis(simulate(scenario, opts3, i), scenario.rooms, targets) for i in range(opts3.replications)],
        targets,
    )

    step4: dict[str, ReplicationSummary] = {}
    step5: dict[str, ReplicationSummary] = {}
    if arrivals is not None:
        for strat in strategies:
            opts4 = replace(
                base,
                duration_mode=DurationMode.PLANNED_DETERMINISTIC,
                inject_arrivals=arrivals,
                strategy=strat,
            )
            step4[strat.value] = aggregate_replications(
                [
                    compute_kpis(simulate(scenario, opts4, i), scenario.rooms, targets)
                    for i in range(arrivals.arrival_replications)
                ],
                targets,
            )
            opts5 = replace(opts4, duration_mode=DurationMode.STOCHASTIC)
            step5[strat.value] = aggregate_replications(
                [
                    compute_kpis(simulate(scenario, opts5, i), scenario.rooms, targets)
                    for i in range(arrivals.arrival_replications)
                ],
                targets,
            )

    robust = (
        step3.target_hit_probability["utilization"] >= thresholds.robust_hit_probability
        and step3.target_hit_probability["overtime"] >= thresholds.robust_hit_probability
    )
    resilient = {
        name: (
            summary.stats["utilization"].mean >= step2.utilization - thresholds.resilience_utilization_drop
            and summary.stats["overtime"].mean <= step2.overtime + thresholds.resilience_overtime_rise
        )
        for name, summary in step4.items()
    }
    verdicts = Verdicts(feasible=not error_level(list(step1)), robust=robust, resilient_by_strategy=resilient)
    return ProspectiveReport(step1=step1, step2=step2, step3=step3, step4=step4, step5=step5, verdicts=verdicts)


def counterfactual_strategy_eval(
    performed: Scenario,
    strategies: tuple[Strategy, ...],
    targets: KpiTargets,
    base_options: Optional[SimOptions] = None,
) -> dict[str, KpiReport]:
    """Replay the day per strategy: electives exactly as realized, urgent cases re-decided.

    real_life is the unmodified replay, so its report reproduces the
    performed schedule's KPIs exactly.
    """
    if performed.schedule_kind is not ScheduleKind.PERFORMED:
        raise PreconditionError("counterfactual evaluation requires a performed schedule")
    base = base_options or SimOptions(schedule_kind=ScheduleKind.PERFORMED)
    base = replace(
        base,
        schedule_kind=ScheduleKind.PERFORMED,
        duration_mode=DurationMode.REALIZED_DETERMINISTIC,
        keep_initial_non_elective=True,
        inject_arrivals=None,
        replications=1,
    )
    out: dict[str, KpiReport] = {}
    for strat in strategies:
        trace = simulate(performed, replace(base, strategy=strat), 0)
        out[strat.value] = compute_kpis(trace, performed.rooms, targets)
    return out


def retrospective_analysis(
    provisional: Scenario,
    performed: Scenario,
    strategies: tuple[Strategy, ...] = DEFAULT_COUNTERFACTUAL_STRATEGIES,
    targets: KpiTargets = KpiTargets(),
    tolerance_minutes: float = 5.0,
) -> RetrospectiveReport:
    step1 = tuple(constraint_audit(performed))
    replay = counterfactual_strategy_eval(performed, (Strategy.REAL_LIFE,), targets)[Strategy.REAL_LIFE.value]
    requested = tuple(s for s in strategies if s is not Strategy.REAL_LIFE)
    counterfactual = counterfactual_strategy_eval(performed, requested, targets) if requested else {}
    counterfactual[Strategy.REAL_LIFE.value] = replay
    step3 = diff_schedules(provisional, performed, tolerance_minutes)
    return RetrospectiveReport(
        step1=step1,
        step2_performed=replay,
        step2_counterfactual=counterfactual,
        step3=step3,
    )
