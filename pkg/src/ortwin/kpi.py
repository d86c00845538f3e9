"""Six-state Gantt construction, KPI computation, and cross-replication statistics.

KPI definitions (all "percentage of OR shift" style fractions):

    utilization = sum over rooms of case-phase time clipped to the shift
                  window, divided by the total shift minutes
    overtime    = sum over rooms of max(0, last case end - shift end),
                  divided by the total shift minutes

Utilization counts only within-shift busy time, so it stays <= 1 and
post-shift urgent work shows up exclusively in the overtime KPI. Waiting is
measured per case from its ready anchor (planned start for electives,
arrival + preoperative time for urgent cases).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from ortwin.model import RoomShift, TimePoint


class GanttState(str, Enum):
    SETUP_WITH_ANESTH = "SETUP_WITH_ANESTH"
    SETUP_WITHOUT_ANESTH = "SETUP_WITHOUT_ANESTH"
    PROCEDURE = "PROCEDURE"
    REVERSAL = "REVERSAL"
    IDLE = "IDLE"
    OFF_SCHEDULE = "OFF_SCHEDULE"


PHASE_STATES = (
    GanttState.SETUP_WITH_ANESTH,
    GanttState.SETUP_WITHOUT_ANESTH,
    GanttState.PROCEDURE,
    GanttState.REVERSAL,
)


@dataclass(frozen=True)
class GanttSegment:
    room_id: str
    state: GanttState
    start: TimePoint
    end: TimePoint
    case_id: Optional[str] = None
    non_elective: bool = False

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("segment start must precede its end")
        is_phase = self.state in PHASE_STATES
        if is_phase != (self.case_id is not None):
            raise ValueError("case_id is present iff the segment is a case phase")


@dataclass(frozen=True)
class KpiTargets:
    utilization_target: float = 0.85
    overtime_max: float = 0.05
    waiting_max_minutes: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.utilization_target <= 1):
            raise ValueError("utilization_target must be in (0, 1]")
        if self.overtime_max < 0:
            raise ValueError("overtime_max must be >= 0")


@dataclass(frozen=True)
class RoomKpi:
    busy_in_shift: float
    overtime_minutes: float
    shift_minutes: float


@dataclass(frozen=True)
class KpiReport:
    utilization: float
    overtime: float
    mean_waiting_minutes: float
    max_waiting_minutes: float
    per_room: dict[str, RoomKpi]
    utilization_pass: bool
    overtime_pass: bool

    @staticmethod
    def from_values(utilization: float, overtime: float, targets: KpiTargets,
                    mean_waiting: float = 0.0, max_waiting: float = 0.0,
                    per_room: dict[str, RoomKpi] | None = None) -> "KpiReport":
        """Build a report from raw values, deriving the pass flags (boundary inclusive)."""
        return KpiReport(
            utilization=utilization,
            overtime=overtime,
            mean_waiting_minutes=mean_waiting,
            max_waiting_minutes=max_waiting,
            per_room=dict(per_room or {}),
            utilization_pass=utilization >= targets.utilization_target,
            overtime_pass=overtime <= targets.overtime_max,
        )


def build_gantt(trace, rooms: list[RoomShift] | tuple[RoomShift, ...]) -> list[GanttSegment]:
    """Tile each room's horizon with the six OR states.

    Case phases are kept as recorded (a phase straddling the shift end stays
    one segment); in-shift gaps become IDLE, post-shift gaps OFF_SCHEDULE,
    and zero-length segments are dropped.
    """
    by_room: dict[str, list[GanttSegment]] = {r.room_id: [] for r in rooms}
    for seg in trace.segments:
        by_room[seg.room_id].append(seg)

    out: list[GanttSegment] = []
    for room in rooms:
        cursor = room.shift_start
        segs = sorted(by_room[room.room_id], key=lambda s: (s.start, s.end, s.case_id or ""))
        for seg in segs:
            if seg.start > cursor:
                out.extend(_fillers(room, cursor, seg.start))
            out.append(seg)
            cursor = max(cursor, seg.end)
        if cursor < room.shift_end:
            out.extend(_fillers(room, cursor, room.shift_end))
    return out


def _fillers(room: RoomShift, start: float, end: float) -> list[GanttSegment]:
    split = min(max(start, room.shift_end), end)
    out = []
    if start < split:
        out.append(GanttSegment(room.room_id, GanttState.IDLE, start, split))
    if split < end:
        out.append(GanttSegment(room.room_id, GanttState.OFF_SCHEDULE, split, end))
    return out


def compute_kpis(trace, rooms, targets: KpiTargets) -> KpiReport:
    per_room: dict[str, RoomKpi] = {}
    total_shift = 0.0
    total_busy = 0.0
    total_overtime = 0.0
    for room in rooms:
        busy = 0.0
        last_end = None
        for outcome in trace.outcomes:
            if outcome.room_id != room.room_id:
                continue
            lo = max(outcome.start_time, room.shift_start)
            hi = min(outcome.end_time, room.shift_end)
            if hi > lo:
                busy += hi - lo
            if last_end is None or outcome.end_time > last_end:
                last_end = outcome.end_time
        overtime_minutes = max(0.0, last_end - room.shift_end) if last_end is not None else 0.0
        per_room[room.room_id] = RoomKpi(busy, overtime_minutes, room.shift_minutes)
        total_shift += room.shift_minutes
        total_busy += busy
        total_overtime += overtime_minutes

    utilization = total_busy / total_shift if total_shift > 0 else 0.0
    overtime = total_overtime / total_shift if total_shift > 0 else 0.0
    waits = [o.waiting_minutes for o in trace.outcomes]
    mean_wait = sum(waits) / len(waits) if waits else 0.0
    max_wait = max(waits) if waits else 0.0
    return KpiReport.from_values(utilization, overtime, targets, mean_wait, max_wait, per_room)


KPI_KEYS = ("utilization", "overtime", "mean_waiting_minutes", "max_waiting_minutes")


@dataclass(frozen=True)
class KpiStats:
    mean: float
    sample_stdev: float
    min: float
    max: float
    q05: float
    q50: float
    q95: float
    ci95_halfwidth: float


@dataclass(frozen=True)
class ReplicationSummary:
    stats: dict[str, KpiStats]
    target_hit_probability: dict[str, float]
    n: int


def _nearest_rank(sorted_values: list[float], p: float) -> float:
    n = len(sorted_values)
    idx = max(1, math.ceil(p * n)) - 1
    return sorted_values[min(idx, n - 1)]


def _stats(values: list[float]) -> KpiStats:
    n = len(values)
    mean = sum(values) / n
    if n > 1:
        stdev = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
        ci95 = 1.96 * stdev / math.sqrt(n)
    else:
        stdev = 0.0
        ci95 = 0.0
    s = sorted(values)
    return KpiStats(mean, stdev, s[0], s[-1], _nearest_rank(s, 0.05), _nearest_rank(s, 0.50), _nearest_rank(s, 0.95), ci95)


def aggregate_replications(reports: list[KpiReport], targets: KpiTargets) -> ReplicationSummary:
    """Sample statistics per KPI over replications (nearest-rank quantiles, n-1 stdev)."""
    if not reports:
        raise ValueError("at least one report is required")
    stats = {key: _stats([getattr(r, key) for r in reports]) for key in KPI_KEYS}
    n = len(reports)
    hits = {
        "utilization": sum(1 for r in reports if r.utilization_pass) / n,
        "overtime": sum(1 for r in reports if r.overtime_pass) / n,
    }
    if targets.waiting_max_minutes is not None:
        hits["mean_waiting_minutes"] = (
            sum(1 for r in reports if r.mean_waiting_minutes <= targets.waiting_max_minutes) / n
        )
    return ReplicationSummary(stats=stats, target_hit_probability=hits, n=n)
