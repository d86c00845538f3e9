"""Provisional-vs-performed schedule comparison with disparity attribution.

Each shared executed case gets at most one record, classified in precedence
order ROOM_CHANGED > RESEQUENCED > START_DRIFT. Start drift is judged
against a counterfactual replay of the provisional sequence with realized
durations: drift the replay predicts (within tolerance) is plain duration
variability and is suppressed; drift beyond it is an online timing decision.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from ortwin.engine import DurationMode, SimOptions, Strategy, simulate
from ortwin.errors import DuplicateCaseIdError
from ortwin.model import Scenario, ScheduleKind, SurgicalCase


class ChangeKind(str, Enum):
    ADDED = "ADDED"
    REMOVED = "REMOVED"
    ROOM_CHANGED = "ROOM_CHANGED"
    RESEQUENCED = "RESEQUENCED"
    START_DRIFT = "START_DRIFT"


class Attribution(str, Enum):
    OFFLINE_DECISION = "offline_decision"
    ONLINE_DECISION = "online_decision"
    DURATION_VARIABILITY = "duration_variability"


@dataclass(frozen=True)
class DiffRecord:
    case_id: str
    change: ChangeKind
    attribution: Attribution
    provisional_value: Optional[str] = None
    performed_value: Optional[str] = None
    drift_minutes: Optional[float] = None

    def __post_init__(self):
        if self.change is ChangeKind.ADDED and self.provisional_value is not None:
            raise ValueError("ADDED records carry only a performed value")
        if self.change is ChangeKind.REMOVED and self.performed_value is not None:
            raise ValueError("REMOVED records carry only a provisional value")
        if self.change is ChangeKind.START_DRIFT and self.drift_minutes is None:
            raise ValueError("START_DRIFT records need drift_minutes")


@dataclass(frozen=True)
class ScheduleDiff:
    records: tuple[DiffRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def by_change(self, change: ChangeKind) -> list[DiffRecord]:
        return [r for r in self.records if r.change is change]


def _has_planned(case: SurgicalCase) -> bool:
    return case.planned_room is not None and case.planned_start is not None and case.sequence_index is not None


def counterfactual_starts(provisional: Scenario, performed: Scenario) -> dict[str, float]:
    """Replay the provisional sequence with realized durations.

    Only cases present on both sides, executed, still in their provisional
    room, and carrying planned fields take part; the returned starts are the
    pure duration-propagation prediction for them.
    """
    performed_by_id = {c.case_id: c for c in performed.cases}
    stayed: list[SurgicalCase] = []
    for case in provisional.cases:
        twin = performed_by_id.get(case.case_id)
        if twin is None or not twin.was_executed or not _has_planned(case):
            continue
        if twin.realized_room != case.planned_room:
            continue
        realized = twin.phases.realized_or_raise(twin.case_id)
        stayed.append(
            replace(
                case,
                phases=replace(
                    case.phases,
                    realized_setup_with_anesth=realized[0],
                    realized_setup_without_anesth=realized[1],
                    realized_procedure=realized[2],
                    realized_reversal=realized[3],
                ),
            )
        )
    if not stayed:
        return {}
    by_room: dict[str, list[SurgicalCase]] = {}
    for case in stayed:
        by_room.setdefault(case.planned_room, []).append(case)  # type: ignore[arg-type]
    reindexed = []
    for room_id, cases in by_room.items():
        cases.sort(key=lambda c: (c.sequence_index, c.case_id))  # type: ignore[arg-type]
        for i, case in enumerate(cases):
            reindexed.append(replace(case, sequence_index=i))
    hybrid = Scenario(
        scenario_id=f"{provisional.scenario_id}-counterfactual",
        rooms=provisional.rooms,
        resources=provisional.resources,
        cases=tuple(reindexed),
        schedule_kind=ScheduleKind.PROVISIONAL,
    )
    options = SimOptions(
        schedule_kind=ScheduleKind.PROVISIONAL,
        duration_mode=DurationMode.REALIZED_DETERMINISTIC,
        honor_planned_starts=True,
        keep_initial_non_elective=False,
    )
    trace = simulate(hybrid, options)
    return {o.case_id: o.start_time for o in trace.outcomes}


def diff_schedules(provisional: Scenario, performed: Scenario, tolerance_minutes: float = 5.0) -> ScheduleDiff:
    prov_by_id = {c.case_id: c for c in provisional.cases}
    perf_by_id = {c.case_id: c for c in performed.cases}
    for case_id in prov_by_id.keys() & perf_by_id.keys():
        if prov_by_id[case_id].case_type is not perf_by_id[case_id].case_type:
            raise DuplicateCaseIdError(f"case {case_id!r} changes type between schedules")

    records: list[DiffRecord] = []

    for case in performed.cases:
        if case.case_id not in prov_by_id and case.was_executed:
            attribution = Attribution.ONLINE_DECISION if case.is_non_elective else Attribution.OFFLINE_DECISION
            records.append(
                DiffRecord(case.case_id, ChangeKind.ADDED, attribution, performed_value=case.realized_room)
            )

    for case in provisional.cases:
        twin = perf_by_id.get(case.case_id)
        if twin is None or not twin.was_executed:
            records.append(
                DiffRecord(
                    case.case_id,
                    ChangeKind.REMOVED,
                    Attribution.ONLINE_DECISION,
                    provisional_value=case.planned_room,
                )
            )

    # rank shared stayed cases per room: provisional sequence vs realized order
    shared = [
        (prov_by_id[cid], perf_by_id[cid])
        for cid in sorted(prov_by_id.keys() & perf_by_id.keys())
        if perf_by_id[cid].was_executed
    ]
    stayed = [
        (p, q) for p, q in shared if _has_planned(p) and q.realized_room == p.planned_room
    ]
    prov_rank: dict[str, int] = {}
    perf_rank: dict[str, int] = {}
    rooms_with_stayed = {p.planned_room for p, _ in stayed}
    for room_id in rooms_with_stayed:
        members = [(p, q) for p, q in stayed if p.planned_room == room_id]
        for rank, (p, _q) in enumerate(sorted(members, key=lambda t: (t[0].sequence_index, t[0].case_id))):
            prov_rank[p.case_id] = rank
        for rank, (_p, q) in enumerate(sorted(members, key=lambda t: (t[1].realized_start, t[1].case_id))):
            perf_rank[q.case_id] = rank

    cf_starts = counterfactual_starts(provisional, performed)

    for p, q in shared:
        if _has_planned(p) and q.realized_room != p.planned_room:
            records.append(
                DiffRecord(
                    p.case_id,
                    ChangeKind.ROOM_CHANGED,
                    Attribution.ONLINE_DECISION,
                    provisional_value=p.planned_room,
                    performed_value=q.realized_room,
                )
            )
            continue
        if p.case_id in prov_rank and prov_rank[p.case_id] != perf_rank[p.case_id]:
            records.append(
                DiffRecord(
                    p.case_id,
                    ChangeKind.RESEQUENCED,
                    Attribution.ONLINE_DECISION,
                    provisional_value=str(prov_rank[p.case_id]),
                    performed_value=str(perf_rank[p.case_id]),
                )
            )
            continue
        predicted = cf_starts.get(p.case_id)
        if predicted is None:
            continue
        drift = q.realized_start - predicted  # type: ignore[operator]
        if abs(drift) > tolerance_minutes:
            records.append(
                DiffRecord(
                    p.case_id,
                    ChangeKind.START_DRIFT,
                    Attribution.ONLINE_DECISION,
                    provisional_value=str(predicted),
                    performed_value=str(q.realized_start),
                    drift_minutes=drift,
                )
            )

    records.sort(key=lambda r: (r.change.value, r.case_id))
    return ScheduleDiff(records=tuple(records))
