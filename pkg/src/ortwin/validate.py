"""Structural validation and deterministic constraint checking.

validate_scenario reports structural defects (missing fields, dangling room
references, sequence gaps). feasibility_check examines the planned timeline
of a provisional schedule; constraint_audit examines the realized timeline
of a performed one. Violations are data, not exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass

from ortwin.errors import PreconditionError
from ortwin.model import (
    CaseType,
    Scenario,
    ScheduleKind,
    SurgicalCase,
    Violation,
    ViolationKind,
)


def validate_scenario(scenario: Scenario) -> list[Violation]:
    """Return all structural violations; empty list iff the scenario is well-formed."""
    out: list[Violation] = []
    room_ids = set(scenario.room_ids)
    provisional = scenario.schedule_kind is ScheduleKind.PROVISIONAL

    for case in scenario.cases:
        missing: list[str] = []
        if case.is_non_elective:
            if case.arrival_time is None:
                missing.append("arrival_time")
            if case.preoperative_duration is None:
                missing.append("preoperative_duration")
        if case.is_elective and provisional:
            if case.planned_room is None:
                missing.append("planned_room")
            if case.planned_start is None:
                missing.append("planned_start")
            if case.sequence_index is None:
                missing.append("sequence_index")
        if missing:
            out.append(
                Violation(
                    ViolationKind.MISSING_FIELD,
                    (case.case_id,),
                    f"case {case.case_id!r} is missing: {', '.join(missing)}",
                )
            )
        for attr in ("planned_room", "realized_room"):
            ref = getattr(case, attr)
            if ref is not None and ref not in room_ids:
                out.append(
                    Violation(
                        ViolationKind.MISSING_FIELD,
                        (case.case_id,),
                        f"case {case.case_id!r} {attr} references unknown room {ref!r}",
                        room_id=ref,
                    )
                )
        if scenario.resources.surgeons and case.surgeon_id not in scenario.resources.surgeons:
            out.append(
                Violation(
                    ViolationKind.MISSING_FIELD,
                    (case.case_id,),
                    f"case {case.case_id!r} surgeon {case.surgeon_id!r} not in the configured surgeon pool",
                )
            )

    if provisional:
        out.extend(_sequence_gaps(scenario))
    return out


def _sequence_gaps(scenario: Scenario) -> list[Violation]:
    out: list[Violation] = []
    by_room: dict[str, list[SurgicalCase]] = {}
    for case in scenario.cases:
        if case.is_elective and case.planned_room is not None and case.sequence_index is not None:
            by_room.setdefault(case.planned_room, []).append(case)
    for room_id, cases in sorted(by_room.items()):
        indices = sorted(c.sequence_index for c in cases)  # type: ignore[arg-type]
        if indices != list(range(len(indices))):
            out.append(
                Violation(
                    ViolationKind.SEQUENCE_GAP,
                    tuple(sorted(c.case_id for c in cases)),
                    f"room {room_id!r} sequence indices {indices} are not contiguous from 0",
                    room_id=room_id,
                )
            )
    return out


@dataclass(frozen=True)
class _Interval:
    case_id: str
    room_id: str
    start: float
    end: float
    swa_end: float  # end of the setup-with-anesthesiologist phase
    surgeon_id: str
    elective: bool


def _planned_interval(case: SurgicalCase) -> _Interval:
    durs = [spec.p1 for spec in case.phases.specs()]
    start = case.planned_start
    assert start is not None and case.planned_room is not None
    return _Interval(
        case.case_id,
        case.planned_room,
        start,
        start + sum(durs),
        start + durs[0],
        case.surgeon_id,
        case.is_elective,
    )


def _realized_interval(case: SurgicalCase) -> _Interval:
    durs = case.phases.realized_or_raise(case.case_id)
    start = case.realized_start
    assert start is not None and case.realized_room is not None
    return _Interval(
        case.case_id,
        case.realized_room,
        start,
        start + sum(durs),
        start + durs[0],
        case.surgeon_id,
        case.is_elective,
    )


def feasibility_check(scenario: Scenario) -> list[Violation]:
    """Check the planned timeline of a provisional schedule.

    Requires a structurally valid scenario with all-deterministic phase specs.
    Overlap semantics are closed-open: touching intervals do not conflict.
    """
    if scenario.schedule_kind is not ScheduleKind.PROVISIONAL:
        raise PreconditionError("feasibility_check requires a provisional schedule")
    structural = validate_scenario(scenario)
    if structural:
        raise PreconditionError(f"scenario has {len(structural)} structural violation(s); fix them first")
    for case in scenario.cases:
        if not case.phases.all_deterministic:
            raise PreconditionError(f"case {case.case_id!r} has stochastic phase specs; feasibility needs deterministic ones")
    intervals = [
        _planned_interval(c)
        for c in scenario.cases
        if c.planned_room is not None and c.planned_start is not None
    ]
    return _timeline_violations(scenario, intervals)


def constraint_audit(scenario: Scenario) -> list[Violation]:
    """Check the realized timeline of a performed schedule.

    OUTSIDE_SHIFT findings are informational here: overtime is legal and
    measured by the KPI layer, not forbidden.
    """
    if scenario.schedule_kind is not ScheduleKind.PERFORMED:
        raise PreconditionError("constraint_audit requires a performed schedule")
    intervals = [_realized_interval(c) for c in scenario.cases if c.was_executed]
    return _timeline_violations(scenario, intervals)


def _timeline_violations(scenario: Scenario, intervals: list[_Interval]) -> list[Violation]:
    out: list[Violation] = []
    resources = scenario.resources

    by_room: dict[str, list[_Interval]] = {}
    for iv in intervals:
        by_room.setdefault(iv.room_id, []).append(iv)

    for room_id in scenario.room_ids:
        items = sorted(by_room.get(room_id, []), key=lambda iv: (iv.start, iv.case_id))
        for i, a in enumerate(items):
            for b in items[i + 1 :]:
                lo, hi = max(a.start, b.start), min(a.end, b.end)
                if lo < hi:
                    out.append(
                        Violation(
                            ViolationKind.ROOM_OVERLAP,
                            tuple(sorted((a.case_id, b.case_id))),
                            f"cases {a.case_id!r} and {b.case_id!r} overlap in room {room_id!r}",
                            room_id=room_id,
                            window=(lo, hi),
                        )
                    )

    if resources.enforce_surgeon_exclusivity:
        by_surgeon: dict[str, list[_Interval]] = {}
        for iv in intervals:
            by_surgeon.setdefault(iv.surgeon_id, []).append(iv)
        for surgeon_id, items in sorted(by_surgeon.items()):
            items = sorted(items, key=lambda iv: (iv.start, iv.case_id))
            for i, a in enumerate(items):
                for b in items[i + 1 :]:
                    if a.room_id == b.room_id:
                        continue  # same-room overlap already reported above
                    lo, hi = max(a.start, b.start), min(a.end, b.end)
                    if lo < hi:
                        out.append(
                            Violation(
                                ViolationKind.SURGEON_CONFLICT,
                                tuple(sorted((a.case_id, b.case_id))),
                                f"surgeon {surgeon_id!r} is double-booked across rooms {a.room_id!r} and {b.room_id!r}",
                                window=(lo, hi),
                            )
                        )

    if resources.enforce_anesth_capacity:
        out.extend(_anesth_capacity_violations(intervals, resources.anesthesiologist_count))

    for iv in intervals:
        if not iv.elective:
            continue
        shift = scenario.room(iv.room_id)
        if iv.end > shift.shift_end:
            out.append(
                Violation(
                    ViolationKind.OUTSIDE_SHIFT,
                    (iv.case_id,),
                    f"case {iv.case_id!r} runs {iv.end - shift.shift_end:g} min past the {iv.room_id!r} shift end",
                    room_id=iv.room_id,
                    window=(shift.shift_end, iv.end),
                )
            )
    return out


def _anesth_capacity_violations(intervals: list[_Interval], capacity: int) -> list[Violation]:
    """Sweep the setup-with-anesthesiologist segments; flag spans above capacity."""
    segments = [iv for iv in intervals if iv.swa_end > iv.start]
    # closed-open semantics: releases at time t happen before acquisitions at t
    events: list[tuple[float, int, str]] = []
    for iv in segments:
        events.append((iv.start, 1, iv.case_id))
        events.append((iv.swa_end, -1, iv.case_id))
    events.sort(key=lambda e: (e[0], e[1]))

    out: list[Violation] = []
    active: set[str] = set()
    over_since: float | None = None
    involved: set[str] = set()
    for time, delta, case_id in events:
        if delta == 1:
            active.add(case_id)
            if len(active) > capacity:
                if over_since is None:
                    over_since = time
                    involved = set(active)
                else:
                    involved.add(case_id)
        else:
            if over_since is not None and len(active) - 1 <= capacity:
                if time > over_since:
                    out.append(
                        Violation(
                            ViolationKind.ANESTH_CAPACITY_EXCEEDED,
                            tuple(sorted(involved)),
                            f"{len(involved)} concurrent anesthesiologist setups exceed capacity {capacity}",
                            window=(over_since, time),
                        )
                    )
                over_since = None
                involved = set()
            active.discard(case_id)
    return out


def error_level(violations: list[Violation]) -> list[Violation]:
    return [v for v in violations if v.is_error]
