"""Room-selection policies for a non-elective case at its ready time.

Slack is the remaining shift-end margin of a candidate placement
(shift_end - completion). Best fit minimizes non-negative slack, worst fit
maximizes it; when no room has non-negative slack both fall back to the
completion-minimizing room, so they coincide in the overtime regime.
All ties break on the lowest priority_index (scenario room-list order).
"""

from __future__ import annotations

from dataclasses import dataclass

from ortwin.errors import EmptyRoomSetError, UnassignableCaseError
from ortwin.model import SurgicalCase, TimePoint

STRATEGY_TOKENS = ("real_life", "first_fit", "best_fit", "worst_fit")


@dataclass(frozen=True)
class RoomStateSnapshot:
    """A room as the dispatcher sees it when an urgent case becomes ready.

    free_at is the end of the last committed (started) activity, or the
    shift start if nothing has started yet.
    """

    room_id: str
    priority_index: int
    free_at: TimePoint
    shift_end: TimePoint


@dataclass(frozen=True)
class CandidateEvaluation:
    room_id: str
    priority_index: int
    est: TimePoint  # earliest start: max(ready, free_at)
    completion: TimePoint  # est + total busy minutes
    slack: float  # shift_end - completion; negative when the case cannot finish in shift


def evaluate_candidates(
    rooms: list[RoomStateSnapshot], ready: TimePoint, total_busy: float
) -> list[CandidateEvaluation]:
    if not rooms:
        raise EmptyRoomSetError("no candidate rooms to evaluate")
    if total_busy < 0:
        raise ValueError("total_busy must be >= 0")
    out = []
    for room in rooms:
        est = ready if ready > room.free_at else room.free_at
        completion = est + total_busy
        out.append(
            CandidateEvaluation(
                room.room_id, room.priority_index, est, completion, room.shift_end - completion
            )
        )
    return out


def assign_first_fit(evals: list[CandidateEvaluation], ready: TimePoint) -> str:
    """Lowest-priority room already idle at ready time; else the earliest-start room."""
    if not evals:
        raise EmptyRoomSetError("no candidate rooms")
    idle = [e for e in evals if e.est <= ready]  # est == ready iff free_at <= ready
    if idle:
        return min(idle, key=lambda e: e.priority_index).room_id
    return min(evals, key=lambda e: (e.est, e.priority_index)).room_id


def assign_best_fit(evals: list[CandidateEvaluation]) -> str:
    return _fit(evals, worst=False)


def assign_worst_fit(evals: list[CandidateEvaluation]) -> str:
    return _fit(evals, worst=True)


def _fit(evals: list[CandidateEvaluation], *, worst: bool) -> str:
    if not evals:
        raise EmptyRoomSetError("no candidate rooms")
    fitting = [e for e in evals if e.slack >= 0]
    if fitting:
        if worst:
            chosen = min(fitting, key=lambda e: (-e.slack, e.priority_index))
        else:
            chosen = min(fitting, key=lambda e: (e.slack, e.priority_index))
        return chosen.room_id
    # no room can finish within its shift: minimize the completion time,
    # i.e. this case's contribution to overtime; BF and WF coincide here
    chosen = min(evals, key=lambda e: (e.completion, e.priority_index))
    return chosen.room_id


def assign_real_life(case: SurgicalCase) -> str:
    """Replay the recorded placement verbatim."""
    if case.realized_room is None:
        raise UnassignableCaseError(case.case_id, "real_life strategy needs a realized room")
    return case.realized_room


def assign(strategy: str, evals: list[CandidateEvaluation], ready: TimePoint) -> str:
    if strategy == "first_fit":
        return assign_first_fit(evals, ready)
    if strategy == "best_fit":
        return assign_best_fit(evals)
    if strategy == "worst_fit":
        return assign_worst_fit(evals)
    raise ValueError(f"unknown or non-evaluative strategy {strategy!r}")
