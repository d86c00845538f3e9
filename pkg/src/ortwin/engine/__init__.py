"""Discrete-event execution of one day's operating-room schedule.

The engine is a greedy earliest-feasible-start dispatcher over per-room FIFO
queues, equivalent to an event-calendar simulation for non-preemptive
schedules: at each step it commits the case start with the smallest feasible
time (ties: lowest room index; within-queue and arrival ties pre-sorted by
case id), or processes the next urgent arrival when that is strictly
earlier. A case start is the max of its ready/earliest-start bound, the room
free time, its surgeon's free time (procedure end of the surgeon's previous
case), and, when capacity is enforced and the case has a setup-with-anesth
phase, the earliest anesthesiologist free time. Urgent cases are assigned a
room at their ready time by the configured strategy and appended as the last
case of that room.

The inner loop runs in the compiled kernel (ortwin.engine._core) when it is
available, otherwise in the pure-Python twin; set OR_TWIN_PURE=1 to force
the fallback. Both kernels are bit-identical by construction.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from ortwin.arrivals import ArrivalGeneratorConfig, generate_arrivals
from ortwin.errors import PreconditionError, UnassignableCaseError
from ortwin.kpi import PHASE_STATES, GanttSegment
from ortwin.model import Scenario, ScheduleKind, SurgicalCase, TimePoint
from ortwin.sampling import StreamPurpose, replication_stream, sample_phase_durations
from ortwin.strategies import assign_real_life

# A case that cannot start before 08:00 of the next day is unassignable.
HORIZON_CAP = 32 * 60.0


def _load_kernel():
    if not os.environ.get("OR_TWIN_PURE"):
        try:
            from ortwin.engine import _core

            return _core
        except ImportError:
            pass
    from ortwin.engine import _pycore

    return _pycore


KERNEL = _load_kernel()


def kernel_name() -> str:
    """Which dispatch kernel is active: "compiled" or "pure"."""
    return KERNEL.KERNEL_NAME


class DurationMode(str, Enum):
    PLANNED_DETERMINISTIC = "planned_deterministic"
    REALIZED_DETERMINISTIC = "realized_deterministic"
    STOCHASTIC = "stochastic"


class Strategy(str, Enum):
    REAL_LIFE = "real_life"
    FIRST_FIT = "first_fit"
    BEST_FIT = "best_fit"
    WORST_FIT = "worst_fit"


_STRATEGY_CODE = {
    Strategy.REAL_LIFE: 0,
    Strategy.FIRST_FIT: 1,
    Strategy.BEST_FIT: 2,
    Strategy.WORST_FIT: 3,
}


@dataclass(frozen=True)
class SimOptions:
    schedule_kind: ScheduleKind
    duration_mode: DurationMode = DurationMode.PLANNED_DETERMINISTIC
    honor_planned_starts: bool = True
    keep_initial_non_elective: bool = True
    inject_arrivals: Optional[ArrivalGeneratorConfig] = None
    strategy: Strategy = Strategy.FIRST_FIT
    replications: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not (0 <= self.base_seed < 2**64):
            raise ValueError("base_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class CaseOutcome:
    case_id: str
    room_id: str
    ready_time: TimePoint
    start_time: TimePoint
    end_time: TimePoint
    phase_boundaries: tuple[TimePoint, TimePoint, TimePoint, TimePoint, TimePoint]
    waiting_minutes: float

    def __post_init__(self):
        if not (self.ready_time <= self.start_time <= self.end_time):
            raise ValueError("outcome times must satisfy ready <= start <= end")


@dataclass(frozen=True)
class SimulationTrace:
    segments: tuple[GanttSegment, ...]
    outcomes: tuple[CaseOutcome, ...]
    seed_used: int
    horizon_end: TimePoint
    # bookkeeping only: identical replications compare equal regardless of index
    replication_index: int = field(default=0, compare=False)


def ready_time(case: SurgicalCase, options: SimOptions, scenario: Scenario) -> TimePoint:
    """When a case becomes eligible to start (and the waiting-time anchor)."""
    if case.is_non_elective:
        return case.non_elective_ready
    if options.honor_planned_starts:
        if case.planned_start is None:
            raise PreconditionError(f"elective case {case.case_id!r} has no planned_start")
        return case.planned_start
    room_id = case.planned_room or case.realized_room
    if room_id is None:
        raise PreconditionError(f"elective case {case.case_id!r} has no room assignment")
    return scenario.room(room_id).shift_start


def simulate(
    scenario: Scenario,
    options: SimOptions,
    replication_index: int = 0,
    *,
    _kernel=None,
) -> SimulationTrace:
    """Execute one replication; deterministic in (scenario, options, replication_index)."""
    kernel = _kernel if _kernel is not None else KERNEL
    rooms = scenario.rooms
    room_idx = {r.room_id: i for i, r in enumerate(rooms)}
    performed = options.schedule_kind is ScheduleKind.PERFORMED

    active: list[SurgicalCase] = []
    sched_entries: list[tuple[int, float, str, int]] = []  # (room, order_key, case_id, index)
    arrival_entries: list[tuple[float, str, int, int]] = []  # (ready, case_id, index, fixed_room)

    def add_scheduled(case: SurgicalCase, room_id: str, order_key: float) -> None:
        if room_id not in room_idx:
            raise PreconditionError(f"case {case.case_id!r} references unknown room {room_id!r}")
        sched_entries.append((room_idx[room_id], order_key, case.case_id, len(active)))
        active.append(case)

    def add_arrival(case: SurgicalCase, fixed_room: int) -> None:
        arrival_entries.append((case.non_elective_ready, case.case_id, len(active), fixed_room))
        active.append(case)

    for case in scenario.cases:
        if performed:
            if case.is_non_elective:
                if not options.keep_initial_non_elective:
                    continue
                if options.strategy is Strategy.REAL_LIFE:
                    if not case.was_executed:
                        continue  # never placed in reality, nothing to replay
                    add_scheduled(case, case.realized_room, case.realized_start)  # type: ignore[arg-type]
                else:
                    add_arrival(case, -1)  # re-decided from its arrival data
            else:
                if not case.was_executed:
                    continue  # absent from the performed record = not executed that day
                add_scheduled(case, case.realized_room, case.realized_start)  # type: ignore[arg-type]
        else:
            if case.is_elective:
                if case.planned_room is None or case.planned_start is None or case.sequence_index is None:
                    raise PreconditionError(f"elective case {case.case_id!r} lacks planned fields")
                add_scheduled(case, case.planned_room, float(case.sequence_index))
            else:
                if not options.keep_initial_non_elective:
                    continue
                if options.strategy is Strategy.REAL_LIFE:
                    room_id = assign_real_life(case)
                    if room_id not in room_idx:
                        raise PreconditionError(f"case {case.case_id!r} realized room {room_id!r} is unknown")
                    add_arrival(case, room_idx[room_id])
                else:
                    add_arrival(case, -1)

    if options.inject_arrivals is not None:
        if options.strategy is Strategy.REAL_LIFE:
            raise UnassignableCaseError("(injected)", "real_life strategy cannot place generated arrivals")
        arrival_rng = replication_stream(options.base_seed, replication_index, StreamPurpose.ARRIVALS)
        injected = generate_arrivals(
            options.inject_arrivals, arrival_rng, existing_ids={c.case_id for c in scenario.cases}
        )
        for case in injected:
            add_arrival(case, -1)

    n = len(active)
    duration_rng = (
        replication_stream(options.base_seed, replication_index, StreamPurpose.DURATIONS)
        if options.duration_mode is DurationMode.STOCHASTIC
        else None
    )
    durs = [
        sample_phase_durations(c.phases, options.duration_mode.value, duration_rng, case_id=c.case_id)
        for c in active
    ]

    lb = [0.0] * n
    ready = [0.0] * n
    anchor = [0.0] * n
    for room_r, _order, _cid, k in sched_entries:
        case = active[k]
        if performed:
            lb[k] = case.realized_start  # type: ignore[assignment]
            if case.is_non_elective:
                anchor[k] = case.non_elective_ready
            else:
                anchor[k] = case.planned_start if case.planned_start is not None else rooms[room_r].shift_start
        else:
            lb[k] = case.planned_start if options.honor_planned_starts else rooms[room_r].shift_start  # type: ignore[assignment]
            anchor[k] = lb[k]
        ready[k] = lb[k]
    fixed_room = [-1] * n
    for rdy, _cid, k, fixed in arrival_entries:
        lb[k] = rdy
        ready[k] = rdy
        anchor[k] = rdy
        fixed_room[k] = fixed

    sched_entries.sort(key=lambda e: (e[0], e[1], e[2]))
    arrival_entries.sort(key=lambda e: (e[0], e[1]))
    sched_flat = [e[3] for e in sched_entries]
    sched_off = [0] * (len(rooms) + 1)
    for room_r, *_ in sched_entries:
        sched_off[room_r + 1] += 1
    for r in range(len(rooms)):
        sched_off[r + 1] += sched_off[r]
    arrivals_order = [e[2] for e in arrival_entries]

    if scenario.resources.enforce_surgeon_exclusivity:
        surgeon_ids = sorted({c.surgeon_id for c in active})
        surgeon_map = {s: i for i, s in enumerate(surgeon_ids)}
        surgeon = [surgeon_map[c.surgeon_id] for c in active]
        n_surgeons = len(surgeon_ids)
    else:
        surgeon = [-1] * n
        n_surgeons = 0
    anesth_count = scenario.resources.anesthesiologist_count if scenario.resources.enforce_anesth_capacity else -1

    d0 = [d[0] for d in durs]
    d1 = [d[1] for d in durs]
    d2 = [d[2] for d in durs]
    d3 = [d[3] for d in durs]
    busy = [((a + b) + c) + d for a, b, c, d in durs]

    f64 = lambda xs: np.ascontiguousarray(xs, dtype=np.float64)
    i32 = lambda xs: np.ascontiguousarray(xs, dtype=np.intc)
    start_out = np.zeros(n, dtype=np.float64)
    room_out = np.full(n, -1, dtype=np.intc)
    err = kernel.dispatch(
        f64([r.shift_start for r in rooms]),
        f64([r.shift_end for r in rooms]),
        f64(lb),
        f64(ready),
        f64(d0),
        f64(d1),
        f64(d2),
        f64(d3),
        f64(busy),
        i32(surgeon),
        n_surgeons,
        i32(sched_flat),
        i32(sched_off),
        i32(arrivals_order),
        i32(fixed_room),
        anesth_count,
        _STRATEGY_CODE[options.strategy],
        HORIZON_CAP,
        start_out,
        room_out,
    )
    if err >= 0:
        raise UnassignableCaseError(active[err].case_id, f"cannot start before the {HORIZON_CAP:g}-minute horizon cap")

    starts = start_out.tolist()
    rooms_of = room_out.tolist()
    outcomes = []
    room_case_indices: list[list[int]] = [[] for _ in rooms]
    for k, case in enumerate(active):
        s = starts[k]
        t1 = s + d0[k]
        t2 = t1 + d1[k]
        t3 = t2 + d2[k]
        t4 = t3 + d3[k]
        ready_out = anchor[k] if anchor[k] <= s else s
        outcomes.append(
            CaseOutcome(
                case_id=case.case_id,
                room_id=rooms[rooms_of[k]].room_id,
                ready_time=ready_out,
                start_time=s,
                end_time=t4,
                phase_boundaries=(s, t1, t2, t3, t4),
                waiting_minutes=s - ready_out,
            )
        )
        room_case_indices[rooms_of[k]].append(k)

    segments: list[GanttSegment] = []
    horizon_end = max(r.shift_end for r in rooms) if rooms else 0.0
    for r, indices in enumerate(room_case_indices):
        indices.sort(key=lambda k: (starts[k], active[k].case_id))
        for k in indices:
            bounds = outcomes[k].phase_boundaries
            for phase in range(4):
                if bounds[phase + 1] > bounds[phase]:
                    segments.append(
                        GanttSegment(
                            room_id=rooms[r].room_id,
                            state=PHASE_STATES[phase],
                            start=bounds[phase],
                            end=bounds[phase + 1],
                            case_id=active[k].case_id,
                            non_elective=active[k].is_non_elective,
                        )
                    )
            if bounds[4] > horizon_end:
                horizon_end = bounds[4]

    return SimulationTrace(
        segments=tuple(segments),
        outcomes=tuple(outcomes),
        seed_used=options.base_seed,
        replication_index=replication_index,
        horizon_end=horizon_end,
    )


def run_replications(scenario: Scenario, options: SimOptions, *, jobs: int | None = 1) -> list[SimulationTrace]:
    """Run replications 0..N-1; each owns an independent, reproducible random stream."""
    count = options.replications
    if jobs is None or jobs <= 0:
        jobs = os.cpu_count() or 1
    if jobs == 1 or count == 1:
        return [simulate(scenario, options, i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda i: simulate(scenario, options, i), range(count)))
