from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ortwin.engine import DurationMode, SimOptions, Strategy
from ortwin.fixtures import load_fixture
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
    deterministic,
    phases_from_minutes,
)


def make_elective(case_id, room, seq, start, swa=10, swoa=5, proc=60, rev=15, surgeon="drA", realized=True):
    phases = phases_from_minutes(swa, swoa, proc, rev, realized=realized)
    return SurgicalCase(
        case_id=case_id,
        case_type=CaseType.ELECTIVE,
        surgeon_id=surgeon,
        phases=phases,
        planned_room=room,
        sequence_index=seq,
        planned_start=float(start),
        realized_room=room if realized else None,
        realized_start=float(start) if realized else None,
    )


def make_urgent(case_id, arrival, preop, swa=10, swoa=5, proc=60, rev=15, surgeon="drU", room=None, start=None):
    phases = phases_from_minutes(swa, swoa, proc, rev, realized=True)
    return SurgicalCase(
        case_id=case_id,
        case_type=CaseType.NON_ELECTIVE,
        surgeon_id=surgeon,
        phases=phases,
        arrival_time=float(arrival),
        preoperative_duration=float(preop),
        realized_room=room,
        realized_start=float(start) if start is not None else None,
    )


def s1_scenario(c2_start=570.0, c2_proc=120):
    """One room 08:00-16:00 with two sequential electives (the worked example)."""
    rooms = (RoomShift("R1", 480.0, 960.0),)
    c1 = make_elective("c1", "R1", 0, 480, proc=60)
    c2 = make_elective("c2", "R1", 1, c2_start, proc=c2_proc)
    resources = ResourceConfig(surgeons=frozenset({"drA"}))
    return Scenario("s1", rooms, resources, (c1, c2), ScheduleKind.PROVISIONAL)


def provisional_options(**kw) -> SimOptions:
    return SimOptions(schedule_kind=ScheduleKind.PROVISIONAL, **kw)


def random_single_room_scenario(rng: np.random.Generator) -> Scenario:
    """Random one-room day; planned starts may collide so queueing kicks in."""
    n = int(rng.integers(1, 9))
    shift = RoomShift("R1", 480.0, 960.0)
    cases = []
    t = 480.0
    for i in range(n):
        t += float(rng.integers(-30, 90))
        t = max(t, 480.0)  # rooms open at shift start; plans never start earlier
        durs = (
            float(rng.integers(0, 15)),
            float(rng.integers(0, 10)),
            float(rng.integers(10, 120)),
            float(rng.integers(0, 25)),
        )
        cases.append(
            SurgicalCase(
                case_id=f"c{i:02d}",
                case_type=CaseType.ELECTIVE,
                surgeon_id=f"dr{i:02d}",
                phases=phases_from_minutes(*durs),
                planned_room="R1",
                sequence_index=i,
                planned_start=t,
            )
        )
        t += sum(durs)
    resources = ResourceConfig(surgeons=frozenset(c.surgeon_id for c in cases), enforce_anesth_capacity=False)
    return Scenario("rand-single", (shift,), resources, tuple(cases), ScheduleKind.PROVISIONAL)


def random_multi_scenario(rng: np.random.Generator, stochastic=False) -> tuple[Scenario, SimOptions]:
    """Random multi-room day with resource contention and urgent arrivals."""
    n_rooms = int(rng.integers(1, 6))
    rooms = tuple(
        RoomShift(f"R{r}", 480.0 + float(rng.integers(0, 4)) * 15.0, 900.0 + float(rng.integers(0, 5)) * 30.0)
        for r in range(n_rooms)
    )
    surgeons = [f"dr{i}" for i in range(int(rng.integers(1, 7)))]
    cases = []
    seq_counter = {r.room_id: 0 for r in rooms}
    for i in range(int(rng.integers(0, 13))):
        room = rooms[int(rng.integers(0, n_rooms))]
        if stochastic and rng.random() < 0.5:
            proc = DurationSpec(DurationKind.LOGNORMAL, float(np.log(rng.integers(20, 120))), 0.3)
        elif stochastic and rng.random() < 0.5:
            lo = float(rng.integers(10, 40))
            mode = lo + float(rng.integers(0, 40))
            proc = DurationSpec(DurationKind.TRIANGULAR, lo, mode, mode + float(rng.integers(0, 60)))
        else:
            proc = deterministic(float(rng.integers(10, 120)))
        phases = PhaseDurations(
            setup_with_anesth=deterministic(float(rng.integers(0, 15))),
            setup_without_anesth=deterministic(float(rng.integers(0, 10))),
            procedure=proc,
            reversal=deterministic(float(rng.integers(0, 20))),
        )
        cases.append(
            SurgicalCase(
                case_id=f"e{i:02d}",
                case_type=CaseType.ELECTIVE,
                surgeon_id=surgeons[int(rng.integers(0, len(surgeons)))],
                phases=phases,
                planned_room=room.room_id,
                sequence_index=seq_counter[room.room_id],
                planned_start=float(rng.integers(int(room.shift_start), int(room.shift_end))),
            )
        )
        seq_counter[room.room_id] += 1
    for i in range(int(rng.integers(0, 4))):
        cases.append(
            SurgicalCase(
                case_id=f"u{i:02d}",
                case_type=CaseType.NON_ELECTIVE,
                surgeon_id=surgeons[int(rng.integers(0, len(surgeons)))],
                phases=phases_from_minutes(
                    float(rng.integers(0, 15)),
                    float(rng.integers(0, 10)),
                    float(rng.integers(10, 90)),
                    float(rng.integers(0, 20)),
                ),
                arrival_time=float(rng.integers(420, 1000)),
                preoperative_duration=float(rng.integers(0, 120)),
            )
        )
    resources = ResourceConfig(
        anesthesiologist_count=int(rng.integers(1, 4)),
        surgeons=frozenset(surgeons),
        enforce_anesth_capacity=bool(rng.random() < 0.5),
        enforce_surgeon_exclusivity=bool(rng.random() < 0.8),
    )
    scenario = Scenario("rand-multi", rooms, resources, tuple(cases), ScheduleKind.PROVISIONAL)
    options = SimOptions(
        schedule_kind=ScheduleKind.PROVISIONAL,
        duration_mode=DurationMode.STOCHASTIC if stochastic else DurationMode.PLANNED_DETERMINISTIC,
        honor_planned_starts=bool(rng.random() < 0.8),
        strategy=(Strategy.FIRST_FIT, Strategy.BEST_FIT, Strategy.WORST_FIT)[int(rng.integers(0, 3))],
        base_seed=int(rng.integers(0, 2**31)),
    )
    return scenario, options


def executed_twin(provisional: Scenario, starts: dict[str, float] | None = None) -> Scenario:
    """Performed twin of a plan: realized placement mirrors the plan (or explicit starts)."""
    cases = []
    for case in provisional.cases:
        planned = case.phases.planned()
        start = (starts or {}).get(case.case_id, case.planned_start)
        cases.append(
            replace(
                case,
                realized_room=case.planned_room,
                realized_start=start,
                phases=replace(
                    case.phases,
                    realized_setup_with_anesth=planned[0],
                    realized_setup_without_anesth=planned[1],
                    realized_procedure=planned[2],
                    realized_reversal=planned[3],
                ),
            )
        )
    return replace(provisional, cases=tuple(cases), schedule_kind=ScheduleKind.PERFORMED)


@pytest.fixture(scope="session")
def fixture_bundle():
    return load_fixture("retrospective")


@pytest.fixture(scope="session")
def prospective_bundle():
    return load_fixture("prospective")
