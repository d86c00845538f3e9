from dataclasses import replace

import numpy as np
import pytest

from conftest import executed_twin, make_elective, make_urgent, s1_scenario
from ortwin.errors import PreconditionError
from ortwin.model import (
    CaseType,
    DurationKind,
    DurationSpec,
    ResourceConfig,
    RoomShift,
    Scenario,
    ScheduleKind,
    SurgicalCase,
    ViolationKind,
    phases_from_minutes,
)
from ortwin.validate import constraint_audit, feasibility_check, validate_scenario


def two_room_scenario(cases, surgeons=("drA", "drB"), **resource_kw):
    rooms = (RoomShift("R1", 480.0, 960.0), RoomShift("R2", 480.0, 960.0))
    resources = ResourceConfig(surgeons=frozenset(surgeons), **resource_kw)
    return Scenario("s", rooms, resources, tuple(cases), ScheduleKind.PROVISIONAL)


class TestValidateScenario:
    def test_well_formed_two_case_scenario(self):
        assert validate_scenario(s1_scenario()) == []

    def test_elective_without_planned_room(self):
        case = SurgicalCase("c1", CaseType.ELECTIVE, "drA", phases_from_minutes(10, 5, 60, 15),
                            sequence_index=0, planned_start=480.0)
        scenario = two_room_scenario([case])
        kinds = [v.kind for v in validate_scenario(scenario)]
        assert kinds == [ViolationKind.MISSING_FIELD]

    def test_sequence_gap(self):
        c1 = make_elective("c1", "R1", 0, 480)
        c2 = replace(make_elective("c2", "R1", 2, 600), sequence_index=2)
        scenario = two_room_scenario([c1, c2], surgeons=("drA",))
        kinds = [v.kind for v in validate_scenario(scenario)]
        assert kinds == [ViolationKind.SEQUENCE_GAP]

    def test_dangling_room_reference(self):
        case = make_elective("c1", "R9", 0, 480)
        scenario = two_room_scenario([case], surgeons=("drA",))
        assert any(v.kind is ViolationKind.MISSING_FIELD and v.room_id == "R9" for v in validate_scenario(scenario))

    def test_non_elective_missing_arrival(self):
        case = SurgicalCase("u1", CaseType.NON_ELECTIVE, "drA", phases_from_minutes(10, 5, 60, 15))
        scenario = two_room_scenario([case], surgeons=("drA",))
        violations = validate_scenario(scenario)
        assert [v.kind for v in violations] == [ViolationKind.MISSING_FIELD]
        assert "arrival_time" in violations[0].message

    def test_unknown_surgeon(self):
        case = make_elective("c1", "R1", 0, 480, surgeon="drZ")
        scenario = two_room_scenario([case], surgeons=("drA",))
        assert len(validate_scenario(scenario)) == 1


class TestFeasibility:
    def test_s1_disjoint_intervals(self):
        scenario = s1_scenario()  # c1 [480,570], c2 [570,720]: touching, not overlapping
        assert feasibility_check(scenario) == []

    def test_room_overlap_window(self):
        scenario = s1_scenario(c2_start=540.0)  # c2 [540,690] overlaps c1 [480,570]
        violations = feasibility_check(scenario)
        assert [v.kind for v in violations] == [ViolationKind.ROOM_OVERLAP]
        assert violations[0].window == (540.0, 570.0)
        assert violations[0].case_ids == ("c1", "c2")

    def test_surgeon_conflict_across_rooms(self):
        c1 = make_elective("c1", "R1", 0, 480, surgeon="drA")
        c2 = make_elective("c2", "R2", 0, 500, surgeon="drA")
        scenario = two_room_scenario([c1, c2], surgeons=("drA",))
        violations = feasibility_check(scenario)
        assert [v.kind for v in violations] == [ViolationKind.SURGEON_CONFLICT]

    def test_surgeon_conflict_requires_enforcement(self):
        c1 = make_elective("c1", "R1", 0, 480, surgeon="drA")
        c2 = make_elective("c2", "R2", 0, 500, surgeon="drA")
        scenario = two_room_scenario([c1, c2], surgeons=("drA",), enforce_surgeon_exclusivity=False)
        assert feasibility_check(scenario) == []

    def test_anesth_capacity_exceeded(self):
        c1 = make_elective("c1", "R1", 0, 480, surgeon="drA")
        c2 = make_elective("c2", "R2", 0, 485, surgeon="drB")
        scenario = two_room_scenario([c1, c2], anesthesiologist_count=1, enforce_anesth_capacity=True)
        violations = feasibility_check(scenario)
        assert [v.kind for v in violations] == [ViolationKind.ANESTH_CAPACITY_EXCEEDED]
        assert violations[0].window == (485.0, 490.0)

    def test_outside_shift_is_warning(self):
        case = make_elective("c1", "R1", 0, 930)  # ends 1020 > 960
        scenario = two_room_scenario([case], surgeons=("drA",))
        violations = feasibility_check(scenario)
        assert [v.kind for v in violations] == [ViolationKind.OUTSIDE_SHIFT]
        assert not violations[0].is_error
        assert violations[0].window == (960.0, 1020.0)

    def test_stochastic_specs_rejected(self):
        case = make_elective("c1", "R1", 0, 480)
        case = replace(case, phases=replace(case.phases, procedure=DurationSpec(DurationKind.LOGNORMAL, 4.0, 0.3)))
        scenario = two_room_scenario([case], surgeons=("drA",))
        with pytest.raises(PreconditionError):
            feasibility_check(scenario)

    def test_invariant_under_room_reordering(self):
        c1 = make_elective("c1", "R1", 0, 480, surgeon="drA")
        c2 = make_elective("c2", "R2", 0, 500, surgeon="drA")
        scenario = two_room_scenario([c1, c2], surgeons=("drA",))
        flipped = replace(scenario, rooms=tuple(reversed(scenario.rooms)))
        def key(v):
            return (v.kind.value, v.case_ids, v.window)
        assert sorted(map(key, feasibility_check(scenario))) == sorted(map(key, feasibility_check(flipped)))


class TestConstraintAudit:
    def test_consistent_with_feasibility_when_identical(self):
        provisional = s1_scenario()
        performed = executed_twin(provisional)
        assert constraint_audit(performed) == []

    def test_realized_overlap(self):
        provisional = s1_scenario()
        performed = executed_twin(provisional, starts={"c2": 500.0})
        violations = constraint_audit(performed)
        assert [v.kind for v in violations] == [ViolationKind.ROOM_OVERLAP]

    def test_post_shift_end_is_informational(self):
        provisional = s1_scenario()
        performed = executed_twin(provisional, starts={"c2": 850.0})  # ends 1000 = 16:40
        violations = constraint_audit(performed)
        assert [v.kind for v in violations] == [ViolationKind.OUTSIDE_SHIFT]
        assert violations[0].window == (960.0, 1000.0)
        assert not violations[0].is_error

    def test_requires_performed_kind(self):
        with pytest.raises(PreconditionError):
            constraint_audit(s1_scenario())

    def test_missing_realized_durations(self):
        provisional = s1_scenario()
        performed = executed_twin(provisional)
        broken = replace(
            performed,
            cases=tuple(replace(c, phases=replace(c.phases, realized_procedure=None)) for c in performed.cases),
        )
        with pytest.raises(PreconditionError):
            constraint_audit(broken)


class TestRandomTimelines:
    def test_disjoint_by_construction_yields_no_overlap(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            cases = []
            t = 480.0
            for i in range(int(rng.integers(1, 8))):
                t += float(rng.integers(0, 30))
                proc = float(rng.integers(10, 90))
                cases.append(make_elective(f"c{i}", "R1", i, t, proc=proc, surgeon=f"dr{i}"))
                t += 10 + 5 + proc + 15
            scenario = Scenario(
                "r",
                (RoomShift("R1", 480.0, 2000.0),),
                ResourceConfig(surgeons=frozenset(c.surgeon_id for c in cases)),
                tuple(cases),
                ScheduleKind.PROVISIONAL,
            )
            kinds = {v.kind for v in feasibility_check(scenario)}
            assert ViolationKind.ROOM_OVERLAP not in kinds

    def test_injected_overlap_is_reported_exactly(self):
        c1 = make_elective("c1", "R1", 0, 480, proc=60)  # [480, 570]
        c2 = make_elective("c2", "R1", 1, 525, proc=60)  # [525, 615] overlaps
        scenario = two_room_scenario([c1, c2], surgeons=("drA",))
        violations = [v for v in feasibility_check(scenario) if v.kind is ViolationKind.ROOM_OVERLAP]
        assert len(violations) == 1
        assert violations[0].case_ids == ("c1", "c2")
