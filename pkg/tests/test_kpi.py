import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_elective, make_urgent, provisional_options, random_multi_scenario, s1_scenario
from oracles import check_gantt_tiling, utilization_from_gantt
from ortwin.engine import CaseOutcome, SimulationTrace, Strategy, simulate
from ortwin.kpi import (
    GanttSegment,
    GanttState,
    KpiReport,
    KpiTargets,
    aggregate_replications,
    build_gantt,
    compute_kpis,
)
from ortwin.model import ResourceConfig, RoomShift, Scenario, ScheduleKind


def trace_with(outcomes, segments=(), horizon=960.0):
    return SimulationTrace(segments=tuple(segments), outcomes=tuple(outcomes), seed_used=0, horizon_end=horizon)


def outcome(case_id, room, start, end, wait=0.0):
    return CaseOutcome(case_id, room, start - wait, start, end, (start, start, start, start, end), wait)


ROOM = RoomShift("R1", 480.0, 960.0)


class TestBuildGantt:
    def test_empty_room(self):
        gantt = build_gantt(trace_with([]), [ROOM])
        assert [(s.state, s.start, s.end) for s in gantt] == [(GanttState.IDLE, 480.0, 960.0)]

    def test_s1_nine_segments(self):
        trace = simulate(s1_scenario(), provisional_options())
        gantt = build_gantt(trace, s1_scenario().rooms)
        expected = [
            (GanttState.SETUP_WITH_ANESTH, 480.0, 490.0),
            (GanttState.SETUP_WITHOUT_ANESTH, 490.0, 495.0),
            (GanttState.PROCEDURE, 495.0, 555.0),
            (GanttState.REVERSAL, 555.0, 570.0),
            (GanttState.SETUP_WITH_ANESTH, 570.0, 580.0),
            (GanttState.SETUP_WITHOUT_ANESTH, 580.0, 585.0),
            (GanttState.PROCEDURE, 585.0, 705.0),
            (GanttState.REVERSAL, 705.0, 720.0),
            (GanttState.IDLE, 720.0, 960.0),
        ]
        assert [(s.state, s.start, s.end) for s in gantt] == expected

    def test_case_straddling_shift_end_stays_single_segment(self):
        seg_a = GanttSegment("R1", GanttState.PROCEDURE, 480.0, 900.0, case_id="a")
        seg_gap_case = GanttSegment("R1", GanttState.PROCEDURE, 920.0, 1000.0, case_id="b")
        gantt = build_gantt(trace_with([], [seg_a, seg_gap_case], horizon=1000.0), [ROOM])
        assert [(s.state, s.start, s.end) for s in gantt] == [
            (GanttState.PROCEDURE, 480.0, 900.0),
            (GanttState.IDLE, 900.0, 920.0),
            (GanttState.PROCEDURE, 920.0, 1000.0),  # single segment past the shift end, no split
        ]

    def test_post_shift_gap_is_off_schedule(self):
        seg_a = GanttSegment("R1", GanttState.PROCEDURE, 480.0, 950.0, case_id="a")
        seg_b = GanttSegment("R1", GanttState.PROCEDURE, 1000.0, 1060.0, case_id="b", non_elective=True)
        gantt = build_gantt(trace_with([], [seg_a, seg_b], horizon=1060.0), [ROOM])
        assert [(s.state, s.start, s.end) for s in gantt] == [
            (GanttState.PROCEDURE, 480.0, 950.0),
            (GanttState.IDLE, 950.0, 960.0),
            (GanttState.OFF_SCHEDULE, 960.0, 1000.0),
            (GanttState.PROCEDURE, 1000.0, 1060.0),
        ]


class TestComputeKpis:
    def test_table_style_values_fail_default_targets(self):
        report = KpiReport.from_values(0.773, 0.096, KpiTargets())
        assert report.utilization_pass is False
        assert report.overtime_pass is False

    def test_boundary_targets_inclusive(self):
        report = KpiReport.from_values(0.85, 0.05, KpiTargets())
        assert report.utilization_pass is True
        assert report.overtime_pass is True

    def test_empty_schedule(self):
        report = compute_kpis(trace_with([]), [ROOM], KpiTargets())
        assert (report.utilization, report.overtime) == (0.0, 0.0)
        assert (report.utilization_pass, report.overtime_pass) == (False, True)

    def test_overtime_clipping_single_case(self):
        # 480-min shift; case busy 15:00-17:00: utilization 60/480, overtime 60/480
        trace = trace_with([outcome("c", "R1", 900.0, 1020.0)])
        report = compute_kpis(trace, [ROOM], KpiTargets())
        assert report.utilization == pytest.approx(0.125)
        assert report.overtime == pytest.approx(0.125)
        assert report.per_room["R1"].busy_in_shift == 60.0
        assert report.per_room["R1"].overtime_minutes == 60.0

    def test_waiting_statistics(self):
        trace = trace_with([outcome("a", "R1", 500.0, 560.0, wait=20.0), outcome("b", "R1", 600.0, 660.0, wait=0.0)])
        report = compute_kpis(trace, [ROOM], KpiTargets())
        assert report.mean_waiting_minutes == 10.0
        assert report.max_waiting_minutes == 20.0

    def test_no_overtime_when_no_case_ends_after_shift(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            scenario, options = random_multi_scenario(rng)
            trace = simulate(scenario, options)
            report = compute_kpis(trace, scenario.rooms, KpiTargets())
            if all(o.end_time <= scenario.room(o.room_id).shift_end for o in trace.outcomes):
                assert report.overtime == 0.0


class TestKpiGanttConsistency:
    def test_utilization_recomputed_from_gantt(self):
        rng = np.random.default_rng(88)
        for i in range(30):
            scenario, options = random_multi_scenario(rng, stochastic=bool(i % 2))
            trace = simulate(scenario, options)
            gantt = build_gantt(trace, scenario.rooms)
            assert check_gantt_tiling(gantt, scenario.rooms) == []
            report = compute_kpis(trace, scenario.rooms, KpiTargets())
            assert abs(utilization_from_gantt(gantt, scenario.rooms) - report.utilization) < 1e-9

    def test_scale_invariance(self):
        scenario = s1_scenario()
        trace = simulate(scenario, provisional_options())
        report = compute_kpis(trace, scenario.rooms, KpiTargets())
        doubled_rooms = [RoomShift(r.room_id, r.shift_start * 2, r.shift_end * 2) for r in scenario.rooms]
        doubled = trace_with(
            [
                CaseOutcome(
                    o.case_id,
                    o.room_id,
                    o.ready_time * 2,
                    o.start_time * 2,
                    o.end_time * 2,
                    tuple(b * 2 for b in o.phase_boundaries),
                    o.waiting_minutes * 2,
                )
                for o in trace.outcomes
            ],
            horizon=trace.horizon_end * 2,
        )
        scaled = compute_kpis(doubled, doubled_rooms, KpiTargets())
        assert scaled.utilization == report.utilization
        assert scaled.overtime == report.overtime


class TestAggregate:
    def make(self, value, targets=KpiTargets()):
        return KpiReport.from_values(value, 0.0, targets, mean_waiting=value * 10, max_waiting=value * 20)

    def test_identical_reports_zero_dispersion(self):
        targets = KpiTargets()
        summary = aggregate_replications([self.make(0.5)] * 8, targets)
        stats = summary.stats["utilization"]
        assert (stats.mean, stats.sample_stdev, stats.min, stats.max) == (0.5, 0.0, 0.5, 0.5)
        assert (stats.q05, stats.q50, stats.q95) == (0.5, 0.5, 0.5)
        assert stats.ci95_halfwidth == 0.0

    def test_two_point_stdev(self):
        summary = aggregate_replications([self.make(0.4), self.make(0.6)], KpiTargets())
        assert summary.stats["utilization"].mean == pytest.approx(0.5)
        assert summary.stats["utilization"].sample_stdev == pytest.approx(math.sqrt(0.02))

    def test_single_report_degenerate(self):
        summary = aggregate_replications([self.make(0.7)], KpiTargets())
        stats = summary.stats["utilization"]
        assert stats.sample_stdev == 0.0
        assert stats.ci95_halfwidth == 0.0
        assert (stats.q05, stats.q50, stats.q95) == (0.7, 0.7, 0.7)

    def test_hit_probability(self):
        targets = KpiTargets(utilization_target=0.5)
        reports = [self.make(0.4, targets), self.make(0.6, targets), self.make(0.7, targets), self.make(0.45, targets)]
        summary = aggregate_replications(reports, targets)
        assert summary.target_hit_probability["utilization"] == 0.5
        assert summary.target_hit_probability["overtime"] == 1.0

    def test_waiting_target_optional(self):
        targets = KpiTargets(waiting_max_minutes=5.0)
        summary = aggregate_replications([self.make(0.4, targets), self.make(0.6, targets)], targets)
        assert summary.target_hit_probability["mean_waiting_minutes"] == 0.5

    def test_nearest_rank_quantiles(self):
        values = [self.make(v / 100) for v in range(1, 101)]  # 0.01..1.00
        summary = aggregate_replications(values, KpiTargets())
        stats = summary.stats["utilization"]
        assert stats.q05 == pytest.approx(0.05)
        assert stats.q50 == pytest.approx(0.50)
        assert stats.q95 == pytest.approx(0.95)
