import numpy as np
import pytest

from ortwin.arrivals import ArrivalGeneratorConfig, ArrivalTemplate, generate_arrivals
from ortwin.model import CaseType, DurationKind, DurationSpec, deterministic, phases_from_minutes


def template(surgeon="drU", weight=1.0, preop=90.0):
    return ArrivalTemplate(
        weight=weight,
        surgeon_id=surgeon,
        preoperative=deterministic(preop),
        phases=phases_from_minutes(10, 5, 60, 15),
    )


def config(rate, window=(480.0, 960.0), templates=None, reps=1):
    return ArrivalGeneratorConfig(
        rate_per_hour=rate, window=window, templates=tuple(templates or [template()]), arrival_replications=reps
    )


class TestConfig:
    def test_rejects_bad_window(self):
        with pytest.raises(ValueError):
            config(1.0, window=(960.0, 480.0))

    def test_rejects_empty_templates(self):
        with pytest.raises(ValueError):
            ArrivalGeneratorConfig(1.0, (480.0, 960.0), ())

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            template(weight=0.0)


class TestGenerate:
    def test_rate_zero_yields_nothing(self):
        assert generate_arrivals(config(0.0), np.random.default_rng(0)) == []

    def test_poisson_mean_count(self):
        # rate 2/h over 8 h: expected count 16; SE of the mean over 1000 days is ~0.13
        cfg = config(2.0)
        counts = [len(generate_arrivals(cfg, np.random.default_rng(seed))) for seed in range(1000)]
        assert abs(sum(counts) / len(counts) - 16.0) < 0.8

    def test_all_arrivals_in_window_and_sorted(self):
        cfg = config(3.0, window=(600.0, 720.0))
        for seed in range(50):
            arrivals = generate_arrivals(cfg, np.random.default_rng(seed))
            times = [a.arrival_time for a in arrivals]
            assert times == sorted(times)
            assert all(600.0 <= t < 720.0 for t in times)
            assert all(a.case_type is CaseType.NON_ELECTIVE for a in arrivals)
            assert all(a.preoperative_duration == 90.0 for a in arrivals)

    def test_template_weights_respected(self):
        cfg = config(4.0, templates=[template("drA", weight=3.0), template("drB", weight=1.0)])
        rng = np.random.default_rng(5)
        picks = [a.surgeon_id for _ in range(200) for a in generate_arrivals(cfg, rng)]
        share = picks.count("drA") / len(picks)
        assert 0.70 < share < 0.80

    def test_stochastic_preop_sampled(self):
        tmpl = ArrivalTemplate(
            weight=1.0,
            surgeon_id="drU",
            preoperative=DurationSpec(DurationKind.TRIANGULAR, 30.0, 60.0, 120.0),
            phases=phases_from_minutes(10, 5, 60, 15),
        )
        cfg = config(4.0, templates=[tmpl])
        rng = np.random.default_rng(7)
        preops = [a.preoperative_duration for _ in range(200) for a in generate_arrivals(cfg, rng)]
        assert all(30.0 <= p <= 120.0 for p in preops)
        assert abs(sum(preops) / len(preops) - 70.0) < 3.0

    def test_fresh_ids_avoid_collisions(self):
        cfg = config(5.0)
        arrivals = generate_arrivals(cfg, np.random.default_rng(3), existing_ids={"injected-001"})
        assert arrivals
        assert all(a.case_id != "injected-001" for a in arrivals)
        assert len({a.case_id for a in arrivals}) == len(arrivals)

    def test_reproducible_given_stream(self):
        cfg = config(2.0)
        a = generate_arrivals(cfg, np.random.default_rng(11))
        b = generate_arrivals(cfg, np.random.default_rng(11))
        assert [(x.case_id, x.arrival_time) for x in a] == [(y.case_id, y.arrival_time) for y in b]
