"""The compiled and pure dispatch kernels must agree bit-for-bit."""

import numpy as np
import pytest

from conftest import executed_twin, random_multi_scenario, random_single_room_scenario
from ortwin import dataio
from ortwin.engine import DurationMode, SimOptions, Strategy, _pycore, simulate
from ortwin.model import ScheduleKind
from ortwin.strategies import RoomStateSnapshot, assign, evaluate_candidates

try:
    from ortwin.engine import _core
except ImportError:
    _core = None

needs_compiled = pytest.mark.skipif(_core is None, reason="compiled kernel not built")


@needs_compiled
def test_kernels_bit_identical_on_random_scenarios():
    from ortwin.errors import UnassignableCaseError

    rng = np.random.default_rng(101)
    for i in range(150):
        scenario, options = random_multi_scenario(rng, stochastic=bool(i % 2))
        try:
            pure = simulate(scenario, options, i % 7, _kernel=_pycore)
        except UnassignableCaseError as exc:
            with pytest.raises(UnassignableCaseError) as caught:
                simulate(scenario, options, i % 7, _kernel=_core)
            assert str(caught.value) == str(exc)  # same case, same reason
            continue
        compiled = simulate(scenario, options, i % 7, _kernel=_core)
        assert pure == compiled
        assert dataio.export_report(pure, "json") == dataio.export_report(compiled, "json")


@needs_compiled
def test_kernels_bit_identical_on_performed_replays():
    rng = np.random.default_rng(202)
    for _ in range(40):
        provisional = random_single_room_scenario(rng)
        performed = executed_twin(provisional)
        options = SimOptions(
            schedule_kind=ScheduleKind.PERFORMED,
            duration_mode=DurationMode.REALIZED_DETERMINISTIC,
            strategy=Strategy.REAL_LIFE,
            honor_planned_starts=False,
        )
        assert simulate(performed, options, _kernel=_pycore) == simulate(performed, options, _kernel=_core)


def test_pure_kernel_choose_matches_strategies_module():
    rng = np.random.default_rng(303)
    strategy_codes = {"first_fit": 1, "best_fit": 2, "worst_fit": 3}
    for _ in range(500):
        n_rooms = int(rng.integers(1, 7))
        room_free = [float(rng.integers(400, 1200)) for _ in range(n_rooms)]
        shift_end = [float(rng.integers(600, 1100)) for _ in range(n_rooms)]
        ready = float(rng.integers(400, 1200))
        busy = float(rng.integers(0, 240))
        snaps = [RoomStateSnapshot(f"R{i}", i, room_free[i], shift_end[i]) for i in range(n_rooms)]
        evals = evaluate_candidates(snaps, ready, busy)
        for name, code in strategy_codes.items():
            expected = assign(name, evals, ready)
            got = _pycore._choose_room(code, ready, busy, room_free, shift_end)
            assert f"R{got}" == expected, (name, room_free, shift_end, ready, busy)
