"""Duration sampling and reproducible replication streams.

Replication i of a run seeded with base_seed draws from
numpy SeedSequence(entropy=base_seed, spawn_key=(purpose, i)), with
purpose 0 reserved for phase durations and 1 for generated arrivals.
Streams are therefore independent across replications and individually
reproducible without running earlier replications.
"""

from __future__ import annotations

import math
from enum import IntEnum

import numpy as np

from ortwin.errors import PreconditionError
from ortwin.model import DurationKind, DurationSpec, PhaseDurations


class StreamPurpose(IntEnum):
    DURATIONS = 0
    ARRIVALS = 1


def replication_stream(base_seed: int, replication_index: int, purpose: StreamPurpose) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(int(purpose), replication_index))
    return np.random.default_rng(seq)


def sample_value(spec: DurationSpec, rng: np.random.Generator) -> float:
    """Draw one value; deterministic specs pass through without consuming randomness."""
    if spec.kind is DurationKind.DETERMINISTIC:
        return spec.p1
    if spec.kind is DurationKind.LOGNORMAL:
        z = rng.standard_normal()
        return max(0.0, math.exp(spec.p1 + spec.p2 * z))
    return max(0.0, _triangular(spec.p1, spec.p2, spec.p3, rng.random()))


def _triangular(a: float, c: float, b: float, u: float) -> float:
    # inverse CDF; degenerate a == b collapses to the point value
    if b == a:
        return a
    fc = (c - a) / (b - a)
    if u < fc:
        return a + math.sqrt(u * (b - a) * (c - a))
    return b - math.sqrt((1.0 - u) * (b - a) * (b - c))


def sample_phase_durations(
    phases: PhaseDurations,
    mode: str,
    rng: np.random.Generator | None = None,
    *,
    case_id: str = "?",
) -> tuple[float, float, float, float]:
    """Resolve the four phase durations for one case under the given duration mode.

    planned_deterministic uses each spec's planned value, realized_deterministic
    the recorded minutes, stochastic one draw per non-deterministic spec.
    """
    if mode == "planned_deterministic":
        return phases.planned()
    if mode == "realized_deterministic":
        return phases.realized_or_raise(case_id)
    if mode == "stochastic":
        if rng is None:
            raise PreconditionError("stochastic sampling needs a random stream")
        a, b, c, d = (sample_value(s, rng) for s in phases.specs())
        return (a, b, c, d)
    raise PreconditionError(f"unknown duration mode {mode!r}")
