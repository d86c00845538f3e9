"""Generation of additional non-elective arrivals (homogeneous Poisson process)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ortwin.model import CaseType, DurationSpec, PhaseDurations, SurgicalCase, TimePoint
from ortwin.sampling import sample_value


@dataclass(frozen=True)
class ArrivalTemplate:
    weight: float
    surgeon_id: str
    preoperative: DurationSpec
    phases: PhaseDurations

    def __post_init__(self):
        if not (self.weight > 0):
            raise ValueError("template weight must be > 0")


@dataclass(frozen=True)
class ArrivalGeneratorConfig:
    rate_per_hour: float
    window: tuple[TimePoint, TimePoint]
    templates: tuple[ArrivalTemplate, ...]
    arrival_replications: int = 1

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(self.templates))
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        if self.rate_per_hour < 0 or not math.isfinite(self.rate_per_hour):
            raise ValueError("rate_per_hour must be a finite value >= 0")
        if not self.window[0] < self.window[1]:
            raise ValueError("arrival window start must precede its end")
        if not self.templates:
            raise ValueError("at least one arrival template is required")
        if self.arrival_replications < 1:
            raise ValueError("arrival_replications must be >= 1")


def generate_arrivals(
    config: ArrivalGeneratorConfig,
    rng: np.random.Generator,
    existing_ids: set[str] | None = None,
    id_prefix: str = "injected",
) -> list[SurgicalCase]:
    """Draw one day's worth of urgent arrivals, sorted by arrival time.

    Inter-arrival gaps are exponential (inverse-CDF on rng.random() so the
    draw sequence is fully documented); each arrival picks a template by
    weight and samples its preoperative duration.
    """
    if config.rate_per_hour == 0:
        return []
    taken = set(existing_ids or ())
    rate_per_min = config.rate_per_hour / 60.0
    total_weight = sum(t.weight for t in config.templates)
    out: list[SurgicalCase] = []
    t = config.window[0]
    while True:
        t += -math.log1p(-rng.random()) / rate_per_min
        if t >= config.window[1]:
            break
        pick = rng.random() * total_weight
        acc = 0.0
        template = config.templates[-1]
        for cand in config.templates:
            acc += cand.weight
            if pick < acc:
                template = cand
                break
        preop = sample_value(template.preoperative, rng)
        case_id = f"{id_prefix}-{len(out) + 1:03d}"
        while case_id in taken:
            case_id += "x"
        taken.add(case_id)
        out.append(
            SurgicalCase(
                case_id=case_id,
                case_type=CaseType.NON_ELECTIVE,
                surgeon_id=template.surgeon_id,
                phases=template.phases,
                arrival_time=t,
                preoperative_duration=preop,
            )
        )
    return out
