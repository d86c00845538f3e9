"""Access to the bundled synthetic one-day dataset (6 rooms, 22 cases).

The day mirrors the pattern of interest: a full elective program plus two
urgent cases whose ready times (16:20 and 16:45) fall after every shift end,
so any insertion strategy can only place them in overtime.
"""

from __future__ import annotations

import math
from dataclasses import replace
from pathlib import Path

from ortwin.dataio import ScenarioBundle, load_scenario
from ortwin.model import DurationKind, DurationSpec, Scenario, ScheduleKind, SurgicalCase

DATA_DIR = Path(__file__).parent / "data"


def fixture_paths(kind: str = "retrospective") -> tuple[Path, Path, Path, Path]:
    config = DATA_DIR / f"config_{kind}.json"
    if not config.exists():
        raise ValueError(f"no bundled config for {kind!r}")
    return (DATA_DIR / "rooms.csv", DATA_DIR / "cases.csv", DATA_DIR / "durations.csv", config)


def load_fixture(kind: str = "retrospective") -> ScenarioBundle:
    return load_scenario(*fixture_paths(kind))


def provisional_twin(scenario: Scenario) -> Scenario:
    """The plan as it stood before the day: cases carrying full planned fields."""
    planned = tuple(
        c
        for c in scenario.cases
        if c.planned_room is not None and c.planned_start is not None and c.sequence_index is not None
    )
    return replace(scenario, cases=planned, schedule_kind=ScheduleKind.PROVISIONAL)


def stochastic_variant(scenario: Scenario, sigma: float = 0.2) -> Scenario:
    """Swap every deterministic procedure spec for a lognormal with the same planned value."""
    cases = []
    for case in scenario.cases:
        proc = case.phases.procedure
        if proc.is_deterministic and proc.p1 > 0:
            new_proc = DurationSpec(DurationKind.LOGNORMAL, math.log(proc.p1), sigma)
            cases.append(replace(case, phases=replace(case.phases, procedure=new_proc)))
        else:
            cases.append(case)
    return replace(scenario, cases=tuple(cases))
