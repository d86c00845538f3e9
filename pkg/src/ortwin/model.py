"""Domain model for one day of operating-room schedule execution.

All types are immutable value objects; construction enforces the local
invariants (raising ValueError), while schedule-level consistency is
reported as data by ortwin.validate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Optional

from ortwin.errors import PreconditionError

# Minutes since midnight of the simulated day; > 1440 is post-midnight overtime.
TimePoint = float


class DurationKind(str, Enum):
    DETERMINISTIC = "deterministic"
    LOGNORMAL = "lognormal"
    TRIANGULAR = "triangular"


class CaseType(str, Enum):
    ELECTIVE = "elective"
    NON_ELECTIVE = "non_elective"


class ScheduleKind(str, Enum):
    PROVISIONAL = "provisional"
    PERFORMED = "performed"


class ViolationKind(str, Enum):
    ROOM_OVERLAP = "ROOM_OVERLAP"
    SURGEON_CONFLICT = "SURGEON_CONFLICT"
    ANESTH_CAPACITY_EXCEEDED = "ANESTH_CAPACITY_EXCEEDED"
    OUTSIDE_SHIFT = "OUTSIDE_SHIFT"
    MISSING_FIELD = "MISSING_FIELD"
    SEQUENCE_GAP = "SEQUENCE_GAP"


PHASE_NAMES = ("setup_with_anesth", "setup_without_anesth", "procedure", "reversal")
PHASE_TOKENS = ("SWA", "SWOA", "PROC", "REV")


def _check_time(value: float, what: str) -> None:
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{what} must be a finite non-negative minute count, got {value!r}")


@dataclass(frozen=True)
class DurationSpec:
    """One phase duration: a point value or a parametric distribution.

    deterministic: p1 = minutes. lognormal: p1 = mu, p2 = sigma of the
    underlying normal. triangular: p1 = min, p2 = mode, p3 = max.
    """

    kind: DurationKind
    p1: float
    p2: float = 0.0
    p3: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "p3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{self.kind.value} parameter {name} must be finite")
        if self.kind is DurationKind.DETERMINISTIC and self.p1 < 0:
            raise ValueError("deterministic duration must be >= 0")
        if self.kind is DurationKind.LOGNORMAL and self.p2 < 0:
            raise ValueError("lognormal sigma must be >= 0")
        if self.kind is DurationKind.TRIANGULAR:
            if not (0 <= self.p1 <= self.p2 <= self.p3):
                raise ValueError("triangular requires 0 <= min <= mode <= max")

    @property
    def planned_value(self) -> float:
        """Deterministic stand-in used by planned-deterministic runs.

        Chosen so a zero-variance draw equals it exactly: the value itself,
        the lognormal median e^mu, or the triangular mode.
        """
        if self.kind is DurationKind.DETERMINISTIC:
            return self.p1
        if self.kind is DurationKind.LOGNORMAL:
            return math.exp(self.p1)
        return self.p2

    @property
    def mean(self) -> float:
        """Analytic mean of the distribution."""
        if self.kind is DurationKind.DETERMINISTIC:
            return self.p1
        if self.kind is DurationKind.LOGNORMAL:
            return math.exp(self.p1 + self.p2 * self.p2 / 2.0)
        return (self.p1 + self.p2 + self.p3) / 3.0

    @property
    def is_deterministic(self) -> bool:
        return self.kind is DurationKind.DETERMINISTIC


def deterministic(minutes: float) -> DurationSpec:
    return DurationSpec(DurationKind.DETERMINISTIC, minutes)


@dataclass(frozen=True)
class PhaseDurations:
    """Duration specs for the four case phases, plus realized minutes when known.

    Phase order is fixed: setup with anesthesiologist, setup without,
    procedure, reversal. Zero-duration phases are skipped downstream.
    """

    setup_with_anesth: DurationSpec
    setup_without_anesth: DurationSpec
    procedure: DurationSpec
    reversal: DurationSpec
    realized_setup_with_anesth: Optional[float] = None
    realized_setup_without_anesth: Optional[float] = None
    realized_procedure: Optional[float] = None
    realized_reversal: Optional[float] = None

    def __post_init__(self):
        for name, value in zip(PHASE_NAMES, self.realized()):
            if value is not None:
                _check_time(value, f"realized {name}")

    def specs(self) -> tuple[DurationSpec, DurationSpec, DurationSpec, DurationSpec]:
        return (self.setup_with_anesth, self.setup_without_anesth, self.procedure, self.reversal)

    def realized(self) -> tuple[Optional[float], ...]:
        return (
            self.realized_setup_with_anesth,
            self.realized_setup_without_anesth,
            self.realized_procedure,
            self.realized_reversal,
        )

    def planned(self) -> tuple[float, float, float, float]:
        a, b, c, d = (s.planned_value for s in self.specs())
        return (a, b, c, d)

    @property
    def has_realized(self) -> bool:
        return all(v is not None for v in self.realized())

    def realized_or_raise(self, case_id: str) -> tuple[float, float, float, float]:
        vals = self.realized()
        if any(v is None for v in vals):
            missing = [n for n, v in zip(PHASE_NAMES, vals) if v is None]
            raise PreconditionError(f"case {case_id!r} lacks realized minutes for: {', '.join(missing)}")
        return vals  # type: ignore[return-value]

    @property
    def all_deterministic(self) -> bool:
        return all(s.is_deterministic for s in self.specs())


def phases_from_minutes(swa: float, swoa: float, proc: float, rev: float, *, realized: bool = False) -> PhaseDurations:
    p = PhaseDurations(deterministic(swa), deterministic(swoa), deterministic(proc), deterministic(rev))
    if realized:
        p = replace(
            p,
            realized_setup_with_anesth=swa,
            realized_setup_without_anesth=swoa,
            realized_procedure=proc,
            realized_reversal=rev,
        )
    return p


@dataclass(frozen=True)
class RoomShift:
    room_id: str
    shift_start: TimePoint
    shift_end: TimePoint

    def __post_init__(self):
        _check_time(self.shift_start, "shift_start")
        _check_time(self.shift_end, "shift_end")
        if not self.shift_start < self.shift_end:
            raise ValueError(f"room {self.room_id!r}: shift_start must precede shift_end")

    @property
    def shift_minutes(self) -> float:
        return self.shift_end - self.shift_start


@dataclass(frozen=True)
class ResourceConfig:
    anesthesiologist_count: int = 1
    surgeons: frozenset[str] = frozenset()
    enforce_anesth_capacity: bool = False
    enforce_surgeon_exclusivity: bool = True

    def __post_init__(self):
        if self.anesthesiologist_count < 0:
            raise ValueError("anesthesiologist_count must be >= 0")
        object.__setattr__(self, "surgeons", frozenset(self.surgeons))


@dataclass(frozen=True)
class SurgicalCase:
    case_id: str
    case_type: CaseType
    surgeon_id: str
    phases: PhaseDurations
    planned_room: Optional[str] = None
    sequence_index: Optional[int] = None
    planned_start: Optional[TimePoint] = None
    arrival_time: Optional[TimePoint] = None
    preoperative_duration: Optional[float] = None
    realized_room: Optional[str] = None
    realized_start: Optional[TimePoint] = None

    def __post_init__(self):
        for name in ("planned_start", "arrival_time", "preoperative_duration", "realized_start"):
            value = getattr(self, name)
            if value is not None:
                _check_time(value, name)
        if self.sequence_index is not None and self.sequence_index < 0:
            raise ValueError("sequence_index must be >= 0")

    @property
    def is_elective(self) -> bool:
        return self.case_type is CaseType.ELECTIVE

    @property
    def is_non_elective(self) -> bool:
        return self.case_type is CaseType.NON_ELECTIVE

    @property
    def was_executed(self) -> bool:
        """A performed-schedule case counts as executed when its realized placement is recorded."""
        return self.realized_room is not None and self.realized_start is not None

    @property
    def non_elective_ready(self) -> float:
        if self.arrival_time is None or self.preoperative_duration is None:
            raise PreconditionError(f"case {self.case_id!r} lacks arrival_time/preoperative_duration")
        return self.arrival_time + self.preoperative_duration


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    rooms: tuple[RoomShift, ...]
    resources: ResourceConfig
    cases: tuple[SurgicalCase, ...]
    schedule_kind: ScheduleKind

    def __post_init__(self):
        object.__setattr__(self, "rooms", tuple(self.rooms))
        object.__setattr__(self, "cases", tuple(self.cases))
        room_ids = [r.room_id for r in self.rooms]
        if len(set(room_ids)) != len(room_ids):
            raise ValueError("room_ids must be unique")
        case_ids = [c.case_id for c in self.cases]
        if len(set(case_ids)) != len(case_ids):
            raise ValueError("case_ids must be unique")

    @property
    def room_ids(self) -> tuple[str, ...]:
        return tuple(r.room_id for r in self.rooms)

    def room_index(self, room_id: str) -> int:
        return self.room_ids.index(room_id)

    def room(self, room_id: str) -> RoomShift:
        for r in self.rooms:
            if r.room_id == room_id:
                return r
        raise KeyError(room_id)

    def case(self, case_id: str) -> SurgicalCase:
        for c in self.cases:
            if c.case_id == case_id:
                return c
        raise KeyError(case_id)

    def electives(self) -> Iterator[SurgicalCase]:
        return (c for c in self.cases if c.is_elective)

    def non_electives(self) -> Iterator[SurgicalCase]:
        return (c for c in self.cases if c.is_non_elective)


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    case_ids: tuple[str, ...]
    message: str
    room_id: Optional[str] = None
    window: tuple[TimePoint, TimePoint] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "case_ids", tuple(self.case_ids))
        if self.window[0] > self.window[1]:
            raise ValueError("violation window start must be <= end")

    @property
    def is_error(self) -> bool:
        """OUTSIDE_SHIFT is informational (overtime is measured, not forbidden)."""
        return self.kind is not ViolationKind.OUTSIDE_SHIFT
