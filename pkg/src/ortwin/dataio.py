"""Loading of the three-table input database plus canonical serialization.

CSV is the ingestion format (rooms.csv, cases.csv, durations.csv; UTF-8,
header row required, blank cell = absent). JSON is the canonical bundle and
report format: stable key order, fractions with 4 decimals, minute
quantities with 1 decimal, clock times as "HH:MM" (one decimal minute when
sub-minute). Identical inputs serialize to byte-identical documents; writes
go to a temp file followed by an atomic rename.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from ortwin.arrivals import ArrivalGeneratorConfig, ArrivalTemplate
from ortwin.diffing import DiffRecord, ScheduleDiff
from ortwin.engine import CaseOutcome, DurationMode, SimOptions, SimulationTrace, Strategy
from ortwin.errors import (
    DuplicateKeyError,
    ParseError,
    ReferentialError,
    UnsupportedFormatError,
)
from ortwin.kpi import GanttSegment, KpiReport, KpiStats, KpiTargets, ReplicationSummary, RoomKpi
from ortwin.model import (
    CaseType,
    DurationKind,
    DurationSpec,
    PhaseDurations,
    PHASE_NAMES,
    PHASE_TOKENS,
    ResourceConfig,
    RoomShift,
    Scenario,
    ScheduleKind,
    SurgicalCase,
    Violation,
    ViolationKind,
)
from ortwin.pipelines import ProspectiveReport, RetrospectiveReport
from ortwin.timefmt import format_hhmm, parse_hhmm

FORMAT_VERSION = "1"


# --- canonical JSON -----------------------------------------------------


class Frac(float):
    """Fraction rendered with 4 decimals."""


class Mins(float):
    """Minute quantity rendered with 1 decimal."""


class Clock(float):
    """Time point rendered as HH:MM."""


def emit_json(value: Any, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(value, Frac):
        return f"{float(value):.4f}"
    if isinstance(value, Mins):
        return f"{float(value):.1f}"
    if isinstance(value, Clock):
        return json.dumps(format_hhmm(float(value)))
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return json.dumps(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f'{pad}  {json.dumps(str(k))}: {emit_json(v, indent + 1)}' for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{pad}  {emit_json(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise UnsupportedFormatError(f"cannot serialize {type(value).__name__}")


def write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- scenario bundle ----------------------------------------------------


@dataclass(frozen=True)
class ScenarioBundle:
    scenario: Scenario
    options: SimOptions
    targets: KpiTargets
    arrivals: Optional[ArrivalGeneratorConfig]
    format_version: str = FORMAT_VERSION
    source_paths: tuple[str, ...] = field(default=(), compare=False)


def _spec_to_obj(spec: DurationSpec, realized: Optional[float]) -> dict:
    return {
        "kind": spec.kind.value,
        "p1": spec.p1,
        "p2": spec.p2,
        "p3": spec.p3,
        "realized_minutes": realized,
    }


def _spec_from_obj(obj: dict, where: str) -> tuple[DurationSpec, Optional[float]]:
    try:
        spec = DurationSpec(
            DurationKind(obj["kind"]), float(obj["p1"]), float(obj.get("p2") or 0.0), float(obj.get("p3") or 0.0)
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad duration spec: {exc}", file=where) from None
    realized = obj.get("realized_minutes")
    return spec, (float(realized) if realized is not None else None)


def _phases_to_obj(phases: PhaseDurations) -> dict:
    out = {}
    for name, spec, realized in zip(PHASE_NAMES, phases.specs(), phases.realized()):
        out[name] = _spec_to_obj(spec, realized)
    return out


def _phases_from_obj(obj: dict, where: str) -> PhaseDurations:
    specs = {}
    realized = {}
    for name in PHASE_NAMES:
        entry = obj.get(name)
        if entry is None:
            specs[name], realized[name] = DurationSpec(DurationKind.DETERMINISTIC, 0.0), None
        else:
            specs[name], realized[name] = _spec_from_obj(entry, where)
    return PhaseDurations(
        setup_with_anesth=specs["setup_with_anesth"],
        setup_without_anesth=specs["setup_without_anesth"],
        procedure=specs["procedure"],
        reversal=specs["reversal"],
        realized_setup_with_anesth=realized["setup_with_anesth"],
        realized_setup_without_anesth=realized["setup_without_anesth"],
        realized_procedure=realized["procedure"],
        realized_reversal=realized["reversal"],
    )


def _case_to_obj(case: SurgicalCase) -> dict:
    clock = lambda v: Clock(v) if v is not None else None
    return {
        "case_id": case.case_id,
        "case_type": case.case_type.value,
        "surgeon_id": case.surgeon_id,
        "planned_room": case.planned_room,
        "sequence_index": case.sequence_index,
        "planned_start": clock(case.planned_start),
        "arrival_time": clock(case.arrival_time),
        "preoperative_minutes": case.preoperative_duration,
        "realized_room": case.realized_room,
        "realized_start": clock(case.realized_start),
        "phases": _phases_to_obj(case.phases),
    }


def _case_from_obj(obj: dict, where: str) -> SurgicalCase:
    def clock(key: str) -> Optional[float]:
        value = obj.get(key)
        if value is None:
            return None
        return parse_hhmm(str(value), file=where, column=key)

    try:
        return SurgicalCase(
            case_id=str(obj["case_id"]),
            case_type=CaseType(obj["case_type"]),
            surgeon_id=str(obj["surgeon_id"]),
            phases=_phases_from_obj(obj.get("phases") or {}, where),
            planned_room=obj.get("planned_room"),
            sequence_index=(int(obj["sequence_index"]) if obj.get("sequence_index") is not None else None),
            planned_start=clock("planned_start"),
            arrival_time=clock("arrival_time"),
            preoperative_duration=(
                float(obj["preoperative_minutes"]) if obj.get("preoperative_minutes") is not None else None
            ),
            realized_room=obj.get("realized_room"),
            realized_start=clock("realized_start"),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad case record: {exc}", file=where) from None


def scenario_to_obj(scenario: Scenario) -> dict:
    return {
        "scenario_id": scenario.scenario_id,
        "schedule_kind": scenario.schedule_kind.value,
        "rooms": [
            {"room_id": r.room_id, "shift_start": Clock(r.shift_start), "shift_end": Clock(r.shift_end)}
            for r in scenario.rooms
        ],
        "resources": {
            "anesthesiologist_count": scenario.resources.anesthesiologist_count,
            "surgeons": sorted(scenario.resources.surgeons),
            "enforce_anesth_capacity": scenario.resources.enforce_anesth_capacity,
            "enforce_surgeon_exclusivity": scenario.resources.enforce_surgeon_exclusivity,
        },
        "cases": [_case_to_obj(c) for c in scenario.cases],
    }


def scenario_from_obj(obj: dict, where: str = "<bundle>") -> Scenario:
    try:
        rooms = tuple(
            RoomShift(
                str(r["room_id"]),
                parse_hhmm(str(r["shift_start"]), file=where, column="shift_start"),
                parse_hhmm(str(r["shift_end"]), file=where, column="shift_end"),
            )
            for r in obj["rooms"]
        )
        res = obj.get("resources") or {}
        cases = tuple(_case_from_obj(c, where) for c in obj.get("cases") or [])
        resources = ResourceConfig(
            anesthesiologist_count=int(res.get("anesthesiologist_count", 1)),
            surgeons=frozenset(res["surgeons"]) if res.get("surgeons") else frozenset(c.surgeon_id for c in cases),
            enforce_anesth_capacity=bool(res.get("enforce_anesth_capacity", False)),
            enforce_surgeon_exclusivity=bool(res.get("enforce_surgeon_exclusivity", True)),
        )
        return Scenario(
            scenario_id=str(obj.get("scenario_id", "scenario")),
            rooms=rooms,
            resources=resources,
            cases=cases,
            schedule_kind=ScheduleKind(obj["schedule_kind"]),
        )
    except ParseError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"bad scenario object: {exc}", file=where) from None


def options_to_obj(options: SimOptions) -> dict:
    return {
        "schedule_kind": options.schedule_kind.value,
        "duration_mode": options.duration_mode.value,
        "honor_planned_starts": options.honor_planned_starts,
        "keep_initial_non_elective": options.keep_initial_non_elective,
        "inject_arrivals": options.inject_arrivals is not None,
        "strategy": options.strategy.value,
        "replications": options.replications,
        "base_seed": options.base_seed,
    }


def options_from_obj(obj: dict, arrivals: Optional[ArrivalGeneratorConfig], where: str = "<config>") -> SimOptions:
    try:
        return SimOptions(
            schedule_kind=ScheduleKind(obj["schedule_kind"]),
            duration_mode=DurationMode(obj.get("duration_mode", "planned_deterministic")),
            honor_planned_starts=bool(obj.get("honor_planned_starts", True)),
            keep_initial_non_elective=bool(obj.get("keep_initial_non_elective", True)),
            inject_arrivals=arrivals if obj.get("inject_arrivals") else None,
            strategy=Strategy(obj.get("strategy", "first_fit")),
            replications=int(obj.get("replications", 1)),
            base_seed=int(obj.get("base_seed", obj.get("seed", 0))),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad options: {exc}", file=where) from None


def targets_to_obj(targets: KpiTargets) -> dict:
    return {
        "utilization_target": Frac(targets.utilization_target),
        "overtime_max": Frac(targets.overtime_max),
        "waiting_max_minutes": Mins(targets.waiting_max_minutes) if targets.waiting_max_minutes is not None else None,
    }


def targets_from_obj(obj: dict, where: str = "<config>") -> KpiTargets:
    try:
        return KpiTargets(
            utilization_target=float(obj.get("utilization_target", 0.85)),
            overtime_max=float(obj.get("overtime_max", 0.05)),
            waiting_max_minutes=(
                float(obj["waiting_max_minutes"]) if obj.get("waiting_max_minutes") is not None else None
            ),
        )
    except (ValueError, TypeError) as exc:
        raise ParseError(f"bad targets: {exc}", file=where) from None


def arrivals_to_obj(config: Optional[ArrivalGeneratorConfig]) -> Optional[dict]:
    if config is None:
        return None
    return {
        "rate_per_hour": config.rate_per_hour,
        "window": [Clock(config.window[0]), Clock(config.window[1])],
        "arrival_replications": config.arrival_replications,
        "templates": [
            {
                "weight": t.weight,
                "surgeon_id": t.surgeon_id,
                "preoperative": _spec_to_obj(t.preoperative, None),
                "phases": _phases_to_obj(t.phases),
            }
            for t in config.templates
        ],
    }


def arrivals_from_obj(obj: Optional[dict], where: str = "<config>") -> Optional[ArrivalGeneratorConfig]:
    if obj is None:
        return None
    try:
        templates = tuple(
            ArrivalTemplate(
                weight=float(t.get("weight", 1.0)),
                surgeon_id=str(t["surgeon_id"]),
                preoperative=_spec_from_obj(t["preoperative"], where)[0],
                phases=_phases_from_obj(t["phases"], where),
            )
            for t in obj["templates"]
        )
        window = obj["window"]
        return ArrivalGeneratorConfig(
            rate_per_hour=float(obj["rate_per_hour"]),
            window=(
                parse_hhmm(str(window[0]), file=where, column="window"),
                parse_hhmm(str(window[1]), file=where, column="window"),
            ),
            templates=templates,
            arrival_replications=int(obj.get("arrival_replications", 1)),
        )
    except ParseError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"bad arrival config: {exc}", file=where) from None


def bundle_to_obj(bundle: ScenarioBundle) -> dict:
    return {
        "format_version": bundle.format_version,
        "scenario": scenario_to_obj(bundle.scenario),
        "options": options_to_obj(bundle.options),
        "targets": targets_to_obj(bundle.targets),
        "arrivals": arrivals_to_obj(bundle.arrivals),
    }


def bundle_from_obj(obj: dict, where: str = "<bundle>") -> ScenarioBundle:
    version = str(obj.get("format_version", FORMAT_VERSION))
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}", file=where)
    arrivals = arrivals_from_obj(obj.get("arrivals"), where)
    scenario = scenario_from_obj(obj.get("scenario") or {}, where)
    options = options_from_obj(obj.get("options") or {"schedule_kind": scenario.schedule_kind.value}, arrivals, where)
    targets = targets_from_obj(obj.get("targets") or {}, where)
    return ScenarioBundle(
        scenario=scenario,
        options=options,
        targets=targets,
        arrivals=arrivals,
        format_version=version,
        source_paths=(where,),
    )


def export_bundle(bundle: ScenarioBundle) -> str:
    return emit_json(bundle_to_obj(bundle)) + "\n"


def load_bundle(path: str | Path) -> ScenarioBundle:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read bundle: {exc}", file=str(path)) from None
    return bundle_from_obj(obj, where=str(path))


# --- three-table CSV ingestion -------------------------------------------


def _read_rows(path: str | Path, required: tuple[str, ...]) -> list[tuple[int, dict]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc}", file=str(path)) from None
    reader = csv.DictReader(io.StringIO(text))
    headers = reader.fieldnames or []
    for column in required:
        if column not in headers:
            raise ParseError(f"missing required column {column!r}", file=str(path), row=1, column=column)
    rows = []
    for number, row in enumerate(reader, start=2):
        rows.append((number, {k: (v.strip() if v is not None else "") for k, v in row.items() if k}))
    return rows


def _cell(row: dict, key: str) -> Optional[str]:
    value = row.get(key, "")
    return value if value else None


ROOM_COLUMNS = ("room_id", "shift_start", "shift_end")
CASE_COLUMNS = (
    "case_id",
    "case_type",
    "surgeon_id",
    "planned_room",
    "sequence_index",
    "planned_start",
    "arrival_time",
    "preoperative_minutes",
    "realized_room",
    "realized_start",
)
DURATION_COLUMNS = ("case_id", "phase", "kind", "p1", "p2", "p3", "realized_minutes")


def load_rooms_csv(path: str | Path) -> tuple[RoomShift, ...]:
    rooms = []
    seen = set()
    for number, row in _read_rows(path, ROOM_COLUMNS):
        room_id = _cell(row, "room_id")
        if room_id is None:
            raise ParseError("empty room_id", file=str(path), row=number, column="room_id")
        if room_id in seen:
            raise DuplicateKeyError(f"duplicate room_id {room_id!r}", file=str(path), row=number, column="room_id")
        seen.add(room_id)
        try:
            rooms.append(
                RoomShift(
                    room_id,
                    parse_hhmm(row["shift_start"], file=str(path), row=number, column="shift_start"),
                    parse_hhmm(row["shift_end"], file=str(path), row=number, column="shift_end"),
                )
            )
        except ValueError as exc:
            raise ParseError(str(exc), file=str(path), row=number) from None
    return tuple(rooms)


def _parse_float(row: dict, key: str, path: str, number: int) -> Optional[float]:
    raw = _cell(row, key)
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"not a number: {raw!r}", file=path, row=number, column=key) from None


def load_cases_csv(path: str | Path, room_ids: set[str]) -> list[tuple[int, dict]]:
    """Parse case rows; returns (row number, field dict) pairs pending duration join."""
    path_str = str(path)
    out = []
    seen = set()
    for number, row in _read_rows(path, CASE_COLUMNS):
        case_id = _cell(row, "case_id")
        if case_id is None:
            raise ParseError("empty case_id", file=path_str, row=number, column="case_id")
        if case_id in seen:
            raise DuplicateKeyError(f"duplicate case_id {case_id!r}", file=path_str, row=number, column="case_id")
        seen.add(case_id)
        case_type = _cell(row, "case_type")
        if case_type not in (CaseType.ELECTIVE.value, CaseType.NON_ELECTIVE.value):
            raise ParseError(f"bad case_type {case_type!r}", file=path_str, row=number, column="case_type")
        surgeon_id = _cell(row, "surgeon_id")
        if surgeon_id is None:
            raise ParseError("empty surgeon_id", file=path_str, row=number, column="surgeon_id")
        for key in ("planned_room", "realized_room"):
            ref = _cell(row, key)
            if ref is not None and ref not in room_ids:
                raise ReferentialError(f"unknown room {ref!r}", file=path_str, row=number, column=key)
        fields = {
            "case_id": case_id,
            "case_type": CaseType(case_type),
            "surgeon_id": surgeon_id,
            "planned_room": _cell(row, "planned_room"),
            "realized_room": _cell(row, "realized_room"),
            "preoperative_duration": _parse_float(row, "preoperative_minutes", path_str, number),
        }
        seq = _cell(row, "sequence_index")
        try:
            fields["sequence_index"] = int(seq) if seq is not None else None
        except ValueError:
            raise ParseError(f"not an integer: {seq!r}", file=path_str, row=number, column="sequence_index") from None
        for key, column in (
            ("planned_start", "planned_start"),
            ("arrival_time", "arrival_time"),
            ("realized_start", "realized_start"),
        ):
            raw = _cell(row, column)
            fields[key] = parse_hhmm(raw, file=path_str, row=number, column=column) if raw is not None else None
        out.append((number, fields))
    return out


def load_durations_csv(path: str | Path, case_ids: set[str]) -> dict[str, dict[str, tuple[DurationSpec, Optional[float]]]]:
    path_str = str(path)
    token_to_name = dict(zip(PHASE_TOKENS, PHASE_NAMES))
    out: dict[str, dict[str, tuple[DurationSpec, Optional[float]]]] = {}
    for number, row in _read_rows(path, DURATION_COLUMNS):
        case_id = _cell(row, "case_id")
        if case_id is None:
            raise ParseError("empty case_id", file=path_str, row=number, column="case_id")
        if case_id not in case_ids:
            raise ReferentialError(f"unknown case_id {case_id!r}", file=path_str, row=number, column="case_id")
        token = _cell(row, "phase")
        if token not in token_to_name:
            raise ParseError(f"bad phase {token!r} (use SWA|SWOA|PROC|REV)", file=path_str, row=number, column="phase")
        name = token_to_name[token]
        if name in out.get(case_id, {}):
            raise DuplicateKeyError(f"duplicate phase {token!r} for case {case_id!r}", file=path_str, row=number)
        kind = _cell(row, "kind")
        try:
            spec = DurationSpec(
                DurationKind(kind),
                _parse_float(row, "p1", path_str, number) or 0.0,
                _parse_float(row, "p2", path_str, number) or 0.0,
                _parse_float(row, "p3", path_str, number) or 0.0,
            )
        except ValueError as exc:
            raise ParseError(str(exc), file=path_str, row=number, column="kind") from None
        realized = _parse_float(row, "realized_minutes", path_str, number)
        out.setdefault(case_id, {})[name] = (spec, realized)
    return out


def load_scenario(
    rooms_path: str | Path,
    cases_path: str | Path,
    durations_path: str | Path,
    config_path: str | Path,
) -> ScenarioBundle:
    """Load the three-table database plus the run configuration into a validated bundle."""
    config_path = Path(config_path)
    try:
        config = json.loads(config_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read config: {exc}", file=str(config_path)) from None

    rooms = load_rooms_csv(rooms_path)
    room_ids = {r.room_id for r in rooms}
    case_rows = load_cases_csv(cases_path, room_ids)
    durations = load_durations_csv(durations_path, {f["case_id"] for _, f in case_rows})

    zero = DurationSpec(DurationKind.DETERMINISTIC, 0.0)
    cases = []
    for number, fields in case_rows:
        per_phase = durations.get(fields["case_id"], {})
        specs = {name: per_phase.get(name, (zero, None)) for name in PHASE_NAMES}
        phases = PhaseDurations(
            setup_with_anesth=specs["setup_with_anesth"][0],
            setup_without_anesth=specs["setup_without_anesth"][0],
            procedure=specs["procedure"][0],
            reversal=specs["reversal"][0],
            realized_setup_with_anesth=specs["setup_with_anesth"][1],
            realized_setup_without_anesth=specs["setup_without_anesth"][1],
            realized_procedure=specs["procedure"][1],
            realized_reversal=specs["reversal"][1],
        )
        try:
            cases.append(SurgicalCase(phases=phases, **fields))
        except ValueError as exc:
            raise ParseError(str(exc), file=str(cases_path), row=number) from None

    arrivals = arrivals_from_obj(config.get("arrivals"), str(config_path))
    options = options_from_obj(
        config.get("options") or {"schedule_kind": "provisional"}, arrivals, str(config_path)
    )
    targets = targets_from_obj(config.get("targets") or {}, str(config_path))
    res = config.get("resources") or {}
    resources = ResourceConfig(
        anesthesiologist_count=int(res.get("anesthesiologist_count", 1)),
        surgeons=frozenset(res["surgeons"]) if res.get("surgeons") else frozenset(c.surgeon_id for c in cases),
        enforce_anesth_capacity=bool(res.get("enforce_anesth_capacity", False)),
        enforce_surgeon_exclusivity=bool(res.get("enforce_surgeon_exclusivity", True)),
    )
    try:
        scenario = Scenario(
            scenario_id=str(config.get("scenario_id", "scenario")),
            rooms=rooms,
            resources=resources,
            cases=tuple(cases),
            schedule_kind=options.schedule_kind,
        )
    except ValueError as exc:
        raise ParseError(str(exc), file=str(cases_path)) from None
    return ScenarioBundle(
        scenario=scenario,
        options=options,
        targets=targets,
        arrivals=arrivals,
        source_paths=(str(rooms_path), str(cases_path), str(durations_path), str(config_path)),
    )


# --- report serialization -------------------------------------------------


def kpi_report_to_obj(report: KpiReport) -> dict:
    return {
        "utilization": Frac(report.utilization),
        "overtime": Frac(report.overtime),
        "mean_waiting_minutes": Mins(report.mean_waiting_minutes),
        "max_waiting_minutes": Mins(report.max_waiting_minutes),
        "per_room": {
            room_id: {
                "busy_in_shift": Mins(v.busy_in_shift),
                "overtime_minutes": Mins(v.overtime_minutes),
                "shift_minutes": Mins(v.shift_minutes),
            }
            for room_id, v in report.per_room.items()
        },
        "utilization_pass": report.utilization_pass,
        "overtime_pass": report.overtime_pass,
    }


def gantt_to_obj(segments: list[GanttSegment] | tuple[GanttSegment, ...]) -> list:
    return [
        {
            "room_id": s.room_id,
            "state": s.state.value,
            "start": Clock(s.start),
            "end": Clock(s.end),
            "case_id": s.case_id,
            "non_elective": s.non_elective,
        }
        for s in segments
    ]


_FRACTION_KPIS = {"utilization", "overtime"}


def _stats_to_obj(key: str, stats: KpiStats) -> dict:
    wrap = Frac if key in _FRACTION_KPIS else Mins
    return {
        "mean": wrap(stats.mean),
        "sample_stdev": wrap(stats.sample_stdev),
        "min": wrap(stats.min),
        "max": wrap(stats.max),
        "q05": wrap(stats.q05),
        "q50": wrap(stats.q50),
        "q95": wrap(stats.q95),
        "ci95_halfwidth": wrap(stats.ci95_halfwidth),
    }


def summary_to_obj(summary: ReplicationSummary) -> dict:
    return {
        "n": summary.n,
        "stats": {key: _stats_to_obj(key, value) for key, value in summary.stats.items()},
        "target_hit_probability": {key: Frac(value) for key, value in summary.target_hit_probability.items()},
    }


def violations_to_obj(violations) -> list:
    return [
        {
            "kind": v.kind.value,
            "case_ids": list(v.case_ids),
            "room_id": v.room_id,
            "window": [Clock(v.window[0]), Clock(v.window[1])],
            "message": v.message,
            "error": v.is_error,
        }
        for v in violations
    ]


def diff_to_obj(diff: ScheduleDiff) -> dict:
    return {
        "records": [
            {
                "case_id": r.case_id,
                "change": r.change.value,
                "attribution": r.attribution.value,
                "provisional_value": r.provisional_value,
                "performed_value": r.performed_value,
                "drift_minutes": Mins(r.drift_minutes) if r.drift_minutes is not None else None,
            }
            for r in diff.records
        ]
    }


def trace_to_obj(trace: SimulationTrace) -> dict:
    return {
        "seed_used": trace.seed_used,
        "horizon_end": Clock(trace.horizon_end),
        "outcomes": [
            {
                "case_id": o.case_id,
                "room_id": o.room_id,
                "ready_time": Clock(o.ready_time),
                "start_time": Clock(o.start_time),
                "end_time": Clock(o.end_time),
                "phase_boundaries": [Clock(b) for b in o.phase_boundaries],
                "waiting_minutes": Mins(o.waiting_minutes),
            }
            for o in trace.outcomes
        ],
        "segments": gantt_to_obj(trace.segments),
    }


def prospective_to_obj(report: ProspectiveReport) -> dict:
    return {
        "step1": violations_to_obj(report.step1),
        "step2": kpi_report_to_obj(report.step2),
        "step3": summary_to_obj(report.step3),
        "step4": {k: summary_to_obj(v) for k, v in sorted(report.step4.items())},
        "step5": {k: summary_to_obj(v) for k, v in sorted(report.step5.items())},
        "verdicts": {
            "feasible": report.verdicts.feasible,
            "robust": report.verdicts.robust,
            "resilient_by_strategy": dict(sorted(report.verdicts.resilient_by_strategy.items())),
        },
    }


def retrospective_to_obj(report: RetrospectiveReport) -> dict:
    return {
        "step1": violations_to_obj(report.step1),
        "step2": {
            "performed": kpi_report_to_obj(report.step2_performed),
            "counterfactual_by_strategy": {
                k: kpi_report_to_obj(v) for k, v in sorted(report.step2_counterfactual.items())
            },
        },
        "step3": diff_to_obj(report.step3),
    }


def report_to_obj(report: Any) -> Any:
    if isinstance(report, KpiReport):
        return kpi_report_to_obj(report)
    if isinstance(report, ReplicationSummary):
        return summary_to_obj(report)
    if isinstance(report, ProspectiveReport):
        return prospective_to_obj(report)
    if isinstance(report, RetrospectiveReport):
        return retrospective_to_obj(report)
    if isinstance(report, ScheduleDiff):
        return diff_to_obj(report)
    if isinstance(report, SimulationTrace):
        return trace_to_obj(report)
    if isinstance(report, (list, tuple)):
        if all(isinstance(x, GanttSegment) for x in report):
            return gantt_to_obj(report)
        if all(isinstance(x, Violation) for x in report):
            return violations_to_obj(report)
    raise UnsupportedFormatError(f"cannot export {type(report).__name__}")


def _flatten(obj: Any, prefix: str, rows: list[tuple[str, str]]) -> None:
    if isinstance(obj, dict):
        for key, value in obj.items():
            _flatten(value, f"{prefix}.{key}" if prefix else str(key), rows)
    elif isinstance(obj, (list, tuple)):
        for index, value in enumerate(obj):
            _flatten(value, f"{prefix}[{index}]", rows)
    else:
        rows.append((prefix, _scalar_text(obj)))


def _scalar_text(value: Any) -> str:
    if isinstance(value, (Frac, Mins, Clock)) or isinstance(value, bool) or value is None:
        return emit_json(value).strip('"')
    return str(value)


def export_report(report: Any, format: str = "json") -> str:
    """Serialize a report canonically; identical inputs yield identical bytes."""
    obj = report_to_obj(report)
    if format == "json":
        return emit_json(obj) + "\n"
    if format == "csv":
        if isinstance(obj, list) and all(isinstance(x, dict) for x in obj) and obj:
            headers = list(obj[0].keys())
            lines = [",".join(headers)]
            for entry in obj:
                lines.append(",".join(_scalar_text(entry.get(h)) if entry.get(h) is not None else "" for h in headers))
            return "\n".join(lines) + "\n"
        rows: list[tuple[str, str]] = []
        _flatten(obj, "", rows)
        lines = ["key,value"]
        for key, value in rows:
            lines.append(f"{key},{value}")
        return "\n".join(lines) + "\n"
    raise UnsupportedFormatError(f"unsupported export format {format!r}")
