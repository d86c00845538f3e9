"""HTTP facade for scenario management, runs, pipelines, and what-if insertion.

Scenarios live in an on-disk document store keyed by generated ids and
guarded by optimistic versioning; runs execute on a small thread pool and
are polled via GET /runs/{id}. The what-if route is synchronous because it
backs the manager's interactive insertion loop.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from ortwin import dataio
from ortwin.dataio import ScenarioBundle
from ortwin.engine import DurationMode, SimOptions, Strategy, run_replications, simulate
from ortwin.errors import OrTwinError, ParseError, UnassignableCaseError
from ortwin.fixtures import provisional_twin
from ortwin.kpi import aggregate_replications, build_gantt, compute_kpis
from ortwin.model import CaseType, ScheduleKind, Scenario, SurgicalCase
from ortwin.pipelines import (
    DEFAULT_COUNTERFACTUAL_STRATEGIES,
    prospective_analysis,
    retrospective_analysis,
)
from ortwin.validate import validate_scenario


@dataclass
class StoredScenario:
    scenario_id: str
    version: int
    bundle: ScenarioBundle


@dataclass
class RunRecord:
    run_id: str
    scenario_id: str
    mode: str
    status: str  # pending | running | done | failed
    options: dict
    error: Optional[str] = None
    result: dict = field(default_factory=dict)

    def public(self) -> dict:
        out = {
            "run_id": self.run_id,
            "scenario_id": self.scenario_id,
            "mode": self.mode,
            "status": self.status,
            "options": self.options,
        }
        if self.status == "failed":
            out["error"] = self.error
        if self.status == "done":
            out["result"] = {"kpis": f"/runs/{self.run_id}/kpis", "gantt": f"/runs/{self.run_id}/gantt", "report": f"/runs/{self.run_id}/report"}
        return out


class ScenarioStore:
    """Directory-backed document store; one JSON file per scenario, version-checked commits."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, scenario_id: str) -> Path:
        return self.root / f"{scenario_id}.json"

    def create(self, bundle: ScenarioBundle) -> StoredScenario:
        scenario_id = "s-" + uuid.uuid4().hex[:12]
        stored = StoredScenario(scenario_id, 1, bundle)
        self._write(stored)
        return stored

    def get(self, scenario_id: str) -> StoredScenario:
        path = self._path(scenario_id)
        if not path.exists():
            raise KeyError(scenario_id)
        obj = json.loads(path.read_text(encoding="utf-8"))
        bundle = dataio.bundle_from_obj(obj["bundle"], where=str(path))
        return StoredScenario(scenario_id, int(obj["version"]), bundle)

    def commit(self, stored: StoredScenario, expected_version: int) -> StoredScenario:
        with self._lock:
            current = self.get(stored.scenario_id)
            if current.version != expected_version:
                raise VersionConflict(stored.scenario_id, current.version)
            updated = StoredScenario(stored.scenario_id, expected_version + 1, stored.bundle)
            self._write(updated)
            return updated

    def _write(self, stored: StoredScenario) -> None:
        doc = {"version": stored.version, "bundle": dataio.bundle_to_obj(stored.bundle)}
        dataio.write_atomic(self._path(stored.scenario_id), dataio.emit_json(doc) + "\n")


class VersionConflict(Exception):
    def __init__(self, scenario_id: str, current_version: int):
        self.current_version = current_version
        super().__init__(f"scenario {scenario_id} is at version {current_version}")


class RunRequest(BaseModel):
    mode: str = Field(pattern="^(simulate|prospective|retrospective)$")
    options: Optional[dict] = None
    provisional_scenario_id: Optional[str] = None


class WhatIfRequest(BaseModel):
    arrival_time: str
    preoperative_minutes: float = Field(ge=0)
    phases: dict[str, float]
    strategy: str
    surgeon_id: Optional[str] = None


class CommitRequest(WhatIfRequest):
    version: int


def _whatif_case(req: WhatIfRequest, case_id: str) -> SurgicalCase:
    from ortwin.model import PHASE_NAMES, phases_from_minutes
    from ortwin.timefmt import parse_hhmm

    minutes = []
    for name in PHASE_NAMES:
        value = float(req.phases.get(name, 0.0))
        if value < 0:
            raise ParseError(f"phase {name} must be >= 0", file="<whatif>")
        minutes.append(value)
    return SurgicalCase(
        case_id=case_id,
        case_type=CaseType.NON_ELECTIVE,
        surgeon_id=req.surgeon_id or "urgent-team",
        phases=phases_from_minutes(*minutes, realized=True),
        arrival_time=parse_hhmm(req.arrival_time, file="<whatif>", column="arrival_time"),
        preoperative_duration=req.preoperative_minutes,
    )


def _replay_options(bundle: ScenarioBundle, strategy: Strategy) -> SimOptions:
    kind = bundle.scenario.schedule_kind
    mode = DurationMode.REALIZED_DETERMINISTIC if kind is ScheduleKind.PERFORMED else DurationMode.PLANNED_DETERMINISTIC
    return replace(
        bundle.options,
        schedule_kind=kind,
        duration_mode=mode,
        strategy=strategy,
        keep_initial_non_elective=True,
        inject_arrivals=None,
        replications=1,
    )


def _compute_whatif(bundle: ScenarioBundle, req: WhatIfRequest, case_id: str = "whatif") -> dict:
    try:
        strategy = Strategy(req.strategy)
    except ValueError:
        raise HTTPException(422, f"unknown strategy {req.strategy!r}") from None
    case = _whatif_case(req, case_id)
    scenario = bundle.scenario
    if case.surgeon_id not in scenario.resources.surgeons and scenario.resources.surgeons:
        scenario = replace(
            scenario, resources=replace(scenario.resources, surgeons=scenario.resources.surgeons | {case.surgeon_id})
        )
    options = _replay_options(bundle, strategy)
    before_trace = simulate(scenario, options)
    kpi_before = compute_kpis(before_trace, scenario.rooms, bundle.targets)

    with_case = replace(scenario, cases=scenario.cases + (case,))
    try:
        after_trace = simulate(with_case, options)
    except UnassignableCaseError as exc:
        raise HTTPException(422, str(exc)) from None
    kpi_after = compute_kpis(after_trace, with_case.rooms, bundle.targets)
    outcome = next(o for o in after_trace.outcomes if o.case_id == case_id)
    return {
        "chosen_room": outcome.room_id,
        "start_time": dataio.Clock(outcome.start_time),
        "kpi_before": dataio.kpi_report_to_obj(kpi_before),
        "kpi_after": dataio.kpi_report_to_obj(kpi_after),
        "gantt_after": dataio.gantt_to_obj(build_gantt(after_trace, with_case.rooms)),
        "scenario": with_case,
        "outcome": outcome,
    }


def _canonical(obj: Any, status_code: int = 200) -> Response:
    return Response(content=dataio.emit_json(obj) + "\n", media_type="application/json", status_code=status_code)


def create_app(store_dir: str | Path) -> FastAPI:
    app = FastAPI(title="ortwin", version="0.1.0")
    store = ScenarioStore(Path(store_dir))
    runs: dict[str, RunRecord] = {}
    runs_lock = threading.Lock()
    executor = ThreadPoolExecutor(max_workers=2)

    @app.exception_handler(OrTwinError)
    def _domain_error(_request, exc: OrTwinError):
        status = 400 if isinstance(exc, ParseError) else 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    def get_stored(scenario_id: str) -> StoredScenario:
        try:
            return store.get(scenario_id)
        except KeyError:
            raise HTTPException(404, f"unknown scenario {scenario_id!r}") from None

    @app.post("/scenarios", status_code=201)
    def create_scenario(body: dict):
        bundle = dataio.bundle_from_obj(body, where="<request>")
        violations = validate_scenario(bundle.scenario)
        if violations:
            return JSONResponse(status_code=422, content={"violations": json.loads(dataio.emit_json(dataio.violations_to_obj(violations)))})
        stored = store.create(bundle)
        return {"scenario_id": stored.scenario_id, "version": stored.version}

    @app.get("/scenarios/{scenario_id}")
    def get_scenario(scenario_id: str):
        stored = get_stored(scenario_id)
        doc = dataio.bundle_to_obj(stored.bundle)
        doc["scenario_store_id"] = stored.scenario_id
        doc["version"] = stored.version
        return _canonical(doc)

    def execute_run(record: RunRecord, stored: StoredScenario, provisional_id: Optional[str]) -> None:
        record.status = "running"
        try:
            bundle = stored.bundle
            options = (
                dataio.options_from_obj({**dataio.options_to_obj(bundle.options), **record.options}, bundle.arrivals)
                if record.options
                else bundle.options
            )
            if record.mode == "simulate":
                traces = run_replications(bundle.scenario, options)
                kpis = [compute_kpis(t, bundle.scenario.rooms, bundle.targets) for t in traces]
                result = {
                    "kpis": dataio.kpi_report_to_obj(kpis[0]),
                    "gantt": dataio.gantt_to_obj(build_gantt(traces[0], bundle.scenario.rooms)),
                    "trace": dataio.trace_to_obj(traces[0]),
                }
                result["report"] = (
                    dataio.summary_to_obj(aggregate_replications(kpis, bundle.targets))
                    if len(kpis) > 1
                    else result["kpis"]
                )
            elif record.mode == "prospective":
                scenario = bundle.scenario
                if scenario.schedule_kind is not ScheduleKind.PROVISIONAL:
                    scenario = provisional_twin(scenario)
                report = prospective_analysis(
                    scenario, replace(options, schedule_kind=ScheduleKind.PROVISIONAL), bundle.arrivals, bundle.targets
                )
                trace = simulate(scenario, replace(options, schedule_kind=ScheduleKind.PROVISIONAL, inject_arrivals=None, duration_mode=DurationMode.PLANNED_DETERMINISTIC))
                result = {
                    "kpis": dataio.kpi_report_to_obj(report.step2),
                    "gantt": dataio.gantt_to_obj(build_gantt(trace, scenario.rooms)),
                    "report": dataio.prospective_to_obj(report),
                }
            else:  # retrospective
                performed = bundle.scenario
                if provisional_id is not None:
                    provisional = store.get(provisional_id).bundle.scenario
                    provisional = replace(provisional, schedule_kind=ScheduleKind.PROVISIONAL)
                else:
                    provisional = provisional_twin(performed)
                report = retrospective_analysis(provisional, performed, DEFAULT_COUNTERFACTUAL_STRATEGIES, bundle.targets)
                trace = simulate(performed, _replay_options(bundle, Strategy.REAL_LIFE))
                result = {
                    "kpis": dataio.kpi_report_to_obj(report.step2_performed),
                    "gantt": dataio.gantt_to_obj(build_gantt(trace, performed.rooms)),
                    "report": dataio.retrospective_to_obj(report),
                }
            record.result = result
            record.status = "done"
        except Exception as exc:  # surfaced through GET /runs/{id}
            record.status = "failed"
            record.error = str(exc)

    @app.post("/scenarios/{scenario_id}/runs", status_code=202)
    def create_run(scenario_id: str, body: RunRequest):
        stored = get_stored(scenario_id)
        if body.provisional_scenario_id is not None:
            get_stored(body.provisional_scenario_id)  # fail fast with 404
        record = RunRecord(
            run_id="r-" + uuid.uuid4().hex[:12],
            scenario_id=scenario_id,
            mode=body.mode,
            status="pending",
            options=body.options or {},
        )
        with runs_lock:
            runs[record.run_id] = record
        executor.submit(execute_run, record, stored, body.provisional_scenario_id)
        return {"run_id": record.run_id}

    def get_run(run_id: str) -> RunRecord:
        with runs_lock:
            record = runs.get(run_id)
        if record is None:
            raise HTTPException(404, f"unknown run {run_id!r}")
        return record

    @app.get("/runs/{run_id}")
    def run_status(run_id: str):
        return get_run(run_id).public()

    def run_result(run_id: str, key: str) -> Response:
        record = get_run(run_id)
        if record.status in ("pending", "running"):
            raise HTTPException(409, f"run {run_id} is still {record.status}")
        if record.status == "failed":
            raise HTTPException(409, f"run {run_id} failed: {record.error}")
        return _canonical(record.result[key])

    @app.get("/runs/{run_id}/kpis")
    def run_kpis(run_id: str):
        return run_result(run_id, "kpis")

    @app.get("/runs/{run_id}/gantt")
    def run_gantt(run_id: str):
        return run_result(run_id, "gantt")

    @app.get("/runs/{run_id}/report")
    def run_report(run_id: str):
        return run_result(run_id, "report")

    @app.post("/scenarios/{scenario_id}/whatif")
    def whatif(scenario_id: str, body: WhatIfRequest):
        stored = get_stored(scenario_id)
        computed = _compute_whatif(stored.bundle, body)
        return _canonical({k: computed[k] for k in ("chosen_room", "start_time", "kpi_before", "kpi_after", "gantt_after")})

    @app.post("/scenarios/{scenario_id}/whatif/commit")
    def whatif_commit(scenario_id: str, body: CommitRequest):
        stored = get_stored(scenario_id)
        case_id = "w-" + uuid.uuid4().hex[:8]
        computed = _compute_whatif(stored.bundle, body, case_id)
        outcome = computed["outcome"]
        committed = next(c for c in computed["scenario"].cases if c.case_id == case_id)
        committed = replace(committed, realized_room=outcome.room_id, realized_start=outcome.start_time)
        scenario = replace(stored.bundle.scenario, cases=stored.bundle.scenario.cases + (committed,))
        bundle = replace(stored.bundle, scenario=scenario)
        try:
            updated = store.commit(StoredScenario(scenario_id, stored.version, bundle), body.version)
        except VersionConflict as exc:
            raise HTTPException(409, str(exc)) from None
        return _canonical(
            {
                "scenario_id": scenario_id,
                "version": updated.version,
                "case_id": case_id,
                "chosen_room": computed["chosen_room"],
                "start_time": computed["start_time"],
            }
        )

    @app.on_event("shutdown")
    def _shutdown():
        executor.shutdown(wait=False)

    return app
