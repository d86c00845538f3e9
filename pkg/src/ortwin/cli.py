"""Command-line front door for batch use and CI.

Exit codes: 0 success, 1 usage, 2 parse error, 3 error-level constraint
violations, 4 runtime failure. The config path may come from --config or
the OR_TWIN_CONFIG environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from ortwin import dataio
from ortwin.dataio import ScenarioBundle
from ortwin.engine import DurationMode, SimOptions, Strategy, kernel_name, run_replications
from ortwin.errors import OrTwinError, ParseError, UsageError
from ortwin.kpi import aggregate_replications, build_gantt, compute_kpis
from ortwin.model import ScheduleKind
from ortwin.pipelines import (
    DEFAULT_COUNTERFACTUAL_STRATEGIES,
    prospective_analysis,
    retrospective_analysis,
)
from ortwin.fixtures import provisional_twin
from ortwin.timefmt import format_hhmm
from ortwin.validate import constraint_audit, error_level, feasibility_check, validate_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ortwin", description="Operating-room day-schedule decision support")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the three-table database for constraint violations")
    p.add_argument("rooms")
    p.add_argument("cases")
    p.add_argument("durations")
    p.add_argument("--config", default=None)

    for name in ("simulate", "prospective", "retrospective"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=0, help="replication parallelism (0 = auto)")

    p = sub.add_parser("whatif", help="preview inserting one urgent case")
    p.add_argument("--config", default=None)
    p.add_argument("--arrival", required=True, metavar="HH:MM")
    p.add_argument("--preop", required=True, type=float, metavar="MINUTES")
    p.add_argument("--strategy", required=True, choices=[s.value for s in Strategy])
    p.add_argument("--phases", default="10,5,60,15", help="SWA,SWOA,PROC,REV minutes")
    p.add_argument("--surgeon", default="urgent-team")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    return parser


def _config_path(args) -> Path:
    path = getattr(args, "config", None) or os.environ.get("OR_TWIN_CONFIG")
    if not path:
        raise UsageError("no config given (use --config or OR_TWIN_CONFIG)")
    return Path(path)


def _load_bundle_from_config(config_path: Path) -> ScenarioBundle:
    try:
        config = json.loads(config_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read config: {exc}", file=str(config_path)) from None
    data = config.get("data") or {}
    base = config_path.parent

    def resolve(key: str, default: str) -> Path:
        return base / data.get(key, default)

    return dataio.load_scenario(
        resolve("rooms", "rooms.csv"), resolve("cases", "cases.csv"), resolve("durations", "durations.csv"), config_path
    )


def _apply_seed(bundle: ScenarioBundle, seed: int | None) -> ScenarioBundle:
    if seed is None:
        return bundle
    return replace(bundle, options=replace(bundle.options, base_seed=seed))


def _write(out_dir: Path, name: str, text: str) -> None:
    dataio.write_atomic(out_dir / name, text)
    print(f"wrote {out_dir / name}")


def _print_violations(violations) -> None:
    for v in violations:
        level = "ERROR" if v.is_error else "WARNING"
        window = f" [{format_hhmm(v.window[0])}..{format_hhmm(v.window[1])}]" if v.window != (0.0, 0.0) else ""
        print(f"{level} {v.kind.value}{window}: {v.message}")


def cmd_validate(args) -> int:
    config_path = getattr(args, "config", None) or os.environ.get("OR_TWIN_CONFIG")
    if config_path:
        bundle = dataio.load_scenario(args.rooms, args.cases, args.durations, config_path)
    else:
        # no config: structural + feasibility defaults on a provisional reading
        tmp = {"options": {"schedule_kind": "provisional"}}
        import tempfile

        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as handle:
            json.dump(tmp, handle)
            tmp_path = handle.name
        try:
            bundle = dataio.load_scenario(args.rooms, args.cases, args.durations, tmp_path)
        finally:
            os.unlink(tmp_path)
    scenario = bundle.scenario
    violations = list(validate_scenario(scenario))
    if not violations:
        if scenario.schedule_kind is ScheduleKind.PROVISIONAL and all(
            c.phases.all_deterministic for c in scenario.cases
        ):
            violations += feasibility_check(scenario)
        elif scenario.schedule_kind is ScheduleKind.PERFORMED:
            violations += constraint_audit(scenario)
    _print_violations(violations)
    errors = error_level(violations)
    print(f"{len(violations)} violation(s), {len(errors)} error-level")
    return 3 if errors else 0


def cmd_simulate(args) -> int:
    bundle = _apply_seed(_load_bundle_from_config(_config_path(args)), args.seed)
    out_dir = Path(args.out)
    traces = run_replications(bundle.scenario, bundle.options, jobs=args.jobs or None)
    reports = [compute_kpis(t, bundle.scenario.rooms, bundle.targets) for t in traces]
    _write(out_dir, "trace.json", dataio.export_report(traces[0], "json"))
    _write(out_dir, "gantt.json", dataio.export_report(build_gantt(traces[0], bundle.scenario.rooms), "json"))
    _write(out_dir, "kpis.json", dataio.export_report(reports[0], "json"))
    if len(reports) > 1:
        _write(out_dir, "summary.json", dataio.export_report(aggregate_replications(reports, bundle.targets), "json"))
    kpi = reports[0]
    print(f"utilization {kpi.utilization:.4f} overtime {kpi.overtime:.4f} (kernel: {kernel_name()})")
    return 0


def cmd_prospective(args) -> int:
    bundle = _apply_seed(_load_bundle_from_config(_config_path(args)), args.seed)
    scenario = bundle.scenario
    if scenario.schedule_kind is not ScheduleKind.PROVISIONAL:
        scenario = provisional_twin(scenario)
    options = replace(bundle.options, schedule_kind=ScheduleKind.PROVISIONAL)
    report = prospective_analysis(scenario, options, bundle.arrivals, bundle.targets)
    out_dir = Path(args.out)
    _write(out_dir, "prospective.json", dataio.export_report(report, "json"))
    _write(out_dir, "prospective.csv", dataio.export_report(report, "csv"))
    v = report.verdicts
    print(f"feasible={v.feasible} robust={v.robust} resilient={v.resilient_by_strategy}")
    return 0


def cmd_retrospective(args) -> int:
    config_path = _config_path(args)
    bundle = _apply_seed(_load_bundle_from_config(config_path), args.seed)
    performed = bundle.scenario
    if performed.schedule_kind is not ScheduleKind.PERFORMED:
        raise UsageError("retrospective analysis needs a performed-schedule config")
    config = json.loads(config_path.read_text(encoding="utf-8"))
    if config.get("provisional_data"):
        data = config["provisional_data"]
        base = config_path.parent
        provisional_bundle = dataio.load_scenario(
            base / data.get("rooms", "rooms.csv"),
            base / data.get("cases", "cases.csv"),
            base / data.get("durations", "durations.csv"),
            config_path,
        )
        provisional = replace(provisional_bundle.scenario, schedule_kind=ScheduleKind.PROVISIONAL)
    else:
        provisional = provisional_twin(performed)
    report = retrospective_analysis(provisional, performed, DEFAULT_COUNTERFACTUAL_STRATEGIES, bundle.targets)
    out_dir = Path(args.out)
    _write(out_dir, "retrospective.json", dataio.export_report(report, "json"))
    _write(out_dir, "retrospective.csv", dataio.export_report(report, "csv"))
    kpi = report.step2_performed
    print(f"performed: utilization {kpi.utilization:.4f} overtime {kpi.overtime:.4f}; diff records: {len(report.step3.records)}")
    return 0


def cmd_whatif(args) -> int:
    from ortwin.service import WhatIfRequest, _compute_whatif

    bundle = _apply_seed(_load_bundle_from_config(_config_path(args)), args.seed)
    try:
        swa, swoa, proc, rev = (float(x) for x in args.phases.split(","))
    except ValueError:
        raise UsageError("--phases expects four comma-separated minute values") from None
    request = WhatIfRequest(
        arrival_time=args.arrival,
        preoperative_minutes=args.preop,
        phases={
            "setup_with_anesth": swa,
            "setup_without_anesth": swoa,
            "procedure": proc,
            "reversal": rev,
        },
        strategy=args.strategy,
        surgeon_id=args.surgeon,
    )
    result = _compute_whatif(bundle, request)
    before = result["kpi_before"]
    after = result["kpi_after"]
    print(f"chosen room : {result['chosen_room']}")
    print(f"start       : {format_hhmm(float(result['start_time']))}")
    print(f"utilization : {float(before['utilization']):.4f} -> {float(after['utilization']):.4f}")
    print(f"overtime    : {float(before['overtime']):.4f} -> {float(after['overtime']):.4f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from ortwin.service import create_app

    config_path = _config_path(args)
    config = json.loads(config_path.read_text(encoding="utf-8"))
    service = config.get("service") or {}
    host = args.host or service.get("host", "127.0.0.1")
    port = args.port or int(service.get("port", 8321))
    store_dir = Path(service.get("store_dir", config_path.parent / "store"))
    app = create_app(store_dir)
    uvicorn.run(app, host=host, port=port)
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "prospective": cmd_prospective,
    "retrospective": cmd_retrospective,
    "whatif": cmd_whatif,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OrTwinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
