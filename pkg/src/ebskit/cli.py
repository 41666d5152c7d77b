"""Command-line entry points.

Exit codes: 0 checks pass, 1 a check failed, 2 usage/parse error, 3
internal error.  Human-readable output goes to stdout, diagnostics to
stderr; ``--report`` additionally writes line-delimited JSON records.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import checker, corpus
from .animator import (
    ScenarioParseError, ScenarioValidationError, parse_scenario, run_scenario,
)
from .checker import MODE_CLOSED, MODE_DRIVEN, NotSuperposition, check_refinement
from .obligations import BoundMachine, CheckConfig, obligation_record, report
from .parser import parse_source_tolerant
from .project import Project, SpecError, resolve

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


def _load_bounds_file(path: str) -> Tuple[Dict[str, Tuple[int, int]], Dict[str, int]]:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    read = cp.read(path)
    if not read:
        raise SpecError(f"cannot read bounds file {path}")
    bounds = {}
    consts = {}
    if cp.has_section("bounds"):
        for var, value in cp["bounds"].items():
            lo, hi = value.split()
            bounds[var] = (int(lo), int(hi))
    if cp.has_section("consts"):
        for name, value in cp["consts"].items():
            consts[name] = int(value)
    return bounds, consts


def _load_project(args) -> Tuple[Project, CheckConfig]:
    bounds: Dict[str, Tuple[int, int]] = {}
    consts: Dict[str, int] = {}
    if args.corpus:
        project, manifest = corpus.load_corpus()
        bounds.update(manifest.bounds)
        consts.update(manifest.consts)
        if args.paths:
            raise SpecError("--corpus and explicit paths are exclusive")
    else:
        if not args.paths:
            raise SpecError("no input: give .ebs paths or --corpus")
        defs = []
        errors = []
        for path in args.paths:
            p = Path(path)
            if not p.is_file():
                raise SpecError(f"no such file: {path}")
            file_defs, file_errors = parse_source_tolerant(
                p.read_text(encoding="utf-8"), str(p))
            defs.extend(file_defs)
            errors.extend(file_errors)
        if errors:
            for err in errors:
                print(str(err), file=sys.stderr)
            raise SpecError(f"{len(errors)} parse error(s)")
        project = resolve(defs)
    if getattr(args, "bounds_file", None):
        extra_bounds, extra_consts = _load_bounds_file(args.bounds_file)
        bounds.update(extra_bounds)
        consts.update(extra_consts)
    return project, CheckConfig(bounds=bounds, consts=consts)


def _open_report(args):
    path = getattr(args, "report", None)
    return open(path, "w", encoding="utf-8") if path else None


def _emit(stream, record: dict):
    if stream is not None:
        stream.write(json.dumps(record) + "\n")


def cmd_check(args) -> int:
    project, config = _load_project(args)
    machines = args.machine or list(project.machines)
    stream = _open_report(args)
    bounded_note = ", ".join(f"{v} in [{lo},{hi}]"
                             for v, (lo, hi) in sorted(config.bounds.items()))
    print(f"bounded up to: {bounded_note or '(no NAT variables)'}; "
          f"cap {config.cap} states")
    failed_total = 0
    header = (f"{'machine':8} {'POs':>4} {'disch':>6} {'fail':>5} {'vac':>4} "
              f"{'states':>7} {'viol':>5} {'dead':>5} {'time':>7}")
    print(header)
    try:
        start = time.perf_counter()
        for name in machines:
            bound = BoundMachine.from_project(project, name, config)
            po_report = report(bound)
            reach = checker.explore(bound, args.mode)
            deadlocks = len(reach.deadlocks)
            violations = len(reach.violations)
            machine_failed = po_report.failed > 0 or violations > 0 or \
                (args.mode == MODE_DRIVEN and deadlocks > 0)
            failed_total += int(machine_failed)
            print(f"{name:8} {po_report.total:>4} {po_report.discharged:>6} "
                  f"{po_report.failed:>5} {po_report.vacuous:>4} "
                  f"{reach.states_visited:>7} {violations:>5} {deadlocks:>5} "
                  f"{po_report.wall_time + 0:>6.2f}s")
            for po in po_report.obligations:
                _emit(stream, {"type": "obligation",
                               "machine": name, **obligation_record(po)})
                if po.status == "failed":
                    ce = {k: checker.semantics.value_to_text(v)
                          for k, v in po.counterexample.items()}
                    print(f"  failed {po.id}: counterexample {ce}")
            for label, trace in reach.violations:
                print(f"  violation of {label} after {len(trace.steps)} step(s)")
                _emit(stream, {"type": "violation", "machine": name,
                               "invariant": label, "mode": args.mode,
                               "trace": trace.to_records(bound.flat.variables)})
            for trace in reach.deadlocks[:5]:
                note = "" if args.mode == MODE_DRIVEN else " (informational)"
                print(f"  deadlock after {len(trace.steps)} step(s){note}")
            for labels, trace in reach.unresolved_hazards[:3]:
                print(f"  unresolved hazard: {', '.join(labels)} "
                      f"({len(reach.unresolved_hazards)} state(s) total)")
                break
            _emit(stream, {"type": "machine", "machine": name, "mode": args.mode,
                           "po_total": po_report.total,
                           "po_failed": po_report.failed,
                           "po_vacuous": po_report.vacuous,
                           "states": reach.states_visited,
                           "violations": violations,
                           "deadlocks": deadlocks,
                           "unresolved_hazards": len(reach.unresolved_hazards)})
        print(f"failed: {failed_total} of {len(machines)} machine(s); "
              f"total {time.perf_counter() - start:.2f}s")
    finally:
        if stream is not None:
            stream.close()
            print(f"report: {args.report}")
    return EXIT_CHECK_FAILED if failed_total else EXIT_OK


def cmd_refine(args) -> int:
    project, config = _load_project(args)
    result = check_refinement(project, args.abstract, args.concrete, config)
    checks = [
        ("a", "abstract invariants preserved on projection",
         result.abstract_invariant_failures),
        ("b", "concrete guards imply abstract guards",
         result.guard_strengthening_failures),
        ("c", "preserved variables assigned consistently",
         result.action_equality_failures),
        ("d", "new events leave the abstraction intact",
         result.new_event_frame_violations),
    ]
    print(f"refinement {args.abstract} <= {args.concrete}: "
          f"{result.pairs_checked} event pair(s)")
    for key, title, failures in checks:
        verdict = "pass" if not failures else f"FAIL ({len(failures)})"
        print(f"  ({key}) {title}: {verdict}")
        for finding in failures:
            print(f"      {finding.detail}; witness after "
                  f"{len(finding.trace.steps)} step(s)")
    stream = _open_report(args)
    if stream is not None:
        flat = project.flat(args.concrete)
        for finding in result.findings():
            _emit(stream, {"type": "refinement-finding", "check": finding.check,
                           "event": finding.event, "detail": finding.detail,
                           "trace": finding.trace.to_records(flat.variables)})
        stream.close()
        print(f"report: {args.report}")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def cmd_pos(args) -> int:
    project, config = _load_project(args)
    bound = BoundMachine.from_project(project, args.machine, config)
    po_report = report(bound)
    stream = _open_report(args)
    for po in po_report.obligations:
        print(f"{po.id:55} {po.status}")
        _emit(stream, {"type": "obligation", "machine": args.machine,
                       **obligation_record(po)})
    if stream is not None:
        stream.close()
    print(f"total {po_report.total}: {po_report.discharged} discharged, "
          f"{po_report.failed} failed, {po_report.vacuous} vacuous "
          f"({po_report.wall_time:.2f}s)")
    return EXIT_CHECK_FAILED if po_report.failed else EXIT_OK


def cmd_animate(args) -> int:
    project, config = _load_project(args)
    path = Path(args.scenario)
    if not path.is_file():
        raise SpecError(f"no such scenario: {args.scenario}")
    scenario = parse_scenario(path.read_text(encoding="utf-8"), path.name)
    result = run_scenario(scenario, project, config)
    for i, step in enumerate(scenario.steps):
        if result.failure is not None and i > result.failure[0]:
            break
        marker = "ok  "
        if result.failure is not None and i == result.failure[0]:
            marker = "FAIL"
        kind = type(step).__name__.replace("Step", "").lower()
        detail = getattr(step, "event", None) or \
            getattr(step, "text", None) or \
            f"{getattr(step, 'variable', '')} {getattr(step, 'value_text', '')}"
        print(f"  [{marker}] {i:3} {kind} {detail}")
    verdict = "pass" if result.passed else f"FAIL: {result.failure[1]}"
    print(f"{scenario.source}: {verdict} "
          f"({result.steps_executed} step(s) executed)")
    trace_path = args.trace or str(path) + ".trace.jsonl"
    flat = project.flat(scenario.machine)
    Path(trace_path).write_text(result.trace.to_jsonl(flat.variables),
                                encoding="utf-8")
    print(f"trace: {trace_path}")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    project, config = _load_project(args)
    app = create_app(project, config)
    print(f"serving on http://{args.host}:{args.port}  (Ctrl-C stops)")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebs",
        description="Check, prove (bounded) and animate .ebs machine models")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, paths=True):
        p.add_argument("--corpus", action="store_true",
                       help="use the built-in hemodialysis corpus")
        p.add_argument("--bounds", dest="bounds_file", metavar="FILE",
                       help="INI file with [bounds] and [consts]")
        p.add_argument("--report", metavar="FILE",
                       help="write machine-readable JSONL records")
        if paths:
            p.add_argument("paths", nargs="*", metavar="PATH",
                           help=".ebs source files")

    p = sub.add_parser("check", help="discharge obligations and explore")
    p.add_argument("--machine", action="append",
                   help="machine to check (repeatable; default: all)")
    p.add_argument("--mode", choices=[MODE_CLOSED, MODE_DRIVEN],
                   default=MODE_CLOSED)
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("refine", help="check a refinement pair")
    p.add_argument("abstract")
    p.add_argument("concrete")
    common(p)
    p.set_defaults(fn=cmd_refine)

    p = sub.add_parser("pos", help="list proof obligations and their status")
    p.add_argument("--machine", required=True)
    common(p)
    p.set_defaults(fn=cmd_pos)

    p = sub.add_parser("animate", help="run a scenario file")
    p.add_argument("scenario", metavar="SCENARIO")
    p.add_argument("--trace", metavar="FILE",
                   help="trace output path (default: SCENARIO.trace.jsonl)")
    common(p)
    p.set_defaults(fn=cmd_animate)

    p = sub.add_parser("serve", help="serve the HTTP session API")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    common(p)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except (ScenarioParseError, ScenarioValidationError, NotSuperposition,
            SpecError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_OK
    except Exception as err:       # pragma: no cover - defensive
        print(f"internal error: {err!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
