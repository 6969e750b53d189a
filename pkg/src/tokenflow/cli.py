"""Command line frontend: check, analyze, run, capacity.

Exit codes: 0 success, 1 rule or consistency failure, 2 bad input (file,
JSON, schema, graph structure), 3 execution failure (actor panic, timeout,
stranded tokens).
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Any

import jsonschema

from .analysis import analyze
from .fifos import InvalidParams, layout_plan
from .interp import OracleDeadlock, interpret
from .model import GraphError, build_graph
from .runtime import (
    ActorPanic,
    InconsistentGraph,
    RuntimeConfig,
    Timeout,
    instantiate,
)

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_INPUT = 2
EXIT_RUNTIME = 3


class ParseError(Exception):
    pass


class SchemaError(Exception):
    pass


class OracleMismatch(Exception):
    """Threaded execution and the reference interpreter disagree on sink bytes."""


_PORT_REF = {"type": "string", "pattern": r"^[^.\s]+\.[^.\s]+$"}

GRAPH_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["actors", "fifos"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "actors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "kind": {"enum": ["static", "dynamic", "config"]},
                    "behavior": {"type": "string"},
                    "params": {"type": "object"},
                    "ports": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["id", "dir"],
                            "additionalProperties": False,
                            "properties": {
                                "id": {"type": "string", "minLength": 1},
                                "dir": {"enum": ["in", "out"]},
                                "kind": {"enum": ["srp", "drp", "control_in",
                                                  "control_out"]},
                                "rate": {"type": "integer", "minimum": 1},
                            },
                        },
                    },
                },
            },
        },
        "fifos": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "src", "dst"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "src": _PORT_REF,
                    "dst": _PORT_REF,
                    "rate": {"type": "integer", "minimum": 1},
                    "delay": {"type": "integer", "minimum": 0},
                    "token_bytes": {"type": "integer", "minimum": 1},
                    "delay_payload_hex": {
                        "type": "string", "pattern": "^([0-9a-fA-F]{2})*$"},
                },
            },
        },
        "control": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "value_lengths": {
                    "type": "object",
                    "additionalProperties": {"type": "integer", "minimum": 1},
                },
                "table": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["port", "drp", "element"],
                        "additionalProperties": False,
                        "properties": {
                            "port": _PORT_REF,
                            "drp": _PORT_REF,
                            "element": {"type": "integer", "minimum": 1},
                        },
                    },
                },
            },
        },
    },
}


def parse_graph_file(path: str) -> dict[str, Any]:
    """Load and schema-validate a graph description; does not build it."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror or e}") from None
    try:
        desc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    try:
        jsonschema.validate(desc, GRAPH_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(k) for k in e.absolute_path) or "(root)"
        raise SchemaError(f"{path}: at {where}: {e.message}") from None
    return desc


def _load(path: str):
    return build_graph(parse_graph_file(path))


def _print_violations(violations) -> None:
    for v in violations:
        print(v.render())


def cmd_check(args) -> int:
    graph = _load(args.graph)
    from .rules import check_all

    violations = check_all(graph)
    if violations:
        _print_violations(violations)
        return EXIT_INCONSISTENT
    print(f"ok: {graph.name or args.graph}: {len(graph.actors)} actors, "
          f"{len(graph.fifos)} fifos, all design rules hold")
    return EXIT_OK


def cmd_analyze(args) -> int:
    graph = _load(args.graph)
    report = analyze(graph, c_factor=args.c_factor)
    print(f"graph {graph.name or args.graph}: {report.verdict}")
    if report.violations:
        _print_violations(report.violations)
    for d in report.diagnostics:
        print(d.render())
    for dpg in report.dpgs:
        print(f"region {dpg.q}: x={dpg.x} y={dpg.y} "
              f"components={len(dpg.dcs)} declared={dpg.declared_len}")
        for dc in dpg.dcs:
            kind = "placeholder" if dc.is_dummy else "chain"
            el = dc.elements[0] if len(dc.elements) == 1 else list(dc.elements)
            print(f"  dc{dc.index} ({kind}) element={el}: {' '.join(dc.members)}")
    for s in report.schedules:
        order = " ".join(a for a, _ in s.firings)
        print(f"schedule {s.region}: {order}")
    if report.bounds is not None:
        b = report.bounds
        print(f"bounds (buffering factor {b.c_factor}):")
        for fid in sorted(b.beta):
            per = {region: m[fid] for region, m in sorted(b.per_region.items())
                   if fid in m}
            inner = " ".join(f"{k}={v}" for k, v in per.items())
            print(f"  {fid}: {inner} beta={b.beta[fid]}")
    return EXIT_OK if report.consistent else EXIT_INCONSISTENT


def cmd_run(args) -> int:
    graph = _load(args.graph)
    trace_fh = None
    trace = None
    if args.trace:
        try:
            trace_fh = open(args.trace, "w", encoding="utf-8")
        except OSError as e:
            raise InvalidParams(f"cannot open trace file: {e}") from e
        trace = lambda line: print(line, file=trace_fh)  # noqa: E731
    try:
        cfg = RuntimeConfig(
            source_firings=args.iterations, c_factor=args.c_factor,
            seed=args.seed, jitter_ms=args.jitter_ms, jitter_seed=args.jitter_seed,
            pin_cores=args.pin, timeout_ms=args.timeout_ms, trace=trace,
        )
        rt = instantiate(graph, config=cfg)
        report = rt.run()
        print(f"run: {graph.name or args.graph}")
        for aid in sorted(report.firing_counts):
            print(f"  fired {aid}: {report.firing_counts[aid]}")
        for aid in sorted(report.sink_digests):
            print(f"  sink {aid}: sha256={report.sink_digests[aid]}")
        for fid in sorted(report.max_occupancy):
            bound = report.beta.get(fid)
            extra = f" bound {bound}" if bound is not None else ""
            print(f"  fifo {fid}: max occupancy {report.max_occupancy[fid]}"
                  f"{extra} slots {report.slots[fid]}")
        print(f"  rate checks: {report.eq1_checks} ({report.eq1_failures} failures)")
        print(f"  wall: {report.wall_ms:.1f} ms")
        if args.oracle:
            ref = interpret(graph, source_firings=args.iterations, seed=args.seed)
            if ref.sink_digests != report.sink_digests:
                detail = []
                for aid in sorted(set(ref.sink_digests) | set(report.sink_digests)):
                    got = report.sink_digests.get(aid, "<missing>")
                    want = ref.sink_digests.get(aid, "<missing>")
                    if got != want:
                        detail.append(f"{aid}: run={got} oracle={want}")
                raise OracleMismatch("; ".join(detail))
            print(f"  oracle: {len(ref.sink_digests)} sink digest(s) match")
        return EXIT_OK
    finally:
        if trace_fh is not None:
            trace_fh.close()


def cmd_capacity(args) -> int:
    graph = _load(args.graph)
    total = 0
    for f in sorted(graph.fifos, key=lambda f: f.id):
        plan = layout_plan(f.rate, f.delay, args.c_factor, f.token_bytes)
        total += plan.nbytes
        layout = "aligned ring" if plan.aligned else "unaligned"
        writes = ",".join(str(s) for s in plan.write_chunks)
        reads = ",".join(str(s) for s in plan.read_chunks)
        line = (f"{f.id}: {plan.nbytes} bytes ({plan.slots} slots of "
                f"{plan.token_bytes}, {layout}) writes={writes} reads={reads}")
        if plan.copy is not None:
            src, dst, count = plan.copy
            line += f" copy={src}->{dst} x{count}"
        print(line)
    print(f"total: {total} bytes")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tokenflow",
        description="Check, analyze and execute configurable dataflow graphs.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate structure and design rules")
    p.add_argument("graph", help="graph description (JSON)")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("analyze", help="full consistency analysis")
    p.add_argument("graph")
    p.add_argument("--c-factor", type=int, default=3,
                   help="channel buffering factor (default 3)")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("run", help="execute a graph")
    p.add_argument("graph")
    p.add_argument("--iterations", type=int, default=1,
                   help="source firings (default 1)")
    p.add_argument("--seed", type=int, default=None, help="behavior seed")
    p.add_argument("--jitter-ms", type=float, default=0.0,
                   help="max per-firing random delay in ms")
    p.add_argument("--jitter-seed", type=int, default=None)
    p.add_argument("--pin", action="store_true", help="pin actor threads to cores")
    p.add_argument("--trace", metavar="PATH", help="write channel events to a file")
    p.add_argument("--oracle", action="store_true",
                   help="use the single-threaded reference interpreter")
    p.add_argument("--c-factor", type=int, default=3)
    p.add_argument("--timeout-ms", type=float, default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("capacity", help="per-channel memory plan for a graph")
    p.add_argument("graph")
    p.add_argument("--c-factor", type=int, default=3,
                   help="channel buffering factor (default 3)")
    p.set_defaults(fn=cmd_capacity)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, SchemaError, GraphError, InvalidParams, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except InconsistentGraph as e:
        for v in e.report.violations:
            print(v.render(), file=sys.stderr)
        for d in e.report.diagnostics:
            print(d.render(), file=sys.stderr)
        return EXIT_INCONSISTENT
    except (ActorPanic, Timeout, OracleDeadlock, OracleMismatch) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
