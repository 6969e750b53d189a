"""Command line frontend: subcommands, output formats, and exit codes."""
import json
import os
import re
import shutil
import subprocess

import pytest

from tokenflow.behavior import ActorBehavior, behavior
from tokenflow.cli import main

import fixtures as fx


@behavior("unstable_source")
class UnstableSource(ActorBehavior):
    """Emits fresh random bytes every firing; never matches the oracle."""

    def fire(self, ctx):
        for span in ctx.outputs.values():
            span[:] = os.urandom(len(span))


def write_graph(tmp_path, desc, name="g.json"):
    p = tmp_path / name
    p.write_text(json.dumps(desc))
    return str(p)


def one_fifo(rate=4, delay=1, token_bytes=1):
    return {
        "name": "one",
        "actors": [
            fx.actor("src", "static", [fx.port("out", "out", rate=rate)],
                     "counter_source"),
            fx.actor("sink", "static", [fx.port("in", "in", rate=rate)],
                     "null_sink"),
        ],
        "fifos": [fx.fifo("f", "src.out", "sink.in", rate=rate, delay=delay,
                          token_bytes=token_bytes)],
        "control": {},
    }


# -- check ----------------------------------------------------------------------

def test_check_reports_ok(tmp_path, capsys):
    rc = main(["check", write_graph(tmp_path, fx.static_chain(3))])
    assert rc == 0
    out = capsys.readouterr().out
    assert out == "ok: chain: 5 actors, 4 fifos, all design rules hold\n"


def test_check_prints_violations_and_fails(tmp_path, capsys):
    rc = main(["check", write_graph(tmp_path, fx.double_sided_violation())])
    assert rc == 1
    out = capsys.readouterr().out
    assert "rule 4 (single-sided dynamism rule): w:" in out


def test_check_orders_violations_by_rule(tmp_path, capsys):
    desc = fx.mismatched_elements()
    for f in desc["fifos"]:
        if f["id"] == "c_x":
            f["delay"] = 1
    rc = main(["check", write_graph(tmp_path, desc)])
    assert rc == 1
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("rule 1 ")
    assert lines[1].startswith("rule 2 ")


# -- analyze --------------------------------------------------------------------

def test_analyze_prints_regions_schedules_and_bounds(tmp_path, capsys):
    rc = main(["analyze", write_graph(tmp_path, fx.three_component_split())])
    assert rc == 0
    out = capsys.readouterr().out
    assert "graph three_split: consistent" in out
    assert "region q: x=x y=y components=3 declared=3" in out
    assert "  dc1 (chain) element=1: a1 a2 a3" in out
    assert "  dc2 (chain) element=2: a4" in out
    assert "  dc3 (placeholder) element=3: dummy:f_direct" in out
    assert "schedule q.dc1: x a1 a2 a3 y" in out
    assert "schedule q.dc2: x a4 y" in out
    assert "schedule q.dc3: x y" in out
    assert re.search(r"^schedule static: ", out, re.M)
    assert "bounds (buffering factor 3):" in out
    assert "  f_direct: q.dc3=1 static=1 beta=3" in out


def test_analyze_flags_rule_violations(tmp_path, capsys):
    rc = main(["analyze", write_graph(tmp_path, fx.mismatched_elements())])
    assert rc == 1
    out = capsys.readouterr().out
    assert "graph mismatched: inconsistent" in out
    assert "rule 1 (linked port control rule)" in out


def test_analyze_flags_diagnostics(tmp_path, capsys):
    rc = main(["analyze", write_graph(tmp_path, fx.orphan_dynamic())])
    assert rc == 1
    assert "OrphanDynamicActor: x:" in capsys.readouterr().out


def test_analyze_c_factor_scales_beta(tmp_path, capsys):
    path = write_graph(tmp_path, fx.static_chain(1))
    main(["analyze", path, "--c-factor", "5"])
    out = capsys.readouterr().out
    assert "bounds (buffering factor 5):" in out
    assert "  f0: static=1 beta=5" in out


# -- run ------------------------------------------------------------------------

def test_run_reports_firings_digests_and_checks(tmp_path, capsys):
    rc = main(["run", write_graph(tmp_path, fx.gated_pipeline()),
               "--iterations", "8", "--seed", "3", "--oracle"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "run: gated" in out
    assert "  fired src: 8" in out
    assert "  fired m1: 4" in out
    assert re.search(r"^  sink sink: sha256=[0-9a-f]{64}$", out, re.M)
    assert "  rate checks: 32 (0 failures)" in out
    assert "  oracle: 1 sink digest(s) match" in out
    assert re.search(r"^  fifo f_src: max occupancy \d+ bound \d+ slots \d+$",
                     out, re.M)


def test_run_writes_a_trace_file(tmp_path, capsys):
    trace = tmp_path / "events.log"
    rc = main(["run", write_graph(tmp_path, fx.gated_pipeline()),
               "--iterations", "4", "--trace", str(trace)])
    assert rc == 0
    lines = trace.read_text().splitlines()
    assert lines
    for line in lines:
        assert re.match(r"^\S+ (w|r|copy) \d+$", line), line


def test_run_rejects_inconsistent_graphs(tmp_path, capsys):
    rc = main(["run", write_graph(tmp_path, fx.mismatched_elements())])
    assert rc == 1
    assert "rule 1" in capsys.readouterr().err


def test_run_oracle_mismatch_is_a_runtime_failure(tmp_path, capsys):
    desc = fx.static_chain(1)
    desc["actors"][0]["behavior"] = "unstable_source"
    rc = main(["run", write_graph(tmp_path, desc),
               "--iterations", "4", "--oracle"])
    assert rc == 3
    err = capsys.readouterr().err
    assert "sink: run=" in err and "oracle=" in err


def test_run_actor_failure_exits_three(tmp_path, capsys):
    data = tmp_path / "short.bin"
    data.write_bytes(b"ab")
    desc = fx.static_chain(1)
    desc["actors"][0] = fx.actor("src", "static",
                                 [fx.port("out", "out")], "file_source",
                                 path=str(data))
    rc = main(["run", write_graph(tmp_path, desc), "--iterations", "4"])
    assert rc == 3
    assert "actor src failed" in capsys.readouterr().err


def test_run_timeout_exits_three(tmp_path, capsys):
    rc = main(["run", write_graph(tmp_path, fx.two_cycle()),
               "--timeout-ms", "100"])
    assert rc == 3
    assert "exceeded 100 ms" in capsys.readouterr().err


def test_run_unknown_behavior_is_an_input_error(tmp_path, capsys):
    desc = fx.static_chain(1)
    desc["actors"][0]["behavior"] = "no_such_behavior"
    rc = main(["run", write_graph(tmp_path, desc)])
    assert rc == 2
    assert "unknown behavior 'no_such_behavior'" in capsys.readouterr().err


# -- capacity -------------------------------------------------------------------

def test_capacity_prints_the_memory_plan(tmp_path, capsys):
    rc = main(["capacity", write_graph(tmp_path, one_fifo(4, 1, 1))])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.splitlines() == [
        "f: 13 bytes (13 slots of 1, unaligned) writes=1,5,9 reads=0,4,8"
        " copy=12->0 x1",
        "total: 13 bytes",
    ]


def test_capacity_aligned_ring_has_no_copy(tmp_path, capsys):
    rc = main(["capacity", write_graph(tmp_path, fx.broadcast_two_sinks())])
    assert rc == 0
    out = capsys.readouterr().out
    assert "fa: 12 bytes (12 slots of 1, aligned ring)" in out
    assert "copy=" not in out
    assert "total: 24 bytes" in out


def test_capacity_honours_the_c_factor(tmp_path, capsys):
    path = write_graph(tmp_path, fx.broadcast_two_sinks())
    main(["capacity", path, "--c-factor", "2"])
    assert "total: 16 bytes" in capsys.readouterr().out


def test_capacity_rejects_a_bad_factor(tmp_path, capsys):
    rc = main(["capacity", write_graph(tmp_path, one_fifo()), "--c-factor", "0"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


# -- input failure modes --------------------------------------------------------

def test_missing_file_is_an_input_error(capsys):
    rc = main(["check", "/nonexistent/graph.json"])
    assert rc == 2
    assert "error: /nonexistent/graph.json:" in capsys.readouterr().err


def test_bad_json_reports_line_and_column(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{ oops")
    rc = main(["check", str(p)])
    assert rc == 2
    assert f"error: {p}:1:3:" in capsys.readouterr().err


def test_schema_error_names_the_json_path(tmp_path, capsys):
    desc = {"actors": [], "fifos": [{"id": "f", "src": "a.out"}]}
    rc = main(["check", write_graph(tmp_path, desc)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "at fifos/0:" in err and "'dst' is a required property" in err


def test_schema_error_at_the_root(tmp_path, capsys):
    rc = main(["check", write_graph(tmp_path, {"fifos": []})])
    assert rc == 2
    assert "at (root): 'actors' is a required property" in capsys.readouterr().err


def test_structural_errors_are_input_errors(tmp_path, capsys):
    desc = fx.static_chain(1)
    desc["fifos"][0]["src"] = "ghost.out"
    rc = main(["check", write_graph(tmp_path, desc)])
    assert rc == 2
    assert "ghost" in capsys.readouterr().err


def test_unwritable_trace_path_is_an_input_error(tmp_path, capsys):
    path = write_graph(tmp_path, fx.static_chain(1))
    rc = main(["run", path, "--trace", str(tmp_path / "no_such_dir" / "t.log")])
    assert rc == 2
    assert "error: cannot open trace file:" in capsys.readouterr().err


def test_no_arguments_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_unknown_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


# -- installed entry point ------------------------------------------------------

@pytest.mark.skipif(shutil.which("tokenflow") is None,
                    reason="console script not installed")
def test_console_script_runs(tmp_path):
    path = write_graph(tmp_path, fx.static_chain(1))
    proc = subprocess.run(["tokenflow", "check", path],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert proc.stdout.startswith("ok: chain:")
