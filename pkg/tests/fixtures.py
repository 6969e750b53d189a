"""Graph description builders shared across the test suite.

Each builder returns a plain description dict for build_graph. The clean_*
fixtures pass every design rule; each *_violation fixture trips exactly one
rule; the remaining builders target specific analysis or execution paths.
"""
from __future__ import annotations

from typing import Any


def port(pid: str, direction: str, kind: str = "srp", rate: int = 1) -> dict[str, Any]:
    return {"id": pid, "dir": direction, "kind": kind, "rate": rate}


def actor(aid: str, kind: str, ports, behavior: str = "", **params) -> dict[str, Any]:
    d: dict[str, Any] = {"id": aid, "kind": kind, "ports": list(ports)}
    if behavior:
        d["behavior"] = behavior
    if params:
        d["params"] = params
    return d


def fifo(fid: str, src: str, dst: str, rate: int = 1, delay: int = 0,
         token_bytes: int = 1, payload_hex: str | None = None) -> dict[str, Any]:
    d: dict[str, Any] = {"id": fid, "src": src, "dst": dst, "rate": rate,
                         "delay": delay, "token_bytes": token_bytes}
    if payload_hex is not None:
        d["delay_payload_hex"] = payload_hex
    return d


def control(lengths: dict[str, int], entries) -> dict[str, Any]:
    return {
        "value_lengths": dict(lengths),
        "table": [{"port": p, "drp": d, "element": e} for p, d, e in entries],
    }


def static_chain(stages: int = 3, rate: int = 1, token_bytes: int = 1,
                 delays: dict[int, int] | None = None) -> dict[str, Any]:
    """src -> s1 -> ... -> s<stages> -> sink, all identical rates.

    delays maps a 0-based fifo index (0 = the source fifo) to a delay count.
    """
    delays = delays or {}
    actors = [actor("src", "static", [port("out", "out", rate=rate)], "counter_source")]
    fifos = []
    prev = "src.out"
    for k in range(1, stages + 1):
        actors.append(actor(f"s{k}", "static",
                            [port("in", "in", rate=rate), port("out", "out", rate=rate)],
                            "passthrough"))
        fifos.append(fifo(f"f{k - 1}", prev, f"s{k}.in", rate=rate,
                          delay=delays.get(k - 1, 0), token_bytes=token_bytes))
        prev = f"s{k}.out"
    actors.append(actor("sink", "static", [port("in", "in", rate=rate)], "null_sink"))
    fifos.append(fifo(f"f{stages}", prev, "sink.in", rate=rate,
                      delay=delays.get(stages, 0), token_bytes=token_bytes))
    return {"name": "chain", "actors": actors, "fifos": fifos, "control": {}}


def broadcast_two_sinks() -> dict[str, Any]:
    """One source span fanned out to two independent sink chains."""
    return {
        "name": "broadcast",
        "actors": [
            actor("src", "static", [port("out", "out", rate=4)], "counter_source"),
            actor("sink_a", "static", [port("in", "in", rate=4)], "null_sink"),
            actor("sink_b", "static", [port("in", "in", rate=4)], "null_sink"),
        ],
        "fifos": [
            fifo("fa", "src.out", "sink_a.in", rate=4),
            fifo("fb", "src.out", "sink_b.in", rate=4),
        ],
        "control": {},
    }


def _pair_scaffold(x_drps, y_drps, table_entries, length: int):
    """Common q/src/x/y/sink shell used by the dynamic-pair fixtures."""
    actors = [
        actor("q", "config", [port("c", "out", "control_out")], "fixed_policy",
              length=length, element=1),
        actor("src", "static", [port("out", "out")], "counter_source"),
        actor("x", "dynamic",
              [port("ctl", "in", "control_in"), port("in", "in")] + x_drps, "route"),
        actor("y", "dynamic",
              [port("ctl", "in", "control_in")] + y_drps + [port("out", "out")],
              "merge"),
        actor("sink", "static", [port("in", "in")], "null_sink"),
    ]
    fifos = [
        fifo("c_x", "q.c", "x.ctl", token_bytes=length),
        fifo("c_y", "q.c", "y.ctl", token_bytes=length),
        fifo("f_src", "src.out", "x.in"),
        fifo("f_out", "y.out", "sink.in"),
    ]
    ctl = control({"q.c": length}, table_entries)
    return actors, fifos, ctl


def clean_single_chain() -> dict[str, Any]:
    """One dynamic pair joined by a single one-actor subchain (m1)."""
    actors, fifos, ctl = _pair_scaffold(
        [port("d1", "out", "drp")], [port("e1", "in", "drp")],
        [("q.c", "x.d1", 1), ("q.c", "y.e1", 1)], length=1)
    actors.append(actor("m1", "static", [port("in", "in"), port("out", "out")],
                        "passthrough"))
    fifos += [fifo("f_a", "x.d1", "m1.in"), fifo("f_b", "m1.out", "y.e1")]
    return {"name": "single_chain", "actors": actors, "fifos": fifos, "control": ctl}


def clean_two_component() -> dict[str, Any]:
    """Two independent one-actor subchains, one control element each."""
    actors, fifos, ctl = _pair_scaffold(
        [port("d1", "out", "drp"), port("d2", "out", "drp")],
        [port("e1", "in", "drp"), port("e2", "in", "drp")],
        [("q.c", "x.d1", 1), ("q.c", "y.e1", 1),
         ("q.c", "x.d2", 2), ("q.c", "y.e2", 2)], length=2)
    for k in (1, 2):
        actors.append(actor(f"m{k}", "static",
                            [port("in", "in"), port("out", "out")], "passthrough"))
        fifos += [fifo(f"f_a{k}", f"x.d{k}", f"m{k}.in"),
                  fifo(f"f_b{k}", f"m{k}.out", f"y.e{k}")]
    return {"name": "two_component", "actors": actors, "fifos": fifos, "control": ctl}


def shared_member_violation() -> dict[str, Any]:
    """Subchain actor z serves two dynamic pairs (x,y1) and (x,y2): rule 3.

    Every dynamic port sits on the same control element, so rule 1 stays
    green and only the shared membership is reported.
    """
    return {
        "name": "shared_member",
        "actors": [
            actor("q", "config", [port("c", "out", "control_out")], "fixed_policy",
                  length=1, element=1),
            actor("src", "static", [port("out", "out")], "counter_source"),
            actor("x", "dynamic",
                  [port("ctl", "in", "control_in"), port("in", "in"),
                   port("d1", "out", "drp")], "route"),
            actor("z", "static", [port("in", "in"), port("out", "out")], "passthrough"),
            actor("y1", "dynamic",
                  [port("ctl", "in", "control_in"), port("e1", "in", "drp"),
                   port("out", "out")], "merge"),
            actor("y2", "dynamic",
                  [port("ctl", "in", "control_in"), port("e1", "in", "drp"),
                   port("out", "out")], "merge"),
            actor("s1", "static", [port("in", "in")], "null_sink"),
            actor("s2", "static", [port("in", "in")], "null_sink"),
        ],
        "fifos": [
            fifo("c_x", "q.c", "x.ctl"),
            fifo("c_y1", "q.c", "y1.ctl"),
            fifo("c_y2", "q.c", "y2.ctl"),
            fifo("f_src", "src.out", "x.in"),
            fifo("f_xz", "x.d1", "z.in"),
            fifo("f_zy1", "z.out", "y1.e1"),
            fifo("f_zy2", "z.out", "y2.e1"),
            fifo("f_o1", "y1.out", "s1.in"),
            fifo("f_o2", "y2.out", "s2.in"),
        ],
        "control": control({"q.c": 1}, [("q.c", "x.d1", 1), ("q.c", "y1.e1", 1),
                                        ("q.c", "y2.e1", 1)]),
    }


def double_sided_violation() -> dict[str, Any]:
    """One dynamic actor w owning dynamic ports in both directions: rule 4.

    w has no partner on either side, so no linked pair exists and no other
    rule fires.
    """
    return {
        "name": "double_sided",
        "actors": [
            actor("q", "config", [port("c", "out", "control_out")], "fixed_policy",
                  length=1, element=1),
            actor("src", "static", [port("out", "out")], "counter_source"),
            actor("w", "dynamic",
                  [port("ctl", "in", "control_in"), port("din", "in", "drp"),
                   port("dout", "out", "drp")], "route"),
            actor("m", "static", [port("in", "in"), port("out", "out")], "passthrough"),
            actor("sink", "static", [port("in", "in")], "null_sink"),
        ],
        "fifos": [
            fifo("c_w", "q.c", "w.ctl"),
            fifo("f_src", "src.out", "w.din"),
            fifo("f_wm", "w.dout", "m.in"),
            fifo("f_out", "m.out", "sink.in"),
        ],
        "control": control({"q.c": 1}, [("q.c", "w.din", 1), ("q.c", "w.dout", 1)]),
    }


def unencapsulated_violation() -> dict[str, Any]:
    """Static actor b outside every x..y chain feeds subchain member a1: rule 5."""
    actors, fifos, ctl = _pair_scaffold(
        [port("d1", "out", "drp")], [port("e1", "in", "drp")],
        [("q.c", "x.d1", 1), ("q.c", "y.e1", 1)], length=1)
    actors += [
        actor("a1", "static",
              [port("in", "in"), port("side", "in"), port("out", "out")], "add_mod"),
        actor("b", "static", [port("in", "in"), port("out", "out")], "passthrough"),
        actor("src2", "static", [port("out", "out")], "counter_source"),
    ]
    fifos += [
        fifo("f_xa", "x.d1", "a1.in"),
        fifo("f_ay", "a1.out", "y.e1"),
        fifo("f_ba", "b.out", "a1.side"),
        fifo("f_s2b", "src2.out", "b.in"),
    ]
    return {"name": "unencapsulated", "actors": actors, "fifos": fifos, "control": ctl}


def encapsulated_pass() -> dict[str, Any]:
    """The rule-5 layout made legal: b also feeds y, putting it on an x..y chain."""
    desc = unencapsulated_violation()
    desc["name"] = "encapsulated"
    for a in desc["actors"]:
        if a["id"] == "y":
            a["ports"].insert(-1, port("side", "in"))
    desc["fifos"].append(fifo("f_by", "b.out", "y.side"))
    return desc


def three_component_split() -> dict[str, Any]:
    """K=4 output and L=3 input dynamic ports decomposing into three components.

    Component 1 is the two-branch chain {a1, a2, a3}, component 2 the single
    actor {a4}, component 3 the placeholder for the direct x->y link.
    """
    actors, fifos, ctl = _pair_scaffold(
        [port(f"d{k}", "out", "drp") for k in (1, 2, 3, 4)],
        [port(f"e{k}", "in", "drp") for k in (1, 2, 3)],
        [("q.c", "x.d1", 1), ("q.c", "x.d2", 1), ("q.c", "y.e1", 1),
         ("q.c", "x.d3", 2), ("q.c", "y.e2", 2),
         ("q.c", "x.d4", 3), ("q.c", "y.e3", 3)], length=3)
    actors += [
        actor("a1", "static", [port("in", "in"), port("out", "out")], "passthrough"),
        actor("a2", "static", [port("in", "in"), port("out", "out")], "passthrough"),
        actor("a3", "static",
              [port("in1", "in"), port("in2", "in"), port("out", "out")], "add_mod"),
        actor("a4", "static", [port("in", "in"), port("out", "out")], "passthrough"),
    ]
    fifos += [
        fifo("f_d1", "x.d1", "a1.in"),
        fifo("f_d2", "x.d2", "a2.in"),
        fifo("f_a13", "a1.out", "a3.in1"),
        fifo("f_a23", "a2.out", "a3.in2"),
        fifo("f_e1", "a3.out", "y.e1"),
        fifo("f_d3", "x.d3", "a4.in"),
        fifo("f_e2", "a4.out", "y.e2"),
        fifo("f_direct", "x.d4", "y.e3"),
    ]
    return {"name": "three_split", "actors": actors, "fifos": fifos, "control": ctl}


def diamond_component() -> dict[str, Any]:
    """One linked pair with two parallel subchains meeting in a join actor."""
    actors, fifos, ctl = _pair_scaffold(
        [port("d1", "out", "drp")], [port("e1", "in", "drp")],
        [("q.c", "x.d1", 1), ("q.c", "y.e1", 1)], length=1)
    actors += [
        actor("m1", "static", [port("in", "in"), port("out", "out")], "passthrough"),
        actor("m2", "static", [port("in", "in"), port("out", "out")], "passthrough"),
        actor("j", "static",
              [port("in1", "in"), port("in2", "in"), port("out", "out")], "add_mod"),
    ]
    fifos += [
        fifo("f_m1", "x.d1", "m1.in"),
        fifo("f_m2", "x.d1", "m2.in"),
        fifo("f_j1", "m1.out", "j.in1"),
        fifo("f_j2", "m2.out", "j.in2"),
        fifo("f_jy", "j.out", "y.e1"),
    ]
    return {"name": "diamond", "actors": actors, "fifos": fifos, "control": ctl}


def mismatched_elements() -> dict[str, Any]:
    """Directly linked ports on different control elements: rule 1."""
    actors, fifos, ctl = _pair_scaffold(
        [port("d1", "out", "drp")], [port("e1", "in", "drp")],
        [("q.c", "x.d1", 1), ("q.c", "y.e1", 2)], length=2)
    fifos.append(fifo("f_direct", "x.d1", "y.e1"))
    return {"name": "mismatched", "actors": actors, "fifos": fifos, "control": ctl}


def unbalanced_control_delay() -> dict[str, Any]:
    """Control broadcast with delays 1 vs 0 on the two fan-out fifos: rule 2."""
    desc = clean_single_chain()
    desc["name"] = "unbalanced_delay"
    for f in desc["fifos"]:
        if f["id"] == "c_x":
            f["delay"] = 1
    return desc


def orphan_dynamic() -> dict[str, Any]:
    """A dynamic actor whose ports link to no partner dynamic actor."""
    return {
        "name": "orphan",
        "actors": [
            actor("q", "config", [port("c", "out", "control_out")], "fixed_policy",
                  length=1, element=1),
            actor("src", "static", [port("out", "out")], "counter_source"),
            actor("x", "dynamic",
                  [port("ctl", "in", "control_in"), port("in", "in"),
                   port("d1", "out", "drp")], "route"),
            actor("sink", "static", [port("in", "in")], "null_sink"),
        ],
        "fifos": [
            fifo("c_x", "q.c", "x.ctl"),
            fifo("f_src", "src.out", "x.in"),
            fifo("f_xs", "x.d1", "sink.in"),
        ],
        "control": control({"q.c": 1}, [("q.c", "x.d1", 1)]),
    }


def shared_config() -> dict[str, Any]:
    """One configuration actor controlling two disjoint dynamic pairs."""
    base = clean_single_chain()
    actors = list(base["actors"])
    fifos = list(base["fifos"])
    actors += [
        actor("src2", "static", [port("out", "out")], "counter_source"),
        actor("x2", "dynamic",
              [port("ctl", "in", "control_in"), port("in", "in"),
               port("d1", "out", "drp")], "route"),
        actor("m2", "static", [port("in", "in"), port("out", "out")], "passthrough"),
        actor("y2", "dynamic",
              [port("ctl", "in", "control_in"), port("e1", "in", "drp"),
               port("out", "out")], "merge"),
        actor("sink2", "static", [port("in", "in")], "null_sink"),
    ]
    fifos += [
        fifo("c_x2", "q.c", "x2.ctl"),
        fifo("c_y2", "q.c", "y2.ctl"),
        fifo("f_src2", "src2.out", "x2.in"),
        fifo("f_a2", "x2.d1", "m2.in"),
        fifo("f_b2", "m2.out", "y2.e1"),
        fifo("f_out2", "y2.out", "sink2.in"),
    ]
    ctl = control({"q.c": 1},
                  [("q.c", "x.d1", 1), ("q.c", "y.e1", 1),
                   ("q.c", "x2.d1", 1), ("q.c", "y2.e1", 1)])
    return {"name": "shared_config", "actors": actors, "fifos": fifos, "control": ctl}


def uncontrolled_port() -> dict[str, Any]:
    """A dynamic port missing from the control table."""
    desc = clean_single_chain()
    desc["name"] = "uncontrolled"
    desc["control"]["table"] = [r for r in desc["control"]["table"]
                                if r["drp"] != "y.e1"]
    return desc


def two_cycle(delay: int = 2, rate: int = 2) -> dict[str, Any]:
    """a and b feeding each other; schedulable only if the back edge holds delay."""
    return {
        "name": "two_cycle",
        "actors": [
            actor("a", "static",
                  [port("in", "in", rate=rate), port("out", "out", rate=rate)],
                  "passthrough"),
            actor("b", "static",
                  [port("in", "in", rate=rate), port("out", "out", rate=rate)],
                  "passthrough"),
        ],
        "fifos": [
            fifo("f_ab", "a.out", "b.in", rate=rate),
            fifo("f_ba", "b.out", "a.in", rate=rate, delay=delay),
        ],
        "control": {},
    }


def rate_pair(atr: int = 2) -> dict[str, Any]:
    """Minimal runnable pair whose dynamic ports carry a rate above one."""
    return {
        "name": "rate_pair",
        "actors": [
            actor("q", "config", [port("c", "out", "control_out")],
                  "alternate_policy", length=1),
            actor("src", "static", [port("out", "out", rate=atr)], "counter_source"),
            actor("x", "dynamic",
                  [port("ctl", "in", "control_in"), port("in", "in", rate=atr),
                   port("d1", "out", "drp", rate=atr)], "route"),
            actor("m1", "static",
                  [port("in", "in", rate=atr), port("out", "out", rate=atr)],
                  "passthrough"),
            actor("y", "dynamic",
                  [port("ctl", "in", "control_in"), port("e1", "in", "drp", rate=atr),
                   port("out", "out", rate=atr)], "merge"),
            actor("sink", "static", [port("in", "in", rate=atr)], "null_sink"),
        ],
        "fifos": [
            fifo("c_x", "q.c", "x.ctl"),
            fifo("c_y", "q.c", "y.ctl"),
            fifo("f_src", "src.out", "x.in", rate=atr),
            fifo("f_a", "x.d1", "m1.in", rate=atr),
            fifo("f_b", "m1.out", "y.e1", rate=atr),
            fifo("f_out", "y.out", "sink.in", rate=atr),
        ],
        "control": control({"q.c": 1}, [("q.c", "x.d1", 1), ("q.c", "y.e1", 1)]),
    }


def gated_pipeline() -> dict[str, Any]:
    """Runnable two-branch selector: one branch active per firing, alternating."""
    return {
        "name": "gated",
        "actors": [
            actor("q", "config", [port("c", "out", "control_out")],
                  "alternate_policy", length=2),
            actor("src", "static", [port("out", "out")], "counter_source"),
            actor("x", "dynamic",
                  [port("ctl", "in", "control_in"), port("in", "in"),
                   port("d1", "out", "drp"), port("d2", "out", "drp")], "route"),
            actor("m1", "static", [port("in", "in"), port("out", "out")],
                  "add_mod", offset=1),
            actor("m2", "static", [port("in", "in"), port("out", "out")],
                  "add_mod", offset=2),
            actor("y", "dynamic",
                  [port("ctl", "in", "control_in"), port("e1", "in", "drp"),
                   port("e2", "in", "drp"), port("out", "out")], "merge"),
            actor("sink", "static", [port("in", "in")], "null_sink"),
        ],
        "fifos": [
            fifo("c_x", "q.c", "x.ctl", token_bytes=2),
            fifo("c_y", "q.c", "y.ctl", token_bytes=2),
            fifo("f_src", "src.out", "x.in"),
            fifo("f_m1", "x.d1", "m1.in"),
            fifo("f_m2", "x.d2", "m2.in"),
            fifo("f_e1", "m1.out", "y.e1"),
            fifo("f_e2", "m2.out", "y.e2"),
            fifo("f_out", "y.out", "sink.in"),
        ],
        "control": control({"q.c": 2},
                           [("q.c", "x.d1", 1), ("q.c", "y.e1", 1),
                            ("q.c", "x.d2", 2), ("q.c", "y.e2", 2)]),
    }


def stranded_tokens() -> dict[str, Any]:
    """Join with an empty zero-delay feedback loop; strands the source tokens.

    The join never fires because its loop input starts empty, so everything
    the source produces piles up. Analysis rejects this graph; the fixture
    exists to exercise executors invoked without the analysis gate.
    """
    return {
        "name": "stranded",
        "actors": [
            actor("src", "static", [port("out", "out")], "counter_source"),
            actor("j", "static",
                  [port("i1", "in"), port("loop_in", "in"),
                   port("out", "out"), port("loop_out", "out")], "add_mod"),
            actor("sink", "static", [port("in", "in")], "null_sink"),
        ],
        "fifos": [
            fifo("f_in", "src.out", "j.i1"),
            fifo("f_loop", "j.loop_out", "j.loop_in"),
            fifo("f_out", "j.out", "sink.in"),
        ],
        "control": {},
    }
