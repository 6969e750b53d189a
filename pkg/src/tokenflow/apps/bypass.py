"""Matrix pipeline with a switchable bypass around the transform chain.

Every other input matrix flows through three chained 8x8 matrix multiplies;
the rest take a direct bypass channel straight to the merge actor, which
stamps bypassed matrices with a constant marker. The bypass channel links
the two dynamic actors with no actors in between, exercising the
placeholder-component path of the analysis.

One token is an 8x8 float32 matrix (256 bytes). Multiplies accumulate in
ascending inner-product order so results match a scalar reference exactly.
"""
from __future__ import annotations

import random
from typing import Any, Mapping

import numpy as np

from ..behavior import ActorBehavior, FireContext, behavior
from . import CorpusApp

N = 8
TOKEN_BYTES = N * N * 4
MARKER = 0.5


def layer_weights(layer: int) -> list[float]:
    """Deterministic 8x8 weights, stored as exact float32 values."""
    out = []
    for i in range(N):
        for k in range(N):
            out.append(float(np.float32(0.1 + 0.05 * layer - 0.01 * i + 0.02 * k)))
    return out


@behavior("matmul")
class MatMul(ActorBehavior):
    """out = W @ in, accumulated one inner-product term at a time."""

    def init(self, actor_id: str, params: Mapping, seed: int | None) -> None:
        self.w = np.array(params["w"], dtype=np.float32).reshape(N, N)

    def fire(self, ctx: FireContext) -> None:
        x = np.frombuffer(next(iter(ctx.inputs.values())), dtype=np.float32).reshape(N, N)
        acc = np.zeros((N, N), dtype=np.float32)
        for k in range(N):
            acc = acc + np.multiply.outer(self.w[:, k], x[k, :])
        for out in ctx.outputs.values():
            out[:] = acc.tobytes()


@behavior("path_merge")
class PathMerge(ActorBehavior):
    """Forwards the active path; bypassed matrices get the marker added."""

    def fire(self, ctx: FireContext) -> None:
        marker = np.float32(ctx.params.get("marker", MARKER))
        bypass_port = ctx.params.get("bypass_port", "")
        live = [(pid, ctx.inputs[pid]) for pid in sorted(ctx.inputs)
                if len(ctx.inputs[pid])]
        (pid, span), = live
        x = np.frombuffer(span, dtype=np.float32)
        if pid == bypass_port:
            x = x + marker
        for out in ctx.outputs.values():
            out[:] = x.tobytes()


def build_description(input_path: str = "input.bin") -> dict[str, Any]:
    actors: list[dict[str, Any]] = [
        {"id": "src", "kind": "static", "behavior": "file_source",
         "params": {"path": input_path},
         "ports": [{"id": "out", "dir": "out", "kind": "srp", "rate": 1}]},
        {"id": "conf", "kind": "config", "behavior": "alternate_policy",
         "params": {"length": 2},
         "ports": [{"id": "ctl", "dir": "out", "kind": "control_out", "rate": 1}]},
        {"id": "fork", "kind": "dynamic", "behavior": "route",
         "ports": [{"id": "in", "dir": "in", "kind": "srp", "rate": 1},
                   {"id": "ctl", "dir": "in", "kind": "control_in", "rate": 1},
                   {"id": "d1", "dir": "out", "kind": "drp", "rate": 1},
                   {"id": "d2", "dir": "out", "kind": "drp", "rate": 1}]},
        {"id": "join", "kind": "dynamic", "behavior": "path_merge",
         "params": {"marker": MARKER, "bypass_port": "e2"},
         "ports": [{"id": "ctl", "dir": "in", "kind": "control_in", "rate": 1},
                   {"id": "e1", "dir": "in", "kind": "drp", "rate": 1},
                   {"id": "e2", "dir": "in", "kind": "drp", "rate": 1},
                   {"id": "out", "dir": "out", "kind": "srp", "rate": 1}]},
        {"id": "sink", "kind": "static", "behavior": "null_sink",
         "ports": [{"id": "in", "dir": "in", "kind": "srp", "rate": 1}]},
    ]
    for layer in (1, 2, 3):
        actors.append({
            "id": f"l{layer}", "kind": "static", "behavior": "matmul",
            "params": {"w": layer_weights(layer)},
            "ports": [{"id": "in", "dir": "in", "kind": "srp", "rate": 1},
                      {"id": "out", "dir": "out", "kind": "srp", "rate": 1}],
        })

    fifos = [
        {"id": "f_src", "src": "src.out", "dst": "fork.in",
         "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES},
        {"id": "c_fork", "src": "conf.ctl", "dst": "fork.ctl",
         "rate": 1, "delay": 0, "token_bytes": 2},
        {"id": "c_join", "src": "conf.ctl", "dst": "join.ctl",
         "rate": 1, "delay": 0, "token_bytes": 2},
        {"id": "f_l1", "src": "fork.d1", "dst": "l1.in",
         "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES},
        {"id": "f_l2", "src": "l1.out", "dst": "l2.in",
         "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES},
        {"id": "f_l3", "src": "l2.out", "dst": "l3.in",
         "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES},
        {"id": "f_chain", "src": "l3.out", "dst": "join.e1",
         "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES},
        {"id": "f_bypass", "src": "fork.d2", "dst": "join.e2",
         "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES},
        {"id": "f_out", "src": "join.out", "dst": "sink.in",
         "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES},
    ]

    table = [
        {"port": "conf.ctl", "drp": "fork.d1", "element": 1},
        {"port": "conf.ctl", "drp": "join.e1", "element": 1},
        {"port": "conf.ctl", "drp": "fork.d2", "element": 2},
        {"port": "conf.ctl", "drp": "join.e2", "element": 2},
    ]

    return {
        "name": "bypass",
        "actors": actors,
        "fifos": fifos,
        "control": {"value_lengths": {"conf.ctl": 2}, "table": table},
    }


def make_input(seed: int, mats: int) -> bytes:
    rng = random.Random(seed)
    chunks = []
    for _ in range(mats):
        vals = [rng.uniform(-1.0, 1.0) for _ in range(N * N)]
        chunks.append(np.array(vals, dtype=np.float32).tobytes())
    return b"".join(chunks)


def make_app(mats: int = 32, seed: int = 5) -> CorpusApp:
    return CorpusApp(
        name="bypass",
        description=build_description(),
        input_bytes=make_input(seed, mats),
        iterations=mats,
        seed=seed,
    )
