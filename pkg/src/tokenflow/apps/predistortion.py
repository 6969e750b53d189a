"""Multi-branch digital predistortion with per-block branch selection.

A configuration actor picks a subset of four filter branches every block.
The splitter routes the block to the chosen branches, each branch runs a
10-tap complex FIR over the sample stream it has seen, and the combiner sums
the active branch outputs in ascending branch order before the sink.

One token is a block of 256 complex samples stored as planes: 256 float32
real values followed by 256 float32 imaginary values (2048 bytes). All
float32 operations keep a fixed order so results are reproducible bit for
bit across executors.
"""
from __future__ import annotations

import random
from typing import Any, Mapping

import numpy as np

from ..behavior import ActorBehavior, FireContext, behavior
from . import CorpusApp

BLOCK = 256
TAPS = 10
BRANCHES = 4
TOKEN_BYTES = BLOCK * 2 * 4


def branch_taps(k: int) -> tuple[list[float], list[float]]:
    """Deterministic tap sets, distinct per branch, stored as exact float32."""
    re = [float(np.float32(0.05 * (k + 1) / (t + 1))) for t in range(TAPS)]
    im = [float(np.float32(0.002 * (k + 1) * (t - 4.5))) for t in range(TAPS)]
    return re, im


def _planes(span) -> tuple[np.ndarray, np.ndarray]:
    buf = np.frombuffer(span, dtype=np.float32)
    return buf[:BLOCK], buf[BLOCK:]


@behavior("fir_branch")
class FirBranch(ActorBehavior):
    """Complex FIR over the branch's own sample history."""

    def init(self, actor_id: str, params: Mapping, seed: int | None) -> None:
        self.cr = [np.float32(c) for c in params["re"]]
        self.ci = [np.float32(c) for c in params["im"]]
        self.hr = np.zeros(TAPS - 1, dtype=np.float32)
        self.hi = np.zeros(TAPS - 1, dtype=np.float32)

    def fire(self, ctx: FireContext) -> None:
        xr, xi = _planes(next(iter(ctx.inputs.values())))
        fr = np.concatenate([self.hr, xr])
        fi = np.concatenate([self.hi, xi])
        acc_r = np.zeros(BLOCK, dtype=np.float32)
        acc_i = np.zeros(BLOCK, dtype=np.float32)
        for t in range(TAPS):
            seg_r = fr[TAPS - 1 - t:TAPS - 1 - t + BLOCK]
            seg_i = fi[TAPS - 1 - t:TAPS - 1 - t + BLOCK]
            acc_r = acc_r + (self.cr[t] * seg_r - self.ci[t] * seg_i)
            acc_i = acc_i + (self.cr[t] * seg_i + self.ci[t] * seg_r)
        self.hr = fr[BLOCK:].copy()
        self.hi = fi[BLOCK:].copy()
        out = next(iter(ctx.outputs.values()))
        out[:] = np.concatenate([acc_r, acc_i]).tobytes()


@behavior("branch_sum")
class BranchSum(ActorBehavior):
    """Sums active branch blocks in ascending input-port order."""

    def fire(self, ctx: FireContext) -> None:
        acc_r = np.zeros(BLOCK, dtype=np.float32)
        acc_i = np.zeros(BLOCK, dtype=np.float32)
        for pid in sorted(ctx.inputs):
            span = ctx.inputs[pid]
            if not len(span):
                continue
            xr, xi = _planes(span)
            acc_r = acc_r + xr
            acc_i = acc_i + xi
        for out in ctx.outputs.values():
            out[:] = np.concatenate([acc_r, acc_i]).tobytes()


def build_description(input_path: str = "input.bin") -> dict[str, Any]:
    actors: list[dict[str, Any]] = [
        {"id": "src", "kind": "static", "behavior": "file_source",
         "params": {"path": input_path},
         "ports": [{"id": "out", "dir": "out", "kind": "srp", "rate": 1}]},
        {"id": "conf", "kind": "config", "behavior": "subset_policy",
         "params": {"length": BRANCHES, "min_active": 2},
         "ports": [{"id": "ctl", "dir": "out", "kind": "control_out", "rate": 1}]},
        {"id": "split", "kind": "dynamic", "behavior": "route",
         "ports": [{"id": "in", "dir": "in", "kind": "srp", "rate": 1},
                   {"id": "ctl", "dir": "in", "kind": "control_in", "rate": 1}]
         + [{"id": f"d{k}", "dir": "out", "kind": "drp", "rate": 1}
            for k in range(1, BRANCHES + 1)]},
        {"id": "combine", "kind": "dynamic", "behavior": "branch_sum",
         "ports": [{"id": "ctl", "dir": "in", "kind": "control_in", "rate": 1}]
         + [{"id": f"e{k}", "dir": "in", "kind": "drp", "rate": 1}
            for k in range(1, BRANCHES + 1)]
         + [{"id": "out", "dir": "out", "kind": "srp", "rate": 1}]},
        {"id": "sink", "kind": "static", "behavior": "null_sink",
         "ports": [{"id": "in", "dir": "in", "kind": "srp", "rate": 1}]},
    ]
    for k in range(1, BRANCHES + 1):
        re, im = branch_taps(k - 1)
        actors.append({
            "id": f"b{k}", "kind": "static", "behavior": "fir_branch",
            "params": {"re": re, "im": im},
            "ports": [{"id": "in", "dir": "in", "kind": "srp", "rate": 1},
                      {"id": "out", "dir": "out", "kind": "srp", "rate": 1}],
        })

    fifos: list[dict[str, Any]] = [
        {"id": "f_src", "src": "src.out", "dst": "split.in",
         "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES},
        {"id": "c_split", "src": "conf.ctl", "dst": "split.ctl",
         "rate": 1, "delay": 0, "token_bytes": BRANCHES},
        {"id": "c_combine", "src": "conf.ctl", "dst": "combine.ctl",
         "rate": 1, "delay": 0, "token_bytes": BRANCHES},
        {"id": "f_out", "src": "combine.out", "dst": "sink.in",
         "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES},
    ]
    for k in range(1, BRANCHES + 1):
        fifos.append({"id": f"f_in{k}", "src": f"split.d{k}", "dst": f"b{k}.in",
                      "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES})
        fifos.append({"id": f"f_fir{k}", "src": f"b{k}.out", "dst": f"combine.e{k}",
                      "rate": 1, "delay": 0, "token_bytes": TOKEN_BYTES})

    table = []
    for k in range(1, BRANCHES + 1):
        table.append({"port": "conf.ctl", "drp": f"split.d{k}", "element": k})
        table.append({"port": "conf.ctl", "drp": f"combine.e{k}", "element": k})

    return {
        "name": "predistortion",
        "actors": actors,
        "fifos": fifos,
        "control": {"value_lengths": {"conf.ctl": BRANCHES}, "table": table},
    }


def make_input(seed: int, blocks: int) -> bytes:
    rng = random.Random(seed)
    chunks = []
    for _ in range(blocks):
        vals = [rng.uniform(-1.0, 1.0) for _ in range(BLOCK * 2)]
        chunks.append(np.array(vals, dtype=np.float32).tobytes())
    return b"".join(chunks)


def make_app(blocks: int = 160, seed: int = 11) -> CorpusApp:
    return CorpusApp(
        name="predistortion",
        description=build_description(),
        input_bytes=make_input(seed, blocks),
        iterations=blocks,
        seed=seed,
    )
