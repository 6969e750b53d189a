"""Frame-difference motion detection over a smoothed video stream.

src -> blur -> (current, one-frame delay) -> diff/threshold -> median -> sink

One token is one 64x64 8-bit frame. The delayed channel starts with a zero
frame, so the first firing compares against black. All arithmetic is integer
and bit-exact: 5x5 binomial blur with truncating shift, absolute-difference
threshold, and a plus-shaped 5-point median on the motion mask.
"""
from __future__ import annotations

import random
from typing import Any, Mapping

import numpy as np

from ..behavior import ActorBehavior, FireContext, behavior
from . import CorpusApp

SIDE = 64
FRAME_BYTES = SIDE * SIDE
KERNEL = (1, 4, 6, 4, 1)  # binomial; outer product sums to 256


def _as_frame(span) -> np.ndarray:
    return np.frombuffer(span, dtype=np.uint8).reshape(SIDE, SIDE)


@behavior("gauss_blur")
class GaussBlur(ActorBehavior):
    """Separable 5x5 binomial smoothing; the 2-pixel border passes through."""

    def fire(self, ctx: FireContext) -> None:
        a = _as_frame(next(iter(ctx.inputs.values()))).astype(np.int32)
        w = SIDE - 4
        rows = np.zeros((SIDE, w), dtype=np.int32)
        for d, k in enumerate(KERNEL):
            rows += k * a[:, d:d + w]
        cols = np.zeros((w, w), dtype=np.int32)
        for d, k in enumerate(KERNEL):
            cols += k * rows[d:d + w, :]
        out = a.copy()
        out[2:SIDE - 2, 2:SIDE - 2] = cols >> 8
        data = out.astype(np.uint8).tobytes()
        for span in ctx.outputs.values():
            span[:] = data


@behavior("frame_diff_threshold")
class FrameDiffThreshold(ActorBehavior):
    def fire(self, ctx: FireContext) -> None:
        cur = _as_frame(ctx.inputs["cur"]).astype(np.int32)
        prev = _as_frame(ctx.inputs["prev"]).astype(np.int32)
        thr = int(ctx.params.get("threshold", 16))
        mask = np.where(np.abs(cur - prev) > thr, 255, 0).astype(np.uint8)
        for span in ctx.outputs.values():
            span[:] = mask.tobytes()


@behavior("plus_median")
class PlusMedian(ActorBehavior):
    """Median of center and 4-neighborhood; the 1-pixel border passes through."""

    def fire(self, ctx: FireContext) -> None:
        a = _as_frame(next(iter(ctx.inputs.values())))
        c = a[1:-1, 1:-1]
        stack = np.stack([c, a[:-2, 1:-1], a[2:, 1:-1], a[1:-1, :-2], a[1:-1, 2:]])
        out = a.copy()
        out[1:-1, 1:-1] = np.sort(stack, axis=0)[2]
        for span in ctx.outputs.values():
            span[:] = out.tobytes()


def build_description(input_path: str = "input.bin") -> dict[str, Any]:
    def srp(pid, direction):
        return {"id": pid, "dir": direction, "kind": "srp", "rate": 1}

    return {
        "name": "motion",
        "actors": [
            {"id": "src", "kind": "static", "behavior": "file_source",
             "params": {"path": input_path}, "ports": [srp("out", "out")]},
            {"id": "blur", "kind": "static", "behavior": "gauss_blur",
             "ports": [srp("in", "in"), srp("out", "out")]},
            {"id": "detect", "kind": "static", "behavior": "frame_diff_threshold",
             "params": {"threshold": 16},
             "ports": [srp("cur", "in"), srp("prev", "in"), srp("out", "out")]},
            {"id": "clean", "kind": "static", "behavior": "plus_median",
             "ports": [srp("in", "in"), srp("out", "out")]},
            {"id": "sink", "kind": "static", "behavior": "null_sink",
             "ports": [srp("in", "in")]},
        ],
        "fifos": [
            {"id": "f_src", "src": "src.out", "dst": "blur.in",
             "rate": 1, "delay": 0, "token_bytes": FRAME_BYTES},
            {"id": "f_cur", "src": "blur.out", "dst": "detect.cur",
             "rate": 1, "delay": 0, "token_bytes": FRAME_BYTES},
            {"id": "f_prev", "src": "blur.out", "dst": "detect.prev",
             "rate": 1, "delay": 1, "token_bytes": FRAME_BYTES},
            {"id": "f_mask", "src": "detect.out", "dst": "clean.in",
             "rate": 1, "delay": 0, "token_bytes": FRAME_BYTES},
            {"id": "f_out", "src": "clean.out", "dst": "sink.in",
             "rate": 1, "delay": 0, "token_bytes": FRAME_BYTES},
        ],
        "control": {},
    }


def make_input(seed: int, frames: int) -> bytes:
    return random.Random(seed).randbytes(frames * FRAME_BYTES)


def make_app(frames: int = 16, seed: int = 7) -> CorpusApp:
    return CorpusApp(
        name="motion",
        description=build_description(),
        input_bytes=make_input(seed, frames),
        iterations=frames,
        seed=seed,
    )
