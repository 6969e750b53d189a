"""Bundled demonstration applications.

Each app module builds a graph description, generates a deterministic input
stream and registers the behaviors the graph names. CorpusApp packages one
configured instance; write() emits the three artifacts a standalone run
needs (graph.json, input.bin, golden.json with reference sink digests).
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any

from ..interp import interpret
from ..model import Graph, build_graph


@dataclass
class CorpusApp:
    name: str
    description: dict[str, Any]
    input_bytes: bytes
    iterations: int
    seed: int | None = None

    def graph(self, input_path: str | None = None) -> Graph:
        desc = self.description
        if input_path is not None:
            desc = json.loads(json.dumps(desc))
            for a in desc["actors"]:
                if a.get("behavior") == "file_source":
                    a.setdefault("params", {})["path"] = input_path
        return build_graph(desc)

    def write(self, outdir: str) -> dict[str, str]:
        """Write graph.json, input.bin and golden.json; returns the digests."""
        os.makedirs(outdir, exist_ok=True)
        inp = os.path.join(outdir, "input.bin")
        with open(inp, "wb") as fh:
            fh.write(self.input_bytes)
        with open(os.path.join(outdir, "graph.json"), "w", encoding="utf-8") as fh:
            json.dump(self.description, fh, indent=2, sort_keys=True)
        report = interpret(self.graph(inp), source_firings=self.iterations,
                           seed=self.seed)
        golden = {
            "app": self.name,
            "iterations": self.iterations,
            "seed": self.seed,
            "input_sha256": hashlib.sha256(self.input_bytes).hexdigest(),
            "sink_digests": dict(sorted(report.sink_digests.items())),
        }
        with open(os.path.join(outdir, "golden.json"), "w", encoding="utf-8") as fh:
            json.dump(golden, fh, indent=2, sort_keys=True)
        return golden["sink_digests"]


from . import bypass, motion, predistortion  # noqa: E402  (behavior registration)

ALL = {
    "motion": motion.make_app,
    "predistortion": predistortion.make_app,
    "bypass": bypass.make_app,
}


def make_app(name: str, **kwargs) -> CorpusApp:
    return ALL[name](**kwargs)
