"""Single-threaded reference interpreter.

Executes a graph with unbounded queues and a deterministic firing order:
among fireable actors, the one farthest from the sources fires first (ties
break on actor id). Draining downstream before producing more keeps queue
growth minimal and makes every run reproducible, which is what an oracle
for the threaded executor needs. Token payloads, behavior seeds and sink
digests match the threaded runtime exactly; only scheduling differs.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Mapping

from . import behavior as bhv
from .behavior import actor_seed as _actor_seed
from .model import Graph, PortKind, PortRef, control_lookup


class OracleDeadlock(Exception):
    """Tokens above a queue's initial delay occupancy survived the drain.

    Token conservation on a consistent graph leaves each queue with at most
    its delay count once nothing is fireable (the initial phase lead may be
    consumed at the stream tail, so less is fine). More means a consumer was
    blocked on another input: work was pending but nobody could fire.
    """

    def __init__(self, residues: Mapping[str, tuple[int, int]]):
        self.residues = dict(residues)
        detail = ", ".join(f"{fid}: {got} tokens (delay {want})"
                           for fid, (got, want) in sorted(residues.items()))
        super().__init__(f"tokens stranded after drain: {detail}")


@dataclass
class InterpReport:
    sink_digests: dict[str, str] = field(default_factory=dict)
    sink_data: dict[str, bytes] = field(default_factory=dict)
    firing_counts: dict[str, int] = field(default_factory=dict)
    max_occupancy: dict[str, int] = field(default_factory=dict)
    total_firings: int = 0


class _Queue:
    """Byte stream with a token granularity; front consumption via offset."""

    def __init__(self, token_bytes: int, preload: bytes):
        self.tb = token_bytes
        self.data = bytearray(preload)
        self.start = 0

    def __len__(self) -> int:
        return (len(self.data) - self.start) // self.tb

    def push(self, chunk: bytes) -> None:
        self.data.extend(chunk)

    def peek(self, tokens: int) -> bytes:
        lo = self.start
        return bytes(self.data[lo:lo + tokens * self.tb])

    def pop(self, tokens: int) -> bytes:
        out = self.peek(tokens)
        self.start += tokens * self.tb
        if self.start > 1 << 16:
            del self.data[:self.start]
            self.start = 0
        return out


def _depths(graph: Graph) -> dict[str, int]:
    """Longest distance from any source, capped so cycles terminate."""
    depth = {a.id: 0 for a in graph.actors}
    cap = len(depth)
    for _ in range(cap):
        changed = False
        for f in graph.fifos:
            d = min(cap, depth[f.src.actor] + 1)
            if d > depth[f.dst.actor]:
                depth[f.dst.actor] = d
                changed = True
        if not changed:
            break
    return depth


def interpret(graph: Graph, behaviors: Mapping[str, bhv.ActorBehavior] | None = None,
              source_firings: int = 1, seed: int | None = None,
              capture_sinks: bool = False,
              trace: Callable[[str], None] | None = None,
              max_firings: int | None = None) -> InterpReport:
    resolved: dict[str, bhv.ActorBehavior] = {}
    for a in graph.actors:
        if behaviors and a.id in behaviors:
            resolved[a.id] = behaviors[a.id]
        else:
            resolved[a.id] = bhv.resolve(a.behavior)
    for aid, b in resolved.items():
        b.init(aid, graph.actor(aid).params, _actor_seed(seed, aid))

    queues: dict[str, _Queue] = {}
    peak: dict[str, int] = {}
    for f in graph.fifos:
        preload = f.delay_payload if f.delay_payload is not None else bytes(f.delay * f.token_bytes)
        queues[f.id] = _Queue(f.token_bytes, preload)
        peak[f.id] = f.delay

    plans = {}
    for a in graph.actors:
        ctl = a.control_input
        ins = sorted(a.input_ports, key=lambda p: (p.kind != PortKind.CONTROL_IN, p.id))
        in_fifos = [(p, graph.fifo_into(PortRef(a.id, p.id))) for p in ins]
        out_fifos = [(p, sorted(graph.fifos_from(PortRef(a.id, p.id)), key=lambda f: f.id))
                     for p in sorted(a.output_ports, key=lambda p: p.id)]
        elements = {p.id: control_lookup(graph, PortRef(a.id, p.id))[1] for p in a.drps}
        plans[a.id] = (a, ctl, in_fifos, out_fifos, elements)

    depth = _depths(graph)
    order = sorted(plans, key=lambda aid: (-depth[aid], aid))
    fired = {aid: 0 for aid in plans}
    digests = {a.id: hashlib.sha256() for a in graph.actors if not a.output_ports}
    captured = {aid: bytearray() for aid in digests} if capture_sinks else {}

    def effective_rates(aid) -> dict[str, int] | None:
        """Rates for the next firing, or None if not fireable yet."""
        a, ctl, in_fifos, _, elements = plans[aid]
        if not in_fifos:
            return {p.id: p.rate for p in a.ports} if fired[aid] < source_firings else None
        values = None
        if ctl is not None:
            f = graph.fifo_into(PortRef(aid, ctl.id))
            if len(queues[f.id]) < 1:
                return None
            values = bhv.decode_control(queues[f.id].peek(1),
                                        graph.control.value_length(f.src))
        rates = {}
        for p in a.ports:
            if p.kind == PortKind.DRP:
                active = values is not None and values[elements[p.id] - 1]
                rates[p.id] = p.rate if active else 0
            else:
                rates[p.id] = p.rate
        for p, f in in_fifos:
            if rates[p.id] > 0 and len(queues[f.id]) < rates[p.id]:
                return None
        return rates

    total = 0
    while True:
        progressed = False
        for aid in order:
            rates = effective_rates(aid)
            if rates is None:
                continue
            a, ctl, in_fifos, out_fifos, elements = plans[aid]
            values = None
            in_spans: dict[str, memoryview] = {}
            for p, f in in_fifos:
                if p.kind == PortKind.CONTROL_IN:
                    chunk = queues[f.id].pop(1)
                    if trace is not None:
                        trace(f"{f.id} r {len(queues[f.id])}")
                    values = bhv.decode_control(chunk, graph.control.value_length(f.src))
                    resolved[aid].control(aid, fired[aid], values)
                    continue
                if rates[p.id] == 0:
                    in_spans[p.id] = memoryview(b"")
                    continue
                chunk = queues[f.id].pop(rates[p.id])
                if trace is not None:
                    trace(f"{f.id} r {len(queues[f.id])}")
                in_spans[p.id] = memoryview(chunk)

            out_bufs: dict[str, bytearray] = {}
            for p, fifos in out_fifos:
                tb = fifos[0].token_bytes
                out_bufs[p.id] = bytearray(rates[p.id] * tb)

            ctx = bhv.FireContext(
                actor_id=aid, firing=fired[aid], rates=rates,
                inputs=in_spans, outputs={k: memoryview(v) for k, v in out_bufs.items()},
                params=a.params, seed=_actor_seed(seed, aid), control_values=values,
            )
            resolved[aid].fire(ctx)

            if aid in digests:
                for pid in sorted(in_spans):
                    data = bytes(in_spans[pid])
                    digests[aid].update(data)
                    if capture_sinks:
                        captured[aid].extend(data)

            for p, fifos in out_fifos:
                if rates[p.id] == 0:
                    continue
                for f in fifos:
                    q = queues[f.id]
                    q.push(bytes(out_bufs[p.id]))
                    peak[f.id] = max(peak[f.id], len(q))
                    if trace is not None:
                        trace(f"{f.id} w {len(q)}")
            fired[aid] += 1
            total += 1
            if max_firings is not None and total >= max_firings:
                raise RuntimeError(
                    f"firing limit {max_firings} reached before the graph drained")
            progressed = True
            break
        if not progressed:
            break

    for aid, b in resolved.items():
        b.finish(aid)

    residues = {f.id: (len(queues[f.id]), f.delay)
                for f in graph.fifos if len(queues[f.id]) > f.delay}
    if residues:
        raise OracleDeadlock(residues)

    report = InterpReport(total_firings=total)
    report.firing_counts = dict(fired)
    report.max_occupancy = dict(peak)
    for aid, h in digests.items():
        report.sink_digests[aid] = h.hexdigest()
        if capture_sinks:
            report.sink_data[aid] = bytes(captured[aid])
    return report
