"""Threaded executor: one thread per actor over bounded channels.

Execution is admission-gated: the graph must analyze as consistent first,
and the analysis bounds become the channel sizes. Each actor thread loops
acquire-fire-release; sources stop after a configured number of firings,
everything downstream drains on end-of-stream. Any actor exception poisons
all channels so the run fails fast instead of hanging.
"""
from __future__ import annotations

import hashlib
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping

from . import behavior as bhv
from .analysis import ConsistencyReport, analyze
from .behavior import actor_seed as _actor_seed
from .fifos import EndOfStream, FifoChannel, Poisoned
from .model import Graph, PortKind, PortRef, control_lookup


class ExecutionError(Exception):
    pass


class InconsistentGraph(ExecutionError):
    def __init__(self, report: ConsistencyReport):
        self.report = report
        problems = [v.render() for v in report.violations]
        problems += [d.render() for d in report.diagnostics]
        super().__init__("graph failed consistency analysis: " + "; ".join(problems))


class ActorPanic(ExecutionError):
    def __init__(self, actor: str, cause: BaseException):
        self.actor = actor
        self.cause = cause
        super().__init__(f"actor {actor} failed: {cause!r}")


class Timeout(ExecutionError):
    def __init__(self, ms: float, alive: list[str]):
        self.alive = alive
        super().__init__(f"run exceeded {ms:.0f} ms; still running: {', '.join(alive)}")


@dataclass
class RuntimeConfig:
    source_firings: int = 1
    c_factor: int = 3
    seed: int | None = None
    jitter_ms: float = 0.0
    jitter_seed: int | None = None
    pin_cores: bool = False
    capture_sinks: bool = False
    timeout_ms: float | None = None
    trace: Callable[[str], None] | None = None


@dataclass
class RunReport:
    sink_digests: dict[str, str] = field(default_factory=dict)
    sink_data: dict[str, bytes] = field(default_factory=dict)
    firing_counts: dict[str, int] = field(default_factory=dict)
    max_occupancy: dict[str, int] = field(default_factory=dict)
    slots: dict[str, int] = field(default_factory=dict)
    beta: dict[str, int] = field(default_factory=dict)
    eq1_checks: int = 0
    eq1_failures: int = 0
    wall_ms: float = 0.0


class _Worker:
    def __init__(self, rt: "Runtime", actor_id: str):
        self.rt = rt
        g = rt.graph
        self.actor = g.actor(actor_id)
        self.behavior = rt.behaviors[actor_id]
        cfg = rt.config
        self.jitter = None
        if cfg.jitter_ms > 0:
            base = cfg.jitter_seed if cfg.jitter_seed is not None else 0
            self.jitter = random.Random(_actor_seed(base, actor_id))

        self.ctl_port = self.actor.control_input
        self.drp_elements: dict[str, int] = {}
        for p in self.actor.drps:
            self.drp_elements[p.id] = control_lookup(g, PortRef(actor_id, p.id))[1]

        inputs = sorted(self.actor.input_ports, key=lambda p: (p.kind != PortKind.CONTROL_IN, p.id))
        self.in_plan = [(p, g.fifo_into(PortRef(actor_id, p.id))) for p in inputs]
        self.out_plan = [
            (p, sorted(g.fifos_from(PortRef(actor_id, p.id)), key=lambda f: f.id))
            for p in sorted(self.actor.output_ports, key=lambda p: p.id)
        ]
        self.is_source = not self.in_plan
        self.is_sink = not self.out_plan
        self.digest = hashlib.sha256() if self.is_sink else None
        self.captured = bytearray() if self.is_sink and cfg.capture_sinks else None
        self.firings = 0
        self.error: BaseException | None = None

    def _rates(self, values: tuple[bool, ...] | None) -> dict[str, int]:
        rates = {}
        for p in self.actor.ports:
            if p.kind == PortKind.DRP:
                el = self.drp_elements[p.id]
                active = values is not None and values[el - 1]
                rates[p.id] = p.rate if active else 0
            else:
                rates[p.id] = p.rate
        return rates

    def _event_loop(self) -> None:
        cfg = self.rt.config
        g = self.rt.graph
        ch = self.rt.channels
        while True:
            if self.is_source and self.firings >= cfg.source_firings:
                return

            values = None
            held: list[FifoChannel] = []
            in_spans: dict[str, memoryview] = {}
            try:
                for p, f in self.in_plan:
                    if p.kind == PortKind.CONTROL_IN:
                        c = ch[f.id]
                        span = c.read_start()
                        held.append(c)
                        values = bhv.decode_control(span, g.control.value_length(f.src))
                        self.behavior.control(self.actor.id, self.firings, values)
                rates = self._rates(values)
                for p, f in self.in_plan:
                    if p.kind == PortKind.CONTROL_IN:
                        continue
                    if rates[p.id] == 0:
                        in_spans[p.id] = memoryview(b"")
                        continue
                    c = ch[f.id]
                    in_spans[p.id] = c.read_start()
                    held.append(c)
            except EndOfStream:
                for c in held:
                    c.cancel_read()
                return

            out_spans: dict[str, memoryview] = {}
            out_held: dict[str, list[tuple[FifoChannel, memoryview]]] = {}
            for p, fifos in self.out_plan:
                if rates[p.id] == 0:
                    out_spans[p.id] = memoryview(bytearray(0))
                    out_held[p.id] = []
                    continue
                pairs = [(ch[f.id], ch[f.id].write_start()) for f in fifos]
                out_spans[p.id] = pairs[0][1]
                out_held[p.id] = pairs

            self._check_rates(values, in_spans, out_spans)

            ctx = bhv.FireContext(
                actor_id=self.actor.id, firing=self.firings, rates=rates,
                inputs=in_spans, outputs=out_spans, params=self.actor.params,
                seed=_actor_seed(cfg.seed, self.actor.id), control_values=values,
            )
            self.behavior.fire(ctx)

            if self.jitter is not None:
                time.sleep(self.jitter.uniform(0.0, cfg.jitter_ms) / 1000.0)

            if self.digest is not None:
                for pid in sorted(in_spans):
                    data = bytes(in_spans[pid])
                    self.digest.update(data)
                    if self.captured is not None:
                        self.captured.extend(data)

            for p, _ in self.out_plan:
                pairs = out_held[p.id]
                if len(pairs) > 1:
                    # broadcast: fan the fired span out to the sibling channels
                    first = bytes(pairs[0][1])
                    for _, span in pairs[1:]:
                        span[:] = first
                for c, _ in pairs:
                    c.write_end()
            for c in held:
                c.read_end()
            self.firings += 1

    def _check_rates(self, values, in_spans, out_spans) -> None:
        """Recompute each dynamic port's rate from the control token and table."""
        if not self.drp_elements:
            return
        tb = {}
        g = self.rt.graph
        for f in g.fifos:
            if f.src.actor == self.actor.id:
                tb[f.src.port] = f.token_bytes
            if f.dst.actor == self.actor.id:
                tb[f.dst.port] = f.token_bytes
        checks = failures = 0
        for p in self.actor.drps:
            el = self.drp_elements[p.id]
            expected = p.rate if (values is not None and values[el - 1]) else 0
            span = in_spans.get(p.id) if p.direction == "in" else out_spans.get(p.id)
            actual = len(span) // tb[p.id]
            checks += 1
            if actual != expected:
                failures += 1
        with self.rt._stat_lock:
            self.rt._eq1_checks += checks
            self.rt._eq1_failures += failures
        if failures:
            raise AssertionError(
                f"{self.actor.id}: span sizes disagree with the control-gated rates")

    def run(self) -> None:
        try:
            if self.rt.config.pin_cores and hasattr(os, "sched_setaffinity"):
                cores = sorted(os.sched_getaffinity(0))
                core = cores[self.rt.actor_index[self.actor.id] % len(cores)]
                os.sched_setaffinity(0, {core})
            self._event_loop()
        except Poisoned:
            return
        except BaseException as e:  # noqa: BLE001 - reported via ActorPanic
            self.error = e
            self.rt.poison_all(f"actor {self.actor.id} failed")
            return
        finally:
            for _, fifos in self.out_plan:
                for f in fifos:
                    self.rt.channels[f.id].close()
            try:
                self.behavior.finish(self.actor.id)
            except BaseException as e:  # noqa: BLE001
                if self.error is None:
                    self.error = e
                    self.rt.poison_all(f"actor {self.actor.id} failed in finish")


class Runtime:
    def __init__(self, graph: Graph, behaviors: Mapping[str, bhv.ActorBehavior],
                 config: RuntimeConfig, analysis: ConsistencyReport):
        self.graph = graph
        self.behaviors = dict(behaviors)
        self.config = config
        self.analysis = analysis
        self.actor_index = {a.id: k for k, a in enumerate(sorted(graph.actors, key=lambda a: a.id))}
        self._stat_lock = threading.Lock()
        self._eq1_checks = 0
        self._eq1_failures = 0

        trace = config.trace
        trace_lock = threading.Lock()

        def on_event(fid, op, occ, _t=trace, _l=trace_lock):
            with _l:
                _t(f"{fid} {op} {occ}")

        self.channels: dict[str, FifoChannel] = {}
        for f in graph.fifos:
            c = FifoChannel(f.id, f.rate, f.token_bytes, f.delay,
                            factor=config.c_factor, delay_payload=f.delay_payload)
            if trace is not None:
                c.on_event = on_event
            self.channels[f.id] = c

    def poison_all(self, reason: str) -> None:
        for c in self.channels.values():
            c.poison(reason)

    def run(self) -> RunReport:
        cfg = self.config
        for aid, b in self.behaviors.items():
            try:
                b.init(aid, self.graph.actor(aid).params, _actor_seed(cfg.seed, aid))
            except Exception as e:
                raise ActorPanic(aid, e) from e

        workers = [_Worker(self, a.id) for a in self.graph.actors]
        threads = [threading.Thread(target=w.run, name=f"actor:{w.actor.id}", daemon=True)
                   for w in workers]
        start = time.perf_counter()
        for t in threads:
            t.start()

        deadline = None if cfg.timeout_ms is None else start + cfg.timeout_ms / 1000.0
        for t in threads:
            if deadline is None:
                t.join()
            else:
                t.join(max(0.0, deadline - time.perf_counter()))
        alive = [t.name.split(":", 1)[1] for t in threads if t.is_alive()]
        if alive:
            self.poison_all("run timed out")
            for t in threads:
                t.join(timeout=5.0)
            raise Timeout(cfg.timeout_ms, alive)
        wall_ms = (time.perf_counter() - start) * 1000.0

        for w in workers:
            if w.error is not None:
                raise ActorPanic(w.actor.id, w.error)

        report = RunReport(wall_ms=wall_ms, eq1_checks=self._eq1_checks,
                           eq1_failures=self._eq1_failures)
        for w in workers:
            report.firing_counts[w.actor.id] = w.firings
            if w.digest is not None:
                report.sink_digests[w.actor.id] = w.digest.hexdigest()
                if w.captured is not None:
                    report.sink_data[w.actor.id] = bytes(w.captured)
        for fid, c in self.channels.items():
            report.max_occupancy[fid] = c.max_occupancy
            report.slots[fid] = c.plan.slots
        if self.analysis.bounds is not None:
            report.beta = dict(self.analysis.bounds.beta)
        return report


def instantiate(graph: Graph, behaviors: Mapping[str, bhv.ActorBehavior] | None = None,
                config: RuntimeConfig | None = None,
                analysis: ConsistencyReport | None = None) -> Runtime:
    """Build a runnable executor; rejects graphs that fail the analysis."""
    config = config or RuntimeConfig()
    if analysis is None:
        analysis = analyze(graph, c_factor=config.c_factor)
    if not analysis.consistent:
        raise InconsistentGraph(analysis)
    resolved: dict[str, bhv.ActorBehavior] = {}
    for a in graph.actors:
        if behaviors and a.id in behaviors:
            resolved[a.id] = behaviors[a.id]
        else:
            resolved[a.id] = bhv.resolve(a.behavior)
    return Runtime(graph, resolved, config, analysis)


def run(graph: Graph, behaviors: Mapping[str, bhv.ActorBehavior] | None = None,
        config: RuntimeConfig | None = None) -> RunReport:
    return instantiate(graph, behaviors, config).run()
