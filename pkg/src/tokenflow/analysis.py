"""Consistency analysis: dynamic region identification, decomposition, schedules, bounds.

A graph that passes the design rules splits into dynamic processing graphs
(one configuration actor, two dynamic actors, the chains between them).
Removing the configuration and dynamic actors leaves connected components,
the dynamic components; each must map to exactly one element of the control
value. Consistency then reduces to schedulability of each component plus the
fully-active static schedule, which also yields finite buffer bounds.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

from .model import ActorKind, Graph, PortRef, Uncontrolled, control_lookup
from .rules import LinkedDrpPair, Violation, check_all, find_linked_drps


class AnalysisError(Exception):
    pass


class OrphanDynamicActor(AnalysisError):
    """A dynamic actor with no linked partner."""

    def __init__(self, actor: str):
        self.actor = actor
        super().__init__(f"dynamic actor {actor} is linked to no partner")


class SharedMembership(AnalysisError):
    """An actor claimed by two dynamic processing graphs."""

    def __init__(self, actor: str, detail: str = ""):
        self.actor = actor
        super().__init__(f"actor {actor} is claimed by two dynamic processing graphs"
                         + (f" ({detail})" if detail else ""))


class DeadlockError(AnalysisError):
    def __init__(self, region: str, fired: tuple[str, ...], stuck: tuple[str, ...],
                 tokens: Mapping[str, int]):
        self.region = region
        self.fired = fired
        self.stuck = stuck
        self.tokens = dict(tokens)
        state = ", ".join(f"{k}={v}" for k, v in sorted(self.tokens.items()))
        super().__init__(
            f"region {region}: no fireable actor; stuck cycle through "
            f"{', '.join(stuck)} (tokens: {state})")


@dataclass(frozen=True)
class DynamicComponent:
    index: int  # 1-based
    members: tuple[str, ...]
    in_drps: tuple[PortRef, ...]   # output side of the upstream dynamic actor
    out_drps: tuple[PortRef, ...]  # input side of the downstream dynamic actor
    elements: tuple[int, ...]      # control elements seen on the attached ports
    direct_fifo: str | None = None  # set for the placeholder component of a direct link

    @property
    def is_dummy(self) -> bool:
        return self.direct_fifo is not None


@dataclass(frozen=True)
class Dpg:
    """One dynamic processing graph: q configures the pair (x, y)."""

    q: str
    x: str
    y: str
    control_port: PortRef
    declared_len: int
    members: tuple[str, ...]
    dcs: tuple[DynamicComponent, ...] = ()


@dataclass(frozen=True)
class Diagnostic:
    code: str
    subjects: tuple[str, ...]
    message: str

    def render(self) -> str:
        return f"{self.code}: {', '.join(self.subjects)}: {self.message}"


@dataclass(frozen=True)
class RegionFifo:
    fifo_id: str
    src: str
    dst: str
    rate: int
    delay: int


@dataclass(frozen=True)
class Region:
    id: str
    actors: tuple[str, ...]
    fifos: tuple[RegionFifo, ...]


@dataclass(frozen=True)
class Schedule:
    region: str
    firings: tuple[tuple[str, int], ...]
    fifo_bounds: Mapping[str, int] = field(default_factory=dict)
    fifo_rates: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class BufferBounds:
    per_region: Mapping[str, Mapping[str, int]]
    beta: Mapping[str, int]
    c_factor: int


@dataclass(frozen=True)
class ConsistencyReport:
    verdict: str  # "consistent" | "inconsistent"
    violations: tuple[Violation, ...] = ()
    diagnostics: tuple[Diagnostic, ...] = ()
    dpgs: tuple[Dpg, ...] = ()
    schedules: tuple[Schedule, ...] = ()
    bounds: BufferBounds | None = None

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"


def _dpg_pairs(pairs: list[LinkedDrpPair], x: str, y: str) -> list[LinkedDrpPair]:
    return [p for p in pairs if p.parents == (x, y)]


def identify_dpgs(graph: Graph) -> list[Dpg]:
    """Partition dynamic and configuration actors into dynamic processing graphs.

    Requires a rule-clean graph. Raises OrphanDynamicActor for a dynamic actor
    with no linked partner and SharedMembership when an actor would belong to
    two regions.
    """
    pairs = find_linked_drps(graph)
    partner_sets: dict[str, set[frozenset[str]]] = {}
    for pair in pairs:
        key = frozenset(pair.parents)
        for a in pair.parents:
            partner_sets.setdefault(a, set()).add(key)

    for a in graph.dynamic_actors():
        owners = partner_sets.get(a.id, set())
        if not owners:
            raise OrphanDynamicActor(a.id)
        if len(owners) > 1:
            raise SharedMembership(a.id, "linked into two dynamic actor pairs")

    dpgs = []
    q_owner: dict[str, frozenset[str]] = {}
    member_owner: dict[str, frozenset[str]] = {}
    for key in sorted({s for sets in partner_sets.values() for s in sets}, key=sorted):
        group = _dpg_pairs(pairs, *_orient_pair(pairs, key))
        x, y = _orient_pair(pairs, key)
        ctl_ports = {control_lookup(graph, p.out_port)[0] for p in group}
        ctl_ports |= {control_lookup(graph, p.in_port)[0] for p in group}
        assert len(ctl_ports) == 1, "rule 1 guarantees a single controlling port"
        ctl = next(iter(ctl_ports))
        q = ctl.actor
        if q in q_owner and q_owner[q] != key:
            raise SharedMembership(q, "configuration actor controls two dynamic pairs")
        q_owner[q] = key
        sub = sorted({m for p in group for chain in p.subchains for m in chain})
        for m in sub:
            if m in member_owner and member_owner[m] != key:
                raise SharedMembership(m, "subchain actor shared between regions")
            member_owner[m] = key
        dpgs.append(Dpg(
            q=q, x=x, y=y, control_port=ctl,
            declared_len=graph.control.value_length(ctl),
            members=tuple([q, x, y] + sub),
        ))
    return dpgs


def _orient_pair(pairs: list[LinkedDrpPair], key: frozenset[str]) -> tuple[str, str]:
    for p in pairs:
        if frozenset(p.parents) == key:
            return p.parents
    raise AssertionError("unreachable: key came from the pair list")


def decompose_dcs(graph: Graph, dpg: Dpg) -> Dpg:
    """Split a dynamic processing graph into its dynamic components.

    Chain actors form components over the fifos that survive removing q, x
    and y. Each direct fifo between the two dynamic actors contributes a
    placeholder component of its own (the inserted dummy actor): it exists
    only for the duration of the analysis.
    """
    pairs = _dpg_pairs(find_linked_drps(graph), dpg.x, dpg.y)
    sub = {m for p in pairs for chain in p.subchains for m in chain}

    neighbors: dict[str, set[str]] = {m: set() for m in sub}
    for f in graph.fifos:
        a, b = f.src.actor, f.dst.actor
        if a in sub and b in sub:
            neighbors[a].add(b)
            neighbors[b].add(a)

    components = []
    seen: set[str] = set()
    for start in sorted(sub):
        if start in seen:
            continue
        comp = {start}
        queue = [start]
        while queue:
            for nxt in neighbors[queue.pop()]:
                if nxt not in comp:
                    comp.add(nxt)
                    queue.append(nxt)
        seen |= comp
        components.append(tuple(sorted(comp)))
    components.sort(key=lambda c: c[0])

    x_actor = graph.actor(dpg.x)
    y_actor = graph.actor(dpg.y)
    x_drps = [PortRef(dpg.x, p.id) for p in x_actor.drps if p.direction == "out"]
    y_drps = [PortRef(dpg.y, p.id) for p in y_actor.drps if p.direction == "in"]

    dcs = []
    for idx, comp in enumerate(components, start=1):
        members = set(comp)
        in_drps = tuple(p for p in x_drps
                        if any(f.dst.actor in members for f in graph.fifos_from(p)))
        out_drps = tuple(p for p in y_drps
                         if graph.fifo_into(p).src.actor in members)
        elements = tuple(sorted({control_lookup(graph, p)[1]
                                 for p in in_drps + out_drps}))
        dcs.append(DynamicComponent(
            index=idx, members=comp, in_drps=in_drps, out_drps=out_drps,
            elements=elements,
        ))

    direct = sorted(
        (p for p in pairs if p.direct),
        key=lambda p: graph.fifo_into(p.in_port).id,
    )
    for p in direct:
        fifo = graph.fifo_into(p.in_port)
        idx = len(dcs) + 1
        elements = tuple(sorted({control_lookup(graph, p.out_port)[1],
                                 control_lookup(graph, p.in_port)[1]}))
        dcs.append(DynamicComponent(
            index=idx, members=(f"dummy:{fifo.id}",),
            in_drps=(p.out_port,), out_drps=(p.in_port,),
            elements=elements, direct_fifo=fifo.id,
        ))
    return replace(dpg, dcs=tuple(dcs))


def validate_dpg(graph: Graph, dpg: Dpg) -> list[Diagnostic]:
    """Check the component-to-control-element mapping. Empty list means valid."""
    diags = []
    m = len(dpg.dcs)
    name = f"dpg {dpg.q}"

    if m == 0:
        diags.append(Diagnostic("SurjectivityFailure", (name,),
                                "no dynamic component between the dynamic actors"))
        return diags

    for dc in dpg.dcs:
        label = f"dc {dc.index}"
        if not dc.in_drps:
            diags.append(Diagnostic("SurjectivityFailure", (name, label),
                                    f"component not fed by any dynamic port of {dpg.x}"))
        if not dc.out_drps:
            diags.append(Diagnostic("SurjectivityFailure", (name, label),
                                    f"component feeds no dynamic port of {dpg.y}"))
        if len(dc.elements) != 1:
            diags.append(Diagnostic(
                "ControlElementFailure", (name, label),
                f"ports of one component use control elements {list(dc.elements)}"))

    x_drps = [PortRef(dpg.x, p.id) for p in graph.actor(dpg.x).drps if p.direction == "out"]
    y_drps = [PortRef(dpg.y, p.id) for p in graph.actor(dpg.y).drps if p.direction == "in"]
    attach: dict[PortRef, list[int]] = {}
    for dc in dpg.dcs:
        for p in dc.in_drps + dc.out_drps:
            attach.setdefault(p, []).append(dc.index)
    for p in x_drps + y_drps:
        touched = attach.get(p, [])
        if not touched:
            diags.append(Diagnostic("SurjectivityFailure", (name, str(p)),
                                    "dynamic port reaches no component"))
        elif len(touched) > 1:
            diags.append(Diagnostic(
                "DrpFanoutFailure", (name, str(p)),
                f"dynamic port reaches components {touched}; rates of one port "
                f"cannot follow two control elements"))

    if dpg.declared_len != m:
        diags.append(Diagnostic(
            "BijectionFailure", (name,),
            f"declared control-value length {dpg.declared_len} != component count {m}"))
    else:
        per_dc = [dc.elements[0] for dc in dpg.dcs if len(dc.elements) == 1]
        if len(per_dc) == m and len(set(per_dc)) != m:
            diags.append(Diagnostic(
                "BijectionFailure", (name,),
                f"control elements {sorted(per_dc)} do not map components one-to-one"))

    if not diags:
        k, l = len(x_drps), len(y_drps)
        assert 1 <= m <= min(k, l), "valid decomposition bounds the component count"
    return diags


def static_region(graph: Graph) -> Region:
    """The whole graph with every dynamic port at its active rate."""
    return Region(
        id="static",
        actors=tuple(sorted(a.id for a in graph.actors)),
        fifos=tuple(RegionFifo(f.id, f.src.actor, f.dst.actor, f.rate, f.delay)
                    for f in graph.fifos),
    )


def dc_region(graph: Graph, dpg: Dpg, dc: DynamicComponent) -> Region:
    """One activation round of a single component, bounded by its dynamic actors."""
    rid = f"{dpg.q}.dc{dc.index}"
    if dc.is_dummy:
        f = graph.fifo(dc.direct_fifo)
        return Region(rid, tuple(sorted((dpg.x, dpg.y))),
                      (RegionFifo(f.id, f.src.actor, f.dst.actor, f.rate, f.delay),))
    members = set(dc.members)
    fifos = []
    for f in graph.fifos:
        internal = f.src.actor in members and f.dst.actor in members
        if internal or f.src in dc.in_drps or f.dst in dc.out_drps:
            fifos.append(RegionFifo(f.id, f.src.actor, f.dst.actor, f.rate, f.delay))
    actors = sorted(members | {dpg.x, dpg.y})
    return Region(rid, tuple(actors), tuple(fifos))


def compute_schedule(region: Region) -> Schedule:
    """Simulate one period: every actor fires once, earliest fireable first.

    Ties break on the lexicographically smallest actor id. Raises
    DeadlockError when no unfired actor has sufficient input tokens. The
    per-fifo bound is the worst-case single-period occupancy (delay plus one
    producer firing before the consumer runs); the simulated peak is checked
    against it.
    """
    consumes: dict[str, list[RegionFifo]] = {a: [] for a in region.actors}
    produces: dict[str, list[RegionFifo]] = {a: [] for a in region.actors}
    for f in region.fifos:
        produces[f.src].append(f)
        consumes[f.dst].append(f)

    tokens = {f.fifo_id: f.delay for f in region.fifos}
    peaks = dict(tokens)
    unfired = set(region.actors)
    order: list[str] = []
    while unfired:
        ready = next(
            (a for a in sorted(unfired)
             if all(tokens[f.fifo_id] >= f.rate for f in consumes[a])),
            None,
        )
        if ready is None:
            raise DeadlockError(region.id, tuple(order), tuple(sorted(unfired)), tokens)
        for f in consumes[ready]:
            tokens[f.fifo_id] -= f.rate
        for f in produces[ready]:
            tokens[f.fifo_id] += f.rate
            peaks[f.fifo_id] = max(peaks[f.fifo_id], tokens[f.fifo_id])
        order.append(ready)
        unfired.remove(ready)

    for f in region.fifos:
        assert tokens[f.fifo_id] == f.delay, "one period must restore all occupancies"

    bounds = {f.fifo_id: f.delay + f.rate for f in region.fifos}
    for fid, peak in peaks.items():
        assert peak <= bounds[fid]
    return Schedule(
        region=region.id,
        firings=tuple((a, 1) for a in order),
        fifo_bounds=bounds,
        fifo_rates={f.fifo_id: f.rate for f in region.fifos},
    )


def compute_bounds(schedules: list[Schedule], c_factor: int = 3) -> BufferBounds:
    """Aggregate per-region bounds into a per-fifo bound for a C-buffered runtime.

    beta(f) adds (C-1) extra in-flight chunks to the worst per-period bound:
    a channel with C buffer chunks legitimately holds that many published,
    unconsumed tokens when the producer runs ahead.
    """
    per_region = {s.region: dict(s.fifo_bounds) for s in schedules}
    beta: dict[str, int] = {}
    for s in schedules:
        for fid, bound in s.fifo_bounds.items():
            candidate = bound + (c_factor - 1) * s.fifo_rates[fid]
            beta[fid] = max(beta.get(fid, 0), candidate)
    return BufferBounds(per_region=per_region, beta=beta, c_factor=c_factor)


def analyze(graph: Graph, c_factor: int = 3) -> ConsistencyReport:
    """Full pipeline: rules, region identification, validation, schedules, bounds.

    Never raises for graph-level problems; the report carries the verdict.
    """
    diags: list[Diagnostic] = []
    for a in graph.dynamic_actors():
        for p in a.drps:
            try:
                control_lookup(graph, PortRef(a.id, p.id))
            except Uncontrolled as e:
                diags.append(Diagnostic("Uncontrolled", (f"{a.id}.{p.id}",), str(e)))
    if diags:
        return ConsistencyReport(verdict="inconsistent", diagnostics=tuple(diags))

    violations = check_all(graph)
    if violations:
        return ConsistencyReport(verdict="inconsistent", violations=tuple(violations))

    try:
        dpgs = [decompose_dcs(graph, d) for d in identify_dpgs(graph)]
    except (OrphanDynamicActor, SharedMembership) as e:
        diag = Diagnostic(type(e).__name__, (e.actor,), str(e))
        return ConsistencyReport(verdict="inconsistent", diagnostics=(diag,))

    for d in dpgs:
        diags.extend(validate_dpg(graph, d))
    if diags:
        return ConsistencyReport(verdict="inconsistent", diagnostics=tuple(diags),
                                 dpgs=tuple(dpgs))

    regions = [static_region(graph)]
    for d in dpgs:
        regions.extend(dc_region(graph, d, dc) for dc in d.dcs)
    schedules = []
    for r in regions:
        try:
            schedules.append(compute_schedule(r))
        except DeadlockError as e:
            diags.append(Diagnostic("DeadlockError", e.stuck, str(e)))
    if diags:
        return ConsistencyReport(verdict="inconsistent", diagnostics=tuple(diags),
                                 dpgs=tuple(dpgs), schedules=tuple(schedules))

    bounds = compute_bounds(schedules, c_factor)
    return ConsistencyReport(verdict="consistent", dpgs=tuple(dpgs),
                             schedules=tuple(schedules), bounds=bounds)
