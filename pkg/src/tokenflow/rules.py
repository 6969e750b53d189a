"""Design-rule checking for graphs with dynamic ports.

The five rules restrict how dynamic ports, their connecting subchains and the
controlling configuration actors may be wired so that consistency of the whole
graph becomes decidable. Violations are returned as data; structural faults
(an uncontrolled dynamic port) surface as exceptions from control_lookup.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .model import (
    ActorKind,
    Fifo,
    Graph,
    PortKind,
    PortRef,
    control_lookup,
)

RULE_NAMES = {
    1: "linked port control rule",
    2: "balanced delay rule",
    3: "connecting subchain rule",
    4: "single-sided dynamism rule",
    5: "encapsulation rule",
}


@dataclass(frozen=True)
class Violation:
    rule: int
    subjects: tuple[str, ...]
    message: str

    @property
    def name(self) -> str:
        return RULE_NAMES[self.rule]

    def render(self) -> str:
        return f"rule {self.rule} ({self.name}): {', '.join(self.subjects)}: {self.message}"


@dataclass(frozen=True)
class LinkedDrpPair:
    """An output dynamic port linked to an input dynamic port.

    direct is True when both are endpoints of one fifo; subchains lists the
    intermediate actor sequences of every simple chain linking the two ports
    (empty for direct-only links).
    """

    out_port: PortRef
    in_port: PortRef
    direct: bool
    subchains: tuple[tuple[str, ...], ...]

    @property
    def parents(self) -> tuple[str, str]:
        return self.out_port.actor, self.in_port.actor


def _out_edges(graph: Graph) -> dict[str, list[Fifo]]:
    edges: dict[str, list[Fifo]] = {a.id: [] for a in graph.actors}
    for f in graph.fifos:
        edges[f.src.actor].append(f)
    return edges


def _directed_paths(graph: Graph, start: str, goal: str,
                    forbidden: frozenset[str]) -> Iterator[tuple[str, ...]]:
    """Simple directed actor paths start..goal avoiding forbidden actors."""
    edges = _out_edges(graph)

    def walk(node: str, seen: tuple[str, ...]) -> Iterator[tuple[str, ...]]:
        if node == goal:
            yield seen
            return
        for f in edges[node]:
            nxt = f.dst.actor
            if nxt in forbidden or nxt in seen:
                continue
            yield from walk(nxt, seen + (nxt,))

    if start in forbidden:
        return
    yield from walk(start, (start,))


def find_linked_drps(graph: Graph) -> list[LinkedDrpPair]:
    """Enumerate every linked dynamic-port pair with all connecting subchains.

    Ports are linked when they share a fifo, or when a simple chain of
    intermediate actors carries data from the output port to the input port.
    Intermediate hops follow dataflow direction from the output side to the
    input side.
    """
    out_drps = []
    in_drps = []
    for a in graph.actors:
        for p in a.drps:
            ref = PortRef(a.id, p.id)
            (out_drps if p.direction == "out" else in_drps).append(ref)

    pairs = []
    for px in out_drps:
        for py in in_drps:
            if px.actor == py.actor:
                continue
            feeder = graph.fifo_into(py)
            direct = any(f.dst == py for f in graph.fifos_from(px))
            subchains: set[tuple[str, ...]] = set()
            last = feeder.src.actor  # the single actor feeding the input port
            if last not in (px.actor, py.actor):
                forbidden = frozenset((px.actor, py.actor))
                for f in graph.fifos_from(px):
                    head = f.dst.actor
                    if head in forbidden:
                        continue
                    for path in _directed_paths(graph, head, last, forbidden):
                        subchains.add(path)
            if direct or subchains:
                pairs.append(LinkedDrpPair(
                    out_port=px, in_port=py, direct=direct,
                    subchains=tuple(sorted(subchains)),
                ))
    pairs.sort(key=lambda p: (str(p.out_port), str(p.in_port)))
    return pairs


def _undirected_neighbors(graph: Graph) -> dict[str, set[str]]:
    nbrs: dict[str, set[str]] = {a.id: set() for a in graph.actors}
    for f in graph.fifos:
        if f.src.actor != f.dst.actor:
            nbrs[f.src.actor].add(f.dst.actor)
            nbrs[f.dst.actor].add(f.src.actor)
    return nbrs


def _chain_connected_actors(graph: Graph, x: str, y: str) -> set[str]:
    """All actors lying on at least one simple undirected chain from x to y."""
    nbrs = _undirected_neighbors(graph)
    members: set[str] = set()

    def walk(node: str, seen: list[str]) -> None:
        if node == y:
            members.update(seen)
            members.add(y)
            return
        for nxt in sorted(nbrs[node]):
            if nxt in seen:
                continue
            seen.append(nxt)
            walk(nxt, seen)
            seen.pop()

    walk(x, [x])
    return members


def check_rule1(graph: Graph, pairs: list[LinkedDrpPair] | None = None) -> list[Violation]:
    """Linked dynamic ports must share one controlling port and element."""
    violations = []
    for pair in pairs if pairs is not None else find_linked_drps(graph):
        a = control_lookup(graph, pair.out_port)
        b = control_lookup(graph, pair.in_port)
        if a != b:
            violations.append(Violation(
                rule=1,
                subjects=(str(pair.out_port), str(pair.in_port)),
                message=(f"linked ports controlled by {a[0]}[{a[1]}] "
                         f"vs {b[0]}[{b[1]}]"),
            ))
    return violations


def check_rule2(graph: Graph, pairs: list[LinkedDrpPair] | None = None) -> list[Violation]:
    """Every control fan-out of a control output port must share one delay."""
    del pairs  # checked for all fan-outs, not only linked pairs
    violations = []
    by_src: dict[PortRef, list[Fifo]] = {}
    for f in graph.fifos:
        if graph.port(f.src).kind is PortKind.CONTROL_OUT:
            by_src.setdefault(f.src, []).append(f)
    for src in sorted(by_src, key=str):
        fan = sorted(by_src[src], key=lambda f: str(f.dst))
        first = fan[0]
        for other in fan[1:]:
            if other.delay != first.delay:
                violations.append(Violation(
                    rule=2,
                    subjects=(str(src), str(first.dst), str(other.dst)),
                    message=(f"control delays differ: {first.dst} has {first.delay}, "
                             f"{other.dst} has {other.delay}"),
                ))
    return violations


def check_rule3(graph: Graph, pairs: list[LinkedDrpPair] | None = None) -> list[Violation]:
    """Subchain actors must be static and serve only one dynamic actor pair."""
    if pairs is None:
        pairs = find_linked_drps(graph)
    violations = []
    flagged_static = set()
    owner_pairs: dict[str, set[tuple[str, str]]] = {}
    for pair in pairs:
        parents = tuple(sorted(pair.parents))
        for chain in pair.subchains:
            for member in chain:
                owner_pairs.setdefault(member, set()).add(parents)
                if graph.actor(member).kind is not ActorKind.STATIC and member not in flagged_static:
                    flagged_static.add(member)
                    violations.append(Violation(
                        rule=3,
                        subjects=(member,),
                        message="connecting subchain member is not a static actor",
                    ))
    for member in sorted(owner_pairs):
        owners = owner_pairs[member]
        if len(owners) > 1:
            names = "; ".join("{" + ", ".join(o) + "}" for o in sorted(owners))
            violations.append(Violation(
                rule=3,
                subjects=(member,),
                message=f"subchain actor serves several dynamic actor pairs: {names}",
            ))
    return violations


def check_rule4(graph: Graph, pairs: list[LinkedDrpPair] | None = None) -> list[Violation]:
    """No actor may own both input and output dynamic ports."""
    del pairs
    violations = []
    for a in graph.actors:
        dirs = {p.direction for p in a.drps}
        if len(dirs) > 1:
            violations.append(Violation(
                rule=4,
                subjects=(a.id,),
                message="actor has both input and output dynamic ports",
            ))
    return violations


def check_rule5(graph: Graph, pairs: list[LinkedDrpPair] | None = None) -> list[Violation]:
    """Actors touching a subchain through their static port must sit on an x-y chain."""
    if pairs is None:
        pairs = find_linked_drps(graph)
    violations = []
    chain_sets: dict[tuple[str, str], set[str]] = {}
    seen = set()
    for pair in pairs:
        x, y = pair.parents
        for chain in pair.subchains:
            members = set(chain)
            for ai in chain:
                for f in graph.fifos:
                    for near, far in ((f.src, f.dst), (f.dst, f.src)):
                        if near.actor != ai:
                            continue
                        b = far.actor
                        if b in members or graph.port(far).kind is not PortKind.SRP:
                            continue
                        if b in (x, y):
                            continue  # endpoints connect x and y trivially
                        key = (x, y)
                        if key not in chain_sets:
                            chain_sets[key] = _chain_connected_actors(graph, x, y)
                        if b not in chain_sets[key]:
                            mark = (b, ai, x, y)
                            if mark not in seen:
                                seen.add(mark)
                                violations.append(Violation(
                                    rule=5,
                                    subjects=(b, ai),
                                    message=(f"{b} touches subchain actor {ai} through a "
                                             f"static port but lies on no chain "
                                             f"connecting {x} and {y}"),
                                ))
    return violations


def check_all(graph: Graph) -> list[Violation]:
    """Run the five rules; violations sorted by rule number then subject."""
    pairs = find_linked_drps(graph)
    violations: list[Violation] = []
    for check in (check_rule1, check_rule2, check_rule3, check_rule4, check_rule5):
        violations.extend(check(graph, pairs))
    violations.sort(key=lambda v: (v.rule, v.subjects))
    return violations
