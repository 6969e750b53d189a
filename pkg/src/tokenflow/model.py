"""Graph data model: actors, ports, FIFO channels and the control table.

A graph is a set of actors joined by point-to-point FIFO channels. Token
production and consumption rates are symmetric: both ends of a channel move
the same number of tokens per firing. Dynamic actors carry ports whose rate
is gated per firing by a Boolean control value; the control table says which
element of which control port's value gates which dynamic port.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping, NamedTuple


class GraphError(Exception):
    """Base class for structural errors raised while assembling a graph."""


class DuplicateId(GraphError):
    pass


class DanglingPort(GraphError):
    pass


class RateMismatch(GraphError):
    pass


class BadActorShape(GraphError):
    pass


class ControlTableError(GraphError):
    pass


class InvalidDescription(GraphError):
    pass


class Uncontrolled(GraphError):
    """A dynamic port has no controlling table entry."""


class ActorKind(str, enum.Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"
    CONFIG = "config"


class PortKind(str, enum.Enum):
    SRP = "srp"                  # static regular port, fixed rate
    DRP = "drp"                  # dynamic regular port, rate gated by control
    CONTROL_IN = "control_in"    # consumes one control token per firing
    CONTROL_OUT = "control_out"  # produces one control token per firing


class PortRef(NamedTuple):
    """Fully qualified port name, rendered as ``actor.port``."""

    actor: str
    port: str

    def __str__(self) -> str:
        return f"{self.actor}.{self.port}"

    @classmethod
    def parse(cls, text: str) -> "PortRef":
        actor, sep, port = text.partition(".")
        if not sep or not actor or not port:
            raise InvalidDescription(f"bad port reference {text!r}, expected 'actor.port'")
        return cls(actor, port)


@dataclass(frozen=True)
class Port:
    id: str
    direction: str  # "in" | "out"
    kind: PortKind
    rate: int  # active token rate

    @property
    def inactive_rate(self) -> int:
        return 0 if self.kind is PortKind.DRP else self.rate


@dataclass(frozen=True)
class Actor:
    id: str
    kind: ActorKind
    ports: tuple[Port, ...]
    behavior: str = ""
    params: Mapping[str, Any] = field(default_factory=dict)

    def port(self, port_id: str) -> Port:
        for p in self.ports:
            if p.id == port_id:
                return p
        raise KeyError(f"{self.id} has no port {port_id!r}")

    @property
    def input_ports(self) -> tuple[Port, ...]:
        return tuple(p for p in self.ports if p.direction == "in")

    @property
    def output_ports(self) -> tuple[Port, ...]:
        return tuple(p for p in self.ports if p.direction == "out")

    @property
    def drps(self) -> tuple[Port, ...]:
        return tuple(p for p in self.ports if p.kind is PortKind.DRP)

    @property
    def control_input(self) -> Port | None:
        for p in self.ports:
            if p.kind is PortKind.CONTROL_IN:
                return p
        return None


@dataclass(frozen=True)
class Fifo:
    """One point-to-point channel. delay tokens are present before any firing."""

    id: str
    src: PortRef
    dst: PortRef
    rate: int
    delay: int
    token_bytes: int
    delay_payload: bytes | None = None  # None means zero-filled delay tokens


@dataclass(frozen=True)
class ControlTable:
    """Sparse matrix: (control output port, dynamic port) -> control element.

    Elements are 1-based indices into the Boolean control value produced on
    the control port; 0 entries are simply absent. value_lengths declares the
    control-value length of every control output port.
    """

    entries: tuple[tuple[PortRef, PortRef, int], ...]
    value_lengths: tuple[tuple[PortRef, int], ...]

    def lookup(self, drp: PortRef) -> tuple[PortRef, int]:
        for ctl, target, element in self.entries:
            if target == drp:
                return ctl, element
        raise Uncontrolled(f"dynamic port {drp} has no controlling table entry")

    def value_length(self, ctl: PortRef) -> int:
        for ref, length in self.value_lengths:
            if ref == ctl:
                return length
        raise ControlTableError(f"no declared control-value length for {ctl}")

    def controlled_ports(self, ctl: PortRef) -> tuple[tuple[PortRef, int], ...]:
        return tuple((t, e) for c, t, e in self.entries if c == ctl)


@dataclass(frozen=True)
class Graph:
    name: str
    actors: tuple[Actor, ...]
    fifos: tuple[Fifo, ...]
    control: ControlTable

    @cached_property
    def _actors_by_id(self) -> dict[str, Actor]:
        return {a.id: a for a in self.actors}

    @cached_property
    def _fifos_by_id(self) -> dict[str, Fifo]:
        return {f.id: f for f in self.fifos}

    def actor(self, actor_id: str) -> Actor:
        return self._actors_by_id[actor_id]

    def fifo(self, fifo_id: str) -> Fifo:
        return self._fifos_by_id[fifo_id]

    def port(self, ref: PortRef) -> Port:
        return self.actor(ref.actor).port(ref.port)

    def fifos_from(self, ref: PortRef) -> tuple[Fifo, ...]:
        return tuple(f for f in self.fifos if f.src == ref)

    def fifo_into(self, ref: PortRef) -> Fifo:
        for f in self.fifos:
            if f.dst == ref:
                return f
        raise KeyError(f"no fifo feeds {ref}")

    def dynamic_actors(self) -> tuple[Actor, ...]:
        return tuple(a for a in self.actors if a.kind is ActorKind.DYNAMIC)

    def config_actors(self) -> tuple[Actor, ...]:
        return tuple(a for a in self.actors if a.kind is ActorKind.CONFIG)


def _require(cond: bool, err: type[GraphError], msg: str) -> None:
    if not cond:
        raise err(msg)


def _check_actor_shape(actor: Actor) -> None:
    kinds = [p.kind for p in actor.ports]
    n_ctl_in = kinds.count(PortKind.CONTROL_IN)
    n_ctl_out = kinds.count(PortKind.CONTROL_OUT)
    n_drp = kinds.count(PortKind.DRP)

    for p in actor.ports:
        _require(p.direction in ("in", "out"), BadActorShape,
                 f"{actor.id}.{p.id}: direction must be 'in' or 'out'")
        _require(p.rate >= 1, BadActorShape,
                 f"{actor.id}.{p.id}: rate must be a positive integer")
        if p.kind is PortKind.CONTROL_IN:
            _require(p.direction == "in", BadActorShape,
                     f"{actor.id}.{p.id}: control input must have direction 'in'")
            _require(p.rate == 1, BadActorShape,
                     f"{actor.id}.{p.id}: control input rate must be 1")
        if p.kind is PortKind.CONTROL_OUT:
            _require(p.direction == "out", BadActorShape,
                     f"{actor.id}.{p.id}: control output must have direction 'out'")
            _require(p.rate == 1, BadActorShape,
                     f"{actor.id}.{p.id}: control output rate must be 1")

    if actor.kind is ActorKind.STATIC:
        _require(n_ctl_in == 0 and n_ctl_out == 0 and n_drp == 0, BadActorShape,
                 f"{actor.id}: static actors carry static regular ports only")
    elif actor.kind is ActorKind.DYNAMIC:
        _require(n_ctl_in == 1, BadActorShape,
                 f"{actor.id}: dynamic actors need exactly one control input")
        _require(n_drp >= 1, BadActorShape,
                 f"{actor.id}: dynamic actors need at least one dynamic port")
        _require(n_ctl_out == 0, BadActorShape,
                 f"{actor.id}: dynamic actors cannot own control outputs")
    elif actor.kind is ActorKind.CONFIG:
        _require(n_ctl_out >= 1, BadActorShape,
                 f"{actor.id}: configuration actors need at least one control output")
        _require(n_ctl_in == 0 and n_drp == 0, BadActorShape,
                 f"{actor.id}: configuration actors carry control outputs and static ports only")


def _parse_actor(raw: Mapping[str, Any]) -> Actor:
    ports = []
    seen = set()
    for rp in raw.get("ports", ()):
        pid = rp["id"]
        if pid in seen:
            raise DuplicateId(f"actor {raw['id']}: duplicate port id {pid!r}")
        seen.add(pid)
        ports.append(Port(
            id=pid,
            direction=rp["dir"],
            kind=PortKind(rp.get("kind", "srp")),
            rate=int(rp.get("rate", 1)),
        ))
    return Actor(
        id=raw["id"],
        kind=ActorKind(raw["kind"]),
        ports=tuple(ports),
        behavior=raw.get("behavior", ""),
        params=dict(raw.get("params", {})),
    )


def build_graph(description: Mapping[str, Any]) -> Graph:
    """Assemble and validate a graph from a parsed description mapping.

    Raises a GraphError subclass naming the first structural fault found.
    """
    actors = []
    ids = set()
    for raw in description.get("actors", ()):
        actor = _parse_actor(raw)
        if actor.id in ids:
            raise DuplicateId(f"duplicate actor id {actor.id!r}")
        ids.add(actor.id)
        _check_actor_shape(actor)
        actors.append(actor)
    by_id = {a.id: a for a in actors}

    def resolve(text: str) -> tuple[PortRef, Port]:
        ref = PortRef.parse(text)
        if ref.actor not in by_id:
            raise DanglingPort(f"fifo references unknown actor {ref.actor!r}")
        try:
            port = by_id[ref.actor].port(ref.port)
        except KeyError:
            raise DanglingPort(f"fifo references unknown port {ref}") from None
        return ref, port

    fifos = []
    fifo_ids = set()
    for raw in description.get("fifos", ()):
        fid = raw["id"]
        if fid in fifo_ids:
            raise DuplicateId(f"duplicate fifo id {fid!r}")
        fifo_ids.add(fid)
        src_ref, src_port = resolve(raw["src"])
        dst_ref, dst_port = resolve(raw["dst"])
        _require(src_port.direction == "out", BadActorShape,
                 f"fifo {fid}: source {src_ref} is not an output port")
        _require(dst_port.direction == "in", BadActorShape,
                 f"fifo {fid}: sink {dst_ref} is not an input port")
        src_is_ctl = src_port.kind is PortKind.CONTROL_OUT
        dst_is_ctl = dst_port.kind is PortKind.CONTROL_IN
        _require(src_is_ctl == dst_is_ctl, BadActorShape,
                 f"fifo {fid}: control ports pair only with control ports")
        rate = int(raw.get("rate", src_port.rate))
        if rate != src_port.rate or rate != dst_port.rate:
            raise RateMismatch(
                f"fifo {fid}: rate {rate} vs ports {src_ref}={src_port.rate}, "
                f"{dst_ref}={dst_port.rate}")
        delay = int(raw.get("delay", 0))
        _require(delay >= 0, InvalidDescription, f"fifo {fid}: delay must be >= 0")
        token_bytes = int(raw.get("token_bytes", 1))
        _require(token_bytes >= 1, InvalidDescription,
                 f"fifo {fid}: token_bytes must be >= 1")
        payload: bytes | None = None
        if raw.get("delay_payload_hex"):
            payload = bytes.fromhex(raw["delay_payload_hex"])
            if len(payload) != delay * token_bytes:
                raise InvalidDescription(
                    f"fifo {fid}: delay payload is {len(payload)} bytes, "
                    f"expected delay*token_bytes = {delay * token_bytes}")
            if not any(payload):
                payload = None  # normalize all-zero payloads
        fifos.append(Fifo(fid, src_ref, dst_ref, rate, delay, token_bytes, payload))

    # every input port is fed by exactly one fifo; every output port feeds >= 1
    fed: dict[PortRef, int] = {}
    for f in fifos:
        fed[f.dst] = fed.get(f.dst, 0) + 1
    for a in actors:
        for p in a.ports:
            ref = PortRef(a.id, p.id)
            if p.direction == "in":
                n = fed.get(ref, 0)
                _require(n != 0, DanglingPort, f"input port {ref} is not fed by any fifo")
                _require(n == 1, BadActorShape, f"input port {ref} is fed by {n} fifos")
            else:
                _require(any(f.src == ref for f in fifos), DanglingPort,
                         f"output port {ref} feeds no fifo")

    control = _parse_control(description.get("control", {}), by_id, fifos)
    graph = Graph(
        name=description.get("name", ""),
        actors=tuple(actors),
        fifos=tuple(fifos),
        control=control,
    )
    return graph


def _parse_control(raw: Mapping[str, Any], by_id: Mapping[str, Actor],
                   fifos: Iterable[Fifo]) -> ControlTable:
    lengths: list[tuple[PortRef, int]] = []
    declared = set()
    for text, length in raw.get("value_lengths", {}).items():
        ref = PortRef.parse(text)
        if ref.actor not in by_id:
            raise ControlTableError(f"value length declared for unknown actor {ref.actor!r}")
        try:
            port = by_id[ref.actor].port(ref.port)
        except KeyError:
            raise ControlTableError(f"value length declared for unknown port {ref}") from None
        if port.kind is not PortKind.CONTROL_OUT:
            raise ControlTableError(f"{ref} is not a control output port")
        if int(length) < 1:
            raise ControlTableError(f"{ref}: control-value length must be >= 1")
        lengths.append((ref, int(length)))
        declared.add(ref)

    for a in by_id.values():
        for p in a.ports:
            if p.kind is PortKind.CONTROL_OUT and PortRef(a.id, p.id) not in declared:
                raise ControlTableError(
                    f"control output {a.id}.{p.id} has no declared control-value length")

    fifo_by_dst = {f.dst: f for f in fifos}
    length_of = dict(lengths)
    entries: list[tuple[PortRef, PortRef, int]] = []
    seen_drps = set()
    for row in raw.get("table", ()):
        ctl = PortRef.parse(row["port"])
        drp = PortRef.parse(row["drp"])
        element = int(row["element"])
        if ctl not in length_of:
            raise ControlTableError(f"table entry references unknown control port {ctl}")
        if drp.actor not in by_id:
            raise ControlTableError(f"table entry references unknown actor {drp.actor!r}")
        try:
            port = by_id[drp.actor].port(drp.port)
        except KeyError:
            raise ControlTableError(f"table entry references unknown port {drp}") from None
        if port.kind is not PortKind.DRP:
            raise ControlTableError(f"table entry targets {drp}, which is not a dynamic port")
        if element < 1 or element > length_of[ctl]:
            raise ControlTableError(
                f"table entry {ctl} -> {drp}: element {element} outside 1..{length_of[ctl]}")
        if drp in seen_drps:
            raise ControlTableError(f"dynamic port {drp} is controlled by two table entries")
        seen_drps.add(drp)
        parent = by_id[drp.actor]
        cport = parent.control_input
        assert cport is not None  # actor shape already validated
        ctl_fifo = fifo_by_dst.get(PortRef(parent.id, cport.id))
        if ctl_fifo is None or ctl_fifo.src != ctl:
            raise ControlTableError(
                f"table entry {ctl} -> {drp}: {ctl} does not feed {parent.id}'s control input")
        entries.append((ctl, drp, element))

    return ControlTable(entries=tuple(entries), value_lengths=tuple(lengths))


def adjacency(graph: Graph) -> set[tuple[str, str]]:
    """Deduplicated unordered actor pairs joined by at least one fifo.

    Symmetric by construction (pairs are stored sorted) and irreflexive
    (self loops are dropped).
    """
    pairs = set()
    for f in graph.fifos:
        a, b = f.src.actor, f.dst.actor
        if a != b:
            pairs.add((a, b) if a < b else (b, a))
    return pairs


def control_lookup(graph: Graph, drp: PortRef) -> tuple[PortRef, int]:
    """Controlling (control output port, 1-based element) for a dynamic port."""
    port = graph.port(drp)
    if port.kind is not PortKind.DRP:
        raise ControlTableError(f"{drp} is not a dynamic port")
    return graph.control.lookup(drp)


def describe_graph(graph: Graph) -> dict[str, Any]:
    """External-format description of a built graph (inverse of build_graph)."""
    actors = []
    for a in graph.actors:
        actors.append({
            "id": a.id,
            "kind": a.kind.value,
            "behavior": a.behavior,
            "params": dict(a.params),
            "ports": [
                {"id": p.id, "dir": p.direction, "kind": p.kind.value, "rate": p.rate}
                for p in a.ports
            ],
        })
    fifos = []
    for f in graph.fifos:
        raw: dict[str, Any] = {
            "id": f.id, "src": str(f.src), "dst": str(f.dst),
            "rate": f.rate, "delay": f.delay, "token_bytes": f.token_bytes,
        }
        if f.delay_payload is not None:
            raw["delay_payload_hex"] = f.delay_payload.hex()
        fifos.append(raw)
    control = {
        "value_lengths": {str(ref): n for ref, n in graph.control.value_lengths},
        "table": [
            {"port": str(ctl), "drp": str(drp), "element": e}
            for ctl, drp, e in graph.control.entries
        ],
    }
    return {"name": graph.name, "actors": actors, "fifos": fifos, "control": control}
