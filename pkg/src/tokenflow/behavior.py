"""Actor behaviors: the code that runs when an actor fires.

A behavior is looked up by the name in the graph description. It sees one
firing at a time through a FireContext: input spans, output spans, effective
rates, and the decoded control values for dynamic actors. Spans are raw
buffer views; writing outside them or keeping them past the firing is an
error.
"""
from __future__ import annotations

import random
import zlib
from dataclasses import dataclass, field
from typing import Callable, Mapping


def actor_seed(base: int | None, actor_id: str) -> int | None:
    """Stable per-actor seed so both execution engines feed behaviors alike."""
    if base is None:
        return None
    return (base ^ zlib.crc32(actor_id.encode())) & 0x7FFFFFFF


def encode_control(values, token_bytes: int | None = None) -> bytes:
    """One byte per boolean element, zero-padded to the token size."""
    raw = bytes(1 if v else 0 for v in values)
    if token_bytes is not None:
        if len(raw) > token_bytes:
            raise ValueError(f"{len(raw)} control elements exceed {token_bytes} bytes")
        raw = raw.ljust(token_bytes, b"\x00")
    return raw


def decode_control(data, length: int) -> tuple[bool, ...]:
    buf = bytes(data)
    if len(buf) < length:
        raise ValueError(f"control token holds {len(buf)} bytes, need {length}")
    return tuple(b != 0 for b in buf[:length])


@dataclass
class FireContext:
    actor_id: str
    firing: int
    rates: Mapping[str, int]
    inputs: Mapping[str, memoryview]
    outputs: Mapping[str, memoryview]
    params: Mapping = field(default_factory=dict)
    seed: int | None = None
    control_values: tuple[bool, ...] | None = None


class ActorBehavior:
    """Base class; subclass and override fire. One instance per actor."""

    def init(self, actor_id: str, params: Mapping, seed: int | None) -> None:
        pass

    def control(self, actor_id: str, firing: int, values: tuple[bool, ...]) -> None:
        """Called on dynamic actors with each decoded control token."""

    def fire(self, ctx: FireContext) -> None:
        raise NotImplementedError

    def finish(self, actor_id: str) -> None:
        pass


_REGISTRY: dict[str, Callable[[], ActorBehavior]] = {}


def behavior(name: str):
    def deco(factory):
        if name in _REGISTRY:
            raise ValueError(f"behavior {name!r} already registered")
        _REGISTRY[name] = factory
        return factory
    return deco


def resolve(name: str) -> ActorBehavior:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown behavior {name!r}; known: {sorted(_REGISTRY)}") from None
    return factory()


def available() -> list[str]:
    return sorted(_REGISTRY)


@behavior("null_sink")
class NullSink(ActorBehavior):
    def fire(self, ctx: FireContext) -> None:
        pass


@behavior("const_source")
class ConstSource(ActorBehavior):
    """Fills every output span with params['value'] (default 0)."""

    def fire(self, ctx: FireContext) -> None:
        value = int(ctx.params.get("value", 0)) & 0xFF
        for span in ctx.outputs.values():
            span[:] = bytes([value]) * len(span)


@behavior("counter_source")
class CounterSource(ActorBehavior):
    """Emits consecutive byte values so every token is identifiable."""

    def __init__(self):
        self.n = 0

    def fire(self, ctx: FireContext) -> None:
        for port in sorted(ctx.outputs):
            span = ctx.outputs[port]
            for k in range(len(span)):
                span[k] = (self.n + k) % 256
            self.n += len(span)


@behavior("file_source")
class FileSource(ActorBehavior):
    """Streams a binary file, one span's worth of bytes per firing."""

    def init(self, actor_id: str, params: Mapping, seed: int | None) -> None:
        with open(params["path"], "rb") as fh:
            self.data = fh.read()
        self.pos = 0

    def fire(self, ctx: FireContext) -> None:
        for port in sorted(ctx.outputs):
            span = ctx.outputs[port]
            end = self.pos + len(span)
            if end > len(self.data):
                raise EOFError(f"{ctx.actor_id}: input file exhausted at byte {self.pos}")
            span[:] = self.data[self.pos:end]
            self.pos = end


@behavior("noise_source")
class NoiseSource(ActorBehavior):
    def init(self, actor_id: str, params: Mapping, seed: int | None) -> None:
        self.rng = random.Random(seed if seed is not None else 0)

    def fire(self, ctx: FireContext) -> None:
        for port in sorted(ctx.outputs):
            span = ctx.outputs[port]
            span[:] = self.rng.randbytes(len(span))


@behavior("passthrough")
class Passthrough(ActorBehavior):
    """Copies the single input span to every output span."""

    def fire(self, ctx: FireContext) -> None:
        (src,) = ctx.inputs.values()
        for span in ctx.outputs.values():
            span[:] = src[:len(span)]


@behavior("add_mod")
class AddMod(ActorBehavior):
    """Bytewise sum of all inputs plus params['offset'], modulo 256."""

    def fire(self, ctx: FireContext) -> None:
        offset = int(ctx.params.get("offset", 0))
        spans = [ctx.inputs[p] for p in sorted(ctx.inputs)]
        for out in ctx.outputs.values():
            for k in range(len(out)):
                out[k] = (sum(s[k] for s in spans) + offset) % 256


@behavior("route")
class Route(ActorBehavior):
    """Upstream dynamic actor: copy the input onto each active output."""

    def fire(self, ctx: FireContext) -> None:
        (src,) = ctx.inputs.values()
        for span in ctx.outputs.values():
            if len(span):
                span[:] = src[:len(span)]


@behavior("merge")
class Merge(ActorBehavior):
    """Downstream dynamic actor: forward the active input to the output."""

    def fire(self, ctx: FireContext) -> None:
        live = [s for s in ctx.inputs.values() if len(s)]
        for span in ctx.outputs.values():
            if len(span):
                if len(live) == 1:
                    span[:] = live[0][:len(span)]
                else:
                    for k in range(len(span)):
                        span[k] = sum(s[k] for s in live) % 256


class _PolicyBase(ActorBehavior):
    """Shared machinery for configuration actors emitting control vectors."""

    def init(self, actor_id: str, params: Mapping, seed: int | None) -> None:
        self.firing = 0
        self.rng = random.Random(seed if seed is not None else 0)

    def pick(self, length: int, params: Mapping) -> list[bool]:
        raise NotImplementedError

    def fire(self, ctx: FireContext) -> None:
        length = int(ctx.params["length"])
        values = self.pick(length, ctx.params)
        token = encode_control(values)
        for span in ctx.outputs.values():
            span[:] = token.ljust(len(span), b"\x00")
        self.firing += 1


@behavior("fixed_policy")
class FixedPolicy(_PolicyBase):
    """Activates params['element'] (1-based) every firing."""

    def pick(self, length: int, params: Mapping) -> list[bool]:
        el = int(params["element"])
        return [k == el for k in range(1, length + 1)]


@behavior("alternate_policy")
class AlternatePolicy(_PolicyBase):
    """Cycles through elements 1..length, one active per firing."""

    def pick(self, length: int, params: Mapping) -> list[bool]:
        el = self.firing % length + 1
        return [k == el for k in range(1, length + 1)]


@behavior("seeded_policy")
class SeededPolicy(_PolicyBase):
    """Activates one random element per firing."""

    def pick(self, length: int, params: Mapping) -> list[bool]:
        el = self.rng.randrange(1, length + 1)
        return [k == el for k in range(1, length + 1)]


@behavior("subset_policy")
class SubsetPolicy(_PolicyBase):
    """Activates a random subset of at least params.get('min_active', 2) elements."""

    def pick(self, length: int, params: Mapping) -> list[bool]:
        lo = int(params.get("min_active", 2))
        size = self.rng.randint(min(lo, length), length)
        chosen = set(self.rng.sample(range(1, length + 1), size))
        return [k in chosen for k in range(1, length + 1)]
