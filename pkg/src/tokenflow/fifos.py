"""Bounded channel engine with chunked zero-copy spans.

A channel holds C chunks of one firing's worth of tokens (rate r) plus the
initial delay tokens Q. Producer and consumer work directly in the buffer:
write_start hands out the next chunk as a memoryview, write_end publishes it,
and the mirrored read calls retire it. Counter-based gating (how many chunk
writes and reads have completed) decides when a span is safe to reuse, so
both sides can hold spans concurrently.

Two layouts cover all rate/delay combinations:

* aligned (Q divisible by r): a plain ring of max(rC, Q) slots. Chunks never
  straddle the wrap point because every offset is a multiple of r.
* unaligned: rC + Q slots. Writes cycle through C fixed chunk positions after
  the delay prefix, reads slide over the first rC slots, and once per C
  writes the trailing Q slots are copied back to the front. The copy is the
  price of keeping every span contiguous.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass


class FifoError(Exception):
    pass


class InvalidParams(FifoError, ValueError):
    pass


class ProtocolError(FifoError):
    pass


class EndOfStream(FifoError):
    """Channel is closed and holds fewer tokens than one firing needs."""


class Poisoned(FifoError):
    """Channel was force-released after a failure elsewhere."""

    def __init__(self, fifo_id: str, reason: str = ""):
        self.fifo_id = fifo_id
        super().__init__(f"channel {fifo_id} poisoned" + (f": {reason}" if reason else ""))


@dataclass(frozen=True)
class CapacityPlan:
    rate: int
    token_bytes: int
    delay: int
    factor: int
    aligned: bool
    slots: int
    nbytes: int
    # (src_slot, dst_slot, slot_count) for the periodic wrap copy, else None
    copy: tuple[int, int, int] | None

    @property
    def write_chunks(self) -> list[int]:
        """Slot offsets of the C write positions within one cycle."""
        if self.aligned:
            return [(self.delay + w * self.rate) % self.slots for w in range(self.factor)]
        return [self.delay + w * self.rate for w in range(self.factor)]

    @property
    def read_chunks(self) -> list[int]:
        """Slot offsets of the C read positions within one cycle."""
        if self.aligned:
            return [(i * self.rate) % self.slots for i in range(self.factor)]
        return [i * self.rate for i in range(self.factor)]


def _validate(rate: int, token_bytes: int, delay: int, factor: int) -> None:
    if rate < 1:
        raise InvalidParams(f"rate must be >= 1, got {rate}")
    if token_bytes < 1:
        raise InvalidParams(f"token size must be >= 1 byte, got {token_bytes}")
    if delay < 0:
        raise InvalidParams(f"delay must be >= 0, got {delay}")
    if factor < 2:
        raise InvalidParams(f"buffering factor must be >= 2, got {factor}")


def layout_plan(rate: int, delay: int, factor: int, token_bytes: int = 1) -> CapacityPlan:
    _validate(rate, token_bytes, delay, factor)
    aligned = delay % rate == 0
    if aligned:
        slots = max(rate * factor, delay)
        copy = None
    else:
        slots = rate * factor + delay
        copy = (rate * factor, 0, delay)
    return CapacityPlan(rate=rate, token_bytes=token_bytes, delay=delay,
                        factor=factor, aligned=aligned, slots=slots,
                        nbytes=slots * token_bytes, copy=copy)


def capacity(rate: int, token_bytes: int, delay: int, factor: int) -> int:
    """Channel memory in bytes for the given rate, delay and buffering factor."""
    return layout_plan(rate, delay, factor, token_bytes).nbytes


def writer_gate(w: int, rate: int, delay: int, factor: int, aligned: bool) -> int:
    """Completed reads required before chunk write w may start."""
    if aligned:
        slots = max(rate * factor, delay)
        last = delay + (w + 1) * rate - 1 - slots
        return 0 if last < 0 else last // rate + 1
    n, c = divmod(w, factor)
    if n == 0:
        return 0
    if delay > rate * factor:
        # reads only ever touch the first rate*factor slots, which lie fully
        # below the write region here; the content this write replaces was
        # duplicated forward by the previous period's wrap copy, so that copy
        # is the only precondition
        return copy_gate(n - 1, rate, delay, factor)
    return (delay + (n - 1) * rate * factor + (c + 1) * rate - 1) // rate + 1


def reader_gate(i: int, rate: int, delay: int) -> int:
    """Completed chunk writes required before read i may start."""
    need = (i + 1) * rate - delay
    return 0 if need <= 0 else -(-need // rate)


def copy_gate(n: int, rate: int, delay: int, factor: int) -> int:
    """Completed reads required before wrap copy n may run (unaligned only).

    The copy overwrites the delay prefix, so every read of the prefix content
    must have retired. Reads cover at most rate*factor slots per period; any
    prefix beyond that lies inside the copy's own source and is preserved by
    the copy itself, so it never gates.
    """
    span = min(delay, rate * factor)
    return n * factor + (span - 1) // rate + 1


class FifoChannel:
    """Single-producer single-consumer bounded channel.

    Spans returned by write_start/read_start stay valid until the matching
    end call. Token payloads are raw bytes; interpretation belongs to the
    actors on either side.
    """

    def __init__(self, fifo_id: str, rate: int, token_bytes: int, delay: int,
                 factor: int = 3, delay_payload: bytes | None = None,
                 instrument: bool = False):
        self.id = fifo_id
        self.plan = layout_plan(rate, delay, factor, token_bytes)
        self._buf = bytearray(self.plan.nbytes)
        if delay_payload is not None:
            if len(delay_payload) != delay * token_bytes:
                raise InvalidParams(
                    f"delay payload is {len(delay_payload)} bytes, "
                    f"expected {delay * token_bytes}")
            self._buf[:len(delay_payload)] = delay_payload
        self._cond = threading.Condition()
        self._writes_done = 0
        self._reads_done = 0
        self._copies_done = 0
        self._pending_copy = False
        self._write_active = False
        self._read_active = False
        self._closed = False
        self._poisoned: str | None = None
        self._max_occupancy = delay
        self.events: list[tuple] | None = [] if instrument else None
        self.on_event = None  # callable(fifo_id, op, occupancy)

    # -- state ---------------------------------------------------------

    @property
    def occupancy(self) -> int:
        """Published, unconsumed tokens (delay included)."""
        p = self.plan
        return p.delay + p.rate * (self._writes_done - self._reads_done)

    @property
    def max_occupancy(self) -> int:
        return self._max_occupancy

    @property
    def closed(self) -> bool:
        return self._closed

    def _check_poison(self) -> None:
        if self._poisoned is not None:
            raise Poisoned(self.id, self._poisoned)

    def _emit(self, op: str) -> None:
        if self.on_event is not None:
            self.on_event(self.id, op, self.occupancy)

    def _span(self, slot: int) -> memoryview:
        lo = slot * self.plan.token_bytes
        hi = lo + self.plan.rate * self.plan.token_bytes
        return memoryview(self._buf)[lo:hi]

    # -- wrap copy -----------------------------------------------------

    def _run_copy(self) -> None:
        src, dst, count = self.plan.copy
        tb = self.plan.token_bytes
        chunk = bytes(self._buf[src * tb:(src + count) * tb])
        self._buf[dst * tb:(dst + count) * tb] = chunk
        self._copies_done += 1
        self._pending_copy = False
        if self.events is not None:
            self.events.append(("copy", src, dst, count))
        self._emit("copy")

    def _copy_ready(self) -> bool:
        p = self.plan
        return self._reads_done >= copy_gate(self._copies_done, p.rate, p.delay, p.factor)

    # -- producer side ---------------------------------------------------

    def write_start(self) -> memoryview:
        p = self.plan
        with self._cond:
            self._check_poison()
            if self._closed:
                raise ProtocolError(f"channel {self.id}: write after close")
            if self._write_active:
                raise ProtocolError(f"channel {self.id}: write already in progress")
            w = self._writes_done
            need = writer_gate(w, p.rate, p.delay, p.factor, p.aligned)
            while self._reads_done < need:
                self._cond.wait()
                self._check_poison()
            if self._pending_copy:
                # deferred from the previous period; the gate above implies
                # the copy's own precondition
                self._run_copy()
            self._write_active = True
            if p.aligned:
                slot = (p.delay + w * p.rate) % p.slots
            else:
                slot = p.delay + (w % p.factor) * p.rate
            return self._span(slot)

    def write_end(self) -> None:
        p = self.plan
        with self._cond:
            self._check_poison()
            if not self._write_active:
                raise ProtocolError(f"channel {self.id}: write_end without write_start")
            w = self._writes_done
            self._write_active = False
            self._writes_done += 1
            self._max_occupancy = max(self._max_occupancy, self.occupancy)
            if self.events is not None:
                if p.aligned:
                    slot = (p.delay + w * p.rate) % p.slots
                else:
                    slot = p.delay + (w % p.factor) * p.rate
                self.events.append(("w", slot, slot + p.rate))
            self._emit("w")
            if not p.aligned and w % p.factor == p.factor - 1:
                if self._copy_ready():
                    self._run_copy()
                else:
                    self._pending_copy = True
            self._cond.notify_all()

    def close(self) -> None:
        with self._cond:
            if self._poisoned is not None:
                return
            self._closed = True
            self._cond.notify_all()

    # -- consumer side ---------------------------------------------------

    def read_start(self) -> memoryview:
        p = self.plan
        with self._cond:
            self._check_poison()
            if self._read_active:
                raise ProtocolError(f"channel {self.id}: read already in progress")
            i = self._reads_done
            while True:
                have_tokens = self._writes_done >= reader_gate(i, p.rate, p.delay)
                have_copy = p.aligned or self._copies_done >= i // p.factor
                if not have_copy and self._copy_ready() \
                        and (self._pending_copy or self._closed):
                    # safe to run the wrap copy from this side: either the
                    # producer deferred it at a period boundary (it holds no
                    # span before its next write_start, which re-checks the
                    # flag), or the channel is closed and no writer remains.
                    # After a mid-period close the copy was never scheduled,
                    # yet the reads that survive still need the relocation.
                    self._run_copy()
                    continue
                if have_tokens and have_copy:
                    break
                if self._closed and not have_tokens:
                    raise EndOfStream(self.id)
                self._cond.wait()
                self._check_poison()
            self._read_active = True
            slot = (i * p.rate) % p.slots if p.aligned else (i % p.factor) * p.rate
            return self._span(slot)

    def read_end(self) -> None:
        p = self.plan
        with self._cond:
            self._check_poison()
            if not self._read_active:
                raise ProtocolError(f"channel {self.id}: read_end without read_start")
            i = self._reads_done
            self._read_active = False
            self._reads_done += 1
            if self.events is not None:
                slot = (i * p.rate) % p.slots if p.aligned else (i % p.factor) * p.rate
                self.events.append(("r", slot, slot + p.rate))
            self._emit("r")
            self._cond.notify_all()

    def cancel_read(self) -> None:
        """Release a started read without consuming; tokens stay in place."""
        with self._cond:
            if not self._read_active:
                raise ProtocolError(f"channel {self.id}: cancel without active read")
            self._read_active = False
            self._cond.notify_all()

    # -- failure ---------------------------------------------------------

    def poison(self, reason: str = "") -> None:
        with self._cond:
            self._poisoned = reason or "failure elsewhere in the graph"
            self._cond.notify_all()
