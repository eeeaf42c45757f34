"""AXI-Stream plumbing: beats, valid/ready channels, width converters and the
dual-clock FIFO.

Byte 0 of a beat is the lowest memory address and the first octet on the wire.
``keep`` is always a contiguous run of low bits; only a ``last`` beat may be
partial.
"""

import enum
from collections import deque
from dataclasses import dataclass

from .errors import ConfigurationError, ProtocolViolation


@dataclass(slots=True)
class StreamBeat:
    data: bytes
    keep: int
    last: bool = False

    @classmethod
    def pack(cls, chunk, width, last=False):
        n = len(chunk)
        if not 0 < n <= width:
            raise ValueError(f"cannot pack {n} bytes into a {width}-byte beat")
        if n < width:
            if not last:
                raise ValueError("only a last beat may be partial")
            chunk = bytes(chunk) + bytes(width - n)
        return cls(bytes(chunk), (1 << n) - 1, last)

    @property
    def nbytes(self):
        return self.keep.bit_length()

    def payload(self):
        return self.data[: self.keep.bit_length()]

    def check(self, width):
        """Raise ``ValueError`` if the beat breaks the keep/last rules for ``width``."""
        if len(self.data) != width:
            raise ValueError(f"beat carries {len(self.data)} bytes on a {width}-byte channel")
        n = self.keep.bit_length()
        if n == 0 or self.keep != (1 << n) - 1 or n > width:
            raise ValueError(f"keep {self.keep:#x} is not a non-empty contiguous prefix")
        if n < width and not self.last:
            raise ValueError("partial keep on a non-last beat")


#: Shared single-octet beats (beats are never mutated after creation).
OCTET_BEATS = tuple(StreamBeat(bytes((i,)), 1, False) for i in range(256))
OCTET_LAST_BEATS = tuple(StreamBeat(bytes((i,)), 1, True) for i in range(256))


def _check_width(w):
    if not (1 <= w <= 64 and w & (w - 1) == 0):
        raise ConfigurationError(f"stream width {w} must be a power of two in 1..64")


def _ratio(big, small):
    _check_width(big)
    _check_width(small)
    if big % small:
        raise ConfigurationError(f"width {big} is not a multiple of {small}")
    return big // small


# -- functional converters --------------------------------------------------


def split_beat(beat, wout):
    """Cut one wide beat into narrow beats; ``last`` moves to the final piece."""
    data = beat.payload()
    if wout == 1:
        out = [OCTET_BEATS[b] for b in data]
        if beat.last:
            out[-1] = OCTET_LAST_BEATS[data[-1]]
        return out
    n = len(data)
    out = []
    for i in range(0, n, wout):
        out.append(StreamBeat.pack(data[i:i + wout], wout, beat.last and i + wout >= n))
    return out


def downsize(beats, win, wout):
    """Convert a stream of ``win``-byte beats into ``wout``-byte beats."""
    _ratio(win, wout)
    for beat in beats:
        yield from split_beat(beat, wout)


def upsize(beats, win, wout):
    """Pack narrow beats into wide ones, flushing early on ``last``."""
    _ratio(wout, win)
    acc = bytearray()
    for beat in beats:
        acc += beat.payload()
        if beat.last or len(acc) >= wout:
            while len(acc) > wout:
                yield StreamBeat.pack(bytes(acc[:wout]), wout)
                del acc[:wout]
            yield StreamBeat.pack(bytes(acc), wout, beat.last)
            acc.clear()
    # bytes of an unterminated partial beat stay held, as in hardware


def packetize(data, width):
    """Split one packet's bytes into beats of ``width``."""
    n = len(data)
    return [StreamBeat.pack(data[i:i + width], width, i + width >= n) for i in range(0, n, width)]


def stream_bytes(beats):
    return b"".join(b.payload() for b in beats)


# -- handshaked channel -----------------------------------------------------


class TransferEvent(enum.Enum):
    TRANSFERRED = "transferred"
    STALLED_VALID = "stalled_valid"  # consumer ready, nothing offered
    STALLED_READY = "stalled_ready"  # beat offered, consumer not ready
    IDLE = "idle"


class Channel:
    """Registered valid/ready link inside one clock domain.

    A beat moves on an edge where the committed ``valid`` and ``ready`` are
    both set. During ``tick`` the producer may :meth:`push` only when
    :meth:`can_push` holds; the consumer reads ``data`` when ``valid and
    ready`` and stages its next ``ready`` with :meth:`set_ready`.
    """

    __slots__ = (
        "_push", "_ready_next", "_tracing", "data", "kernel", "last_event", "name", "ready",
        "stalled_ready", "transfers", "valid", "width",
    )

    def __init__(self, name, width, kernel=None):
        _check_width(width)
        self.name = name
        self.width = width
        self.kernel = kernel
        self.valid = False
        self.ready = False
        self.data = None
        self._push = None
        self._ready_next = False
        self.last_event = TransferEvent.IDLE
        self._tracing = kernel is not None and kernel.tracing
        self.transfers = 0
        self.stalled_ready = 0

    def can_push(self):
        return not self.valid or self.ready

    def push(self, beat):
        if self.valid and not self.ready:
            raise ProtocolViolation(
                f"{self.name}: producer replaced a pending beat before it was consumed")
        self._push = beat

    def set_ready(self, ready):
        self._ready_next = ready

    @property
    def fire(self):
        return self.valid and self.ready

    def commit(self):
        push = self._push
        if self.valid:
            if self.ready:
                self.transfers += 1
                if push is None:
                    self.valid = False
                    self.data = None
                else:
                    self.data = push
                    self._push = None
                self.ready = self._ready_next
                self.last_event = _TRANSFERRED
                if self._tracing:
                    self.kernel.trace(self.name, "transfer", "")
                return _TRANSFERRED
            self.stalled_ready += 1
            self.ready = self._ready_next
            self.last_event = _STALLED_READY
            return _STALLED_READY
        if push is not None:
            self.valid = True
            self.data = push
            self._push = None
        event = _STALLED_VALID if self.ready else _IDLE
        self.ready = self._ready_next
        self.last_event = event
        return event

    channel_tick = commit


_TRANSFERRED = TransferEvent.TRANSFERRED
_STALLED_READY = TransferEvent.STALLED_READY
_STALLED_VALID = TransferEvent.STALLED_VALID
_IDLE = TransferEvent.IDLE


# -- width converters as clocked components --------------------------------


class Downsizer:
    """Wide-to-narrow converter; one narrow beat per edge when unstalled."""

    __slots__ = (
        "_out", "_ready", "dst", "holds_last", "level", "max_level", "name", "ratio", "src",
        "win", "wout",
    )

    def __init__(self, name, src, dst, win, wout):
        self.name = name
        self.ratio = _ratio(win, wout)
        self.win, self.wout = win, wout
        self.src, self.dst = src, dst
        self._out = deque()
        self.level = 0  # bytes held
        self.holds_last = 0
        self.max_level = 0
        self._ready = None

    def tick(self):
        src = self.src
        out = self._out
        if src.ready and src.valid:
            beat = src.data
            out.extend(split_beat(beat, self.wout))
            self.level += beat.keep.bit_length()
            if beat.last:
                self.holds_last += 1
            if self.level > self.max_level:
                self.max_level = self.level
        if out:
            dst = self.dst
            if dst.can_push():
                piece = out.popleft()
                dst.push(piece)
                self.level -= 1 if self.wout == 1 else piece.keep.bit_length()
                if piece.last:
                    self.holds_last -= 1
        ready = len(out) <= self.ratio
        if ready is not self._ready:
            self._ready = ready
            src.set_ready(ready)


class Upsizer:
    """Narrow-to-wide converter with early flush on ``last``."""

    __slots__ = (
        "_acc", "_out", "_ready", "dst", "max_queue", "name", "ratio", "src", "win", "wout",
    )

    def __init__(self, name, src, dst, win, wout):
        self.name = name
        self.ratio = _ratio(wout, win)
        self.win, self.wout = win, wout
        self.src, self.dst = src, dst
        self._acc = bytearray()
        self._out = deque()
        self.max_queue = 0
        self._ready = True
        src.set_ready(True)
        src.ready = True

    def tick(self):
        src = self.src
        out = self._out
        if src.valid and src.ready:
            beat = src.data
            acc = self._acc
            if self.win == 1:
                acc.append(beat.data[0])
            else:
                acc += beat.payload()
            if beat.last or len(acc) >= self.wout:
                out.extend(upsize_chunk(acc, self.wout, beat.last))
                acc.clear()
            if len(out) > self.max_queue:
                self.max_queue = len(out)
        if out:
            dst = self.dst
            if dst.can_push():
                dst.push(out.popleft())
        ready = len(out) < 2
        if ready is not self._ready:
            self._ready = ready
            src.set_ready(ready)


def upsize_chunk(acc, wout, last):
    beats = []
    n = len(acc)
    for i in range(0, n, wout):
        beats.append(StreamBeat.pack(bytes(acc[i:i + wout]), wout, last and i + wout >= n))
    return beats


# -- dual-clock FIFO --------------------------------------------------------


class CdcFifo:
    """Asynchronous FIFO between a write and a read clock domain.

    Stands for the usual gray-pointer design with ``sync_stages`` flops per
    direction. A gray-coded pointer changes one bit per step, so every
    synchronized sample is an exact earlier pointer value; the model keeps
    exact per-entry timing instead of the flop chain. An entry written at
    time ``t`` reaches the reader on the read edge after ``sync_stages``
    read edges strictly later than ``t`` have completed. Reads travel back
    to the writer the same way, so ``full`` may assert early, never late.

    The write side looks like a channel consumer (:meth:`can_push` /
    :meth:`push`, called from a write-domain tick); ``fifo.reader`` looks like
    a channel producer (``valid``/``data``/``ready``/``set_ready``) and is
    registered in the read domain by :meth:`bind`.

    Parameters
    ----------
    depth : int
        Entry count, a power of two.
    sync_stages : int
        Synchronizer flops per direction, at least 2.
    track_bytes : bool
        Keep running byte and ``last`` counts so the reader can report how
        many payload bytes are visible (used by cut-through start logic).
    """

    __slots__ = (
        "_lag", "_last_push_edge", "_nvis", "_q", "_read_marks", "_reads_seen", "_rstate",
        "_wstate", "bytes_read", "bytes_written", "depth", "kernel", "lasts_read",
        "lasts_written", "max_occupancy", "name", "read_domain", "reader", "reads",
        "sync_stages", "track_bytes", "write_domain", "writes",
    )

    def __init__(self, name, depth=32, sync_stages=2, kernel=None, track_bytes=False):
        if depth < 1 or depth & (depth - 1):
            raise ConfigurationError(f"{name}: depth {depth} must be a power of two")
        if sync_stages < 2:
            raise ConfigurationError(f"{name}: need at least 2 synchronizer stages")
        self.name = name
        self.depth = depth
        self.sync_stages = sync_stages
        self.kernel = None
        self.track_bytes = track_bytes
        self._lag = sync_stages + 1
        # entries: (first read edge that sees it, item, cumulative bytes, cumulative lasts)
        self._q = deque()
        self._nvis = 0  # leading entries already known to be visible
        self._read_marks = deque()  # first write edge that sees each read
        self._reads_seen = 0
        self._last_push_edge = -1
        self.writes = 0
        self.reads = 0
        self.bytes_written = 0
        self.bytes_read = 0
        self.lasts_written = 0
        self.lasts_read = 0
        self.max_occupancy = 0
        self.write_domain = None
        self.read_domain = None
        self._wstate = self._rstate = None
        self.reader = _FifoReader(self)
        if kernel is not None:
            self.kernel = kernel

    def bind(self, kernel, write_domain, read_domain):
        self.kernel = kernel
        self.write_domain = write_domain
        self.read_domain = read_domain
        self._wstate = kernel.add_domain(write_domain)
        self._rstate = kernel.add_domain(read_domain)
        kernel.register(self.reader, read_domain)

    # -- write side ----------------------------------------------------------

    def can_push(self):
        """Writer's view: entries written minus reads its synchronizer has seen."""
        marks = self._read_marks
        if marks:
            edge = self._wstate.edges
            while marks and marks[0] <= edge:
                marks.popleft()
                self._reads_seen += 1
        return self.writes - self._reads_seen < self.depth

    @property
    def full(self):
        return not self.can_push()

    def push(self, item):
        k = self.kernel
        ws = self._wstate
        if ws is None or k._current is not ws:
            self._wrong_domain("write")
        if ws.edges == self._last_push_edge:
            raise ProtocolViolation(f"{self.name}: two writes in one edge")
        if not self.can_push():
            raise ProtocolViolation(f"{self.name}: write while full")
        self._last_push_edge = ws.edges
        if self.track_bytes:
            self.bytes_written += item.keep.bit_length()
            if item.last:
                self.lasts_written += 1
        rd = self._rstate.domain
        self._q.append((rd.edges_through(k.now) + self._lag, item,
                        self.bytes_written, self.lasts_written))
        self.writes += 1
        occ = self.writes - self.reads
        if occ > self.max_occupancy:
            self.max_occupancy = occ
            if occ > self.depth:
                raise ProtocolViolation(f"{self.name}: overflow ({occ} > {self.depth})")
        if k.tracing:
            k.trace(self.name, "occupancy", occ)

    @property
    def occupancy(self):
        """True entry count (writes minus reads), independent of synchronizers."""
        return self.writes - self.reads

    def _wrong_domain(self, side):
        if self._wstate is None:
            raise ConfigurationError(f"{self.name}: bind() the FIFO to a kernel before use")
        cur = self.kernel._current
        name = "none" if cur is None else cur.domain.name
        raise ProtocolViolation(f"{self.name}: {side} side driven from domain {name}")

    # -- read side -----------------------------------------------------------

    def _advance(self):
        q = self._q
        n = self._nvis
        edge = self._rstate.edges
        while n < len(q) and q[n][0] <= edge:
            n += 1
        self._nvis = n
        return n

    def _pop(self):
        k = self.kernel
        if k._current is not self._rstate:
            self._wrong_domain("read")
        _, item, _, _ = self._q.popleft()
        self._nvis -= 1
        self.reads += 1
        if self.track_bytes:
            self.bytes_read += item.keep.bit_length()
            if item.last:
                self.lasts_read += 1
        self._read_marks.append(self._wstate.domain.edges_through(k.now) + self._lag)
        if k.tracing:
            k.trace(self.name, "occupancy", self.writes - self.reads)


class _FifoReader:
    """Read port; presents the head entry like a channel producer."""

    __slots__ = ("_ready_next", "fifo", "name", "ready")

    def __init__(self, fifo):
        self.name = fifo.name + ".r"
        self.fifo = fifo
        self.ready = False
        self._ready_next = False

    @property
    def valid(self):
        f = self.fifo
        return bool(f._nvis or f._advance())

    @property
    def data(self):
        f = self.fifo
        if f._nvis or f._advance():
            return f._q[0][1]
        return None

    @property
    def empty(self):
        return not self.valid

    @property
    def visible(self):
        """Entries the reader can currently see."""
        return self.fifo._advance()

    @property
    def visible_bytes(self):
        f = self.fifo
        n = f._advance()
        return f._q[n - 1][2] - f.bytes_read if n else 0

    @property
    def visible_lasts(self):
        f = self.fifo
        n = f._advance()
        return f._q[n - 1][3] - f.lasts_read if n else 0

    def set_ready(self, ready):
        self._ready_next = ready

    def commit(self):
        if self.ready:
            f = self.fifo
            if f._nvis or f._advance():
                f._pop()
        self.ready = self._ready_next


class EventSync:
    """Low-rate status crossing (done pulses, frame reports).

    An item posted at time ``t`` becomes visible in ``domain`` once that
    domain has clocked ``stages`` edges strictly after ``t`` - the latency of
    a toggle synchronizer, without ticking a component every edge.
    """

    def __init__(self, kernel, domain, stages=2):
        self.kernel = kernel
        self.domain = domain
        self.stages = stages
        self.pending = deque()

    def post(self, item):
        self.pending.append((self.kernel.now, item))

    def poll(self):
        items = self.pending
        if not items:
            return None
        t, item = items[0]
        if self.kernel.edges_since(self.domain, t) >= self.stages:
            items.popleft()
            return item
        return None

    def __len__(self):
        return len(self.pending)
