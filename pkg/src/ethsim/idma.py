"""DMA engine: 1D request legalization and the memory <-> stream transport.

The engine owns one memory port, shared round-robin by a read backend
(memory to stream) and a write backend (stream to memory). Each memory beat
holds the port for the memory's per-beat latency.
"""

import enum
import itertools
from dataclasses import dataclass, field

from .axis import StreamBeat
from .errors import BusFault, ConfigurationError

PAGE_SIZE = 4096
MAX_BURST_BEATS = 256


class Direction(enum.Enum):
    MEM_TO_STREAM = "mem_to_stream"
    STREAM_TO_MEM = "stream_to_mem"


_ids = itertools.count()


@dataclass(frozen=True)
class TransferRequest:
    direction: Direction
    mem_addr: int
    length: int
    id: int = field(default_factory=lambda: next(_ids))

    def __post_init__(self):
        if self.length < 1:
            raise ConfigurationError(f"transfer length must be >= 1, got {self.length}")
        if self.mem_addr < 0:
            raise ConfigurationError("negative memory address")


@dataclass(frozen=True)
class DmaJob:
    mem_addr: int
    length: int
    beats: int
    first_offset: int  # byte lane of the first byte in the first beat
    last_offset: int  # byte lane of the final byte in the last beat

    @property
    def end(self):
        return self.mem_addr + self.length


def legalize(req, bus_width=8, max_burst_beats=MAX_BURST_BEATS, page_size=PAGE_SIZE):
    """Split ``req`` into bursts that stay inside one page and under the beat cap."""
    if bus_width < 1 or bus_width & (bus_width - 1):
        raise ConfigurationError(f"bus width {bus_width} must be a power of two")
    if max_burst_beats < 1:
        raise ConfigurationError("max_burst_beats must be >= 1")
    jobs = []
    addr = req.mem_addr
    end = req.mem_addr + req.length
    while addr < end:
        page_end = (addr // page_size + 1) * page_size
        burst_end = (addr // bus_width + max_burst_beats) * bus_width
        stop = min(end, page_end, burst_end)
        n = stop - addr
        beats = (stop - 1) // bus_width - addr // bus_width + 1
        jobs.append(DmaJob(addr, n, beats, addr % bus_width, (stop - 1) % bus_width))
        addr = stop
    return jobs


class DmaState(enum.Enum):
    IDLE = "idle"
    RUNNING = "running"
    DONE = "done"
    ERROR = "error"


@dataclass
class DmaStatus:
    id: int
    direction: Direction
    length: int
    state: DmaState = DmaState.IDLE
    bytes_moved: int = 0
    beats: int = 0
    start_edge: int = 0
    end_edge: int = 0
    overflow: bool = False
    error: str = ""

    @property
    def edges(self):
        return self.end_edge - self.start_edge


class _ReadBackend:
    """Memory to stream. Packs bytes so every stream beat but the last is full."""

    __slots__ = (
        "acc", "active", "e", "emitted", "end", "fetch_addr", "inflight", "job_index", "jobs",
        "pending", "setup", "sink", "status",
    )

    def __init__(self, engine, sink):
        self.e = engine
        self.sink = sink
        self.status = None
        self.active = False
        self.jobs = []

    def start(self, req):
        self.status = DmaStatus(req.id, req.direction, req.length, DmaState.RUNNING,
                                start_edge=self.e.edges)
        self.active = True
        self.jobs = legalize(req, self.e.bus_width, self.e.max_burst_beats)
        self.setup = self.e.setup_cycles
        self.fetch_addr = req.mem_addr
        self.end = req.mem_addr + req.length
        self.job_index = 0
        self.acc = bytearray()
        self.inflight = 0  # bytes requested from memory, not yet returned
        self.pending = None  # formed beat waiting for the sink
        self.emitted = 0

    def wants_port(self):
        if self.setup or self.fetch_addr >= self.end or self.inflight:
            return False
        return len(self.acc) < self.e.bus_width

    def next_chunk(self):
        w = self.e.bus_width
        job = self.jobs[self.job_index]
        if self.fetch_addr == job.mem_addr:
            self.e._trace("job", f"{job.mem_addr:#x}+{job.length}")
        n = min(w - self.fetch_addr % w, job.end - self.fetch_addr)
        addr = self.fetch_addr
        self.fetch_addr += n
        if self.fetch_addr >= job.end:
            self.job_index += 1
        self.inflight = n
        return addr, n

    def deliver(self, data):
        self.acc += data
        self.inflight = 0

    def step(self):
        if self.setup:
            self.setup -= 1
            return
        pending = self.pending
        if pending is None:
            w = self.e.bus_width
            acc = self.acc
            take = self.status.length - self.emitted
            if take > w:
                take = w
            if take and len(acc) >= take:
                self.emitted += take
                last = self.emitted == self.status.length
                if take == w:
                    chunk = bytes(acc[:w])
                else:
                    chunk = bytes(acc[:take]) + bytes(w - take)
                del acc[:take]
                pending = self.pending = StreamBeat(chunk, (1 << take) - 1, last)
        if pending is not None and self.sink.can_push():
            self.sink.push(pending)
            self.pending = None
            st = self.status
            st.beats += 1
            st.bytes_moved += pending.keep.bit_length()
            if pending.last:
                st.state = DmaState.DONE
                st.end_edge = self.e.edges
                self.e._finished(self)


class _WriteBackend:
    """Stream to memory. Writes only keep-masked bytes; ends on ``last``."""

    __slots__ = (
        "acc", "active", "addr", "e", "inflight", "job_index", "jobs", "limit", "received",
        "saw_last", "setup", "src", "status",
    )

    def __init__(self, engine, source):
        self.e = engine
        self.src = source
        self.status = None
        self.active = False

    def start(self, req):
        self.status = DmaStatus(req.id, req.direction, req.length, DmaState.RUNNING,
                                start_edge=self.e.edges)
        self.active = True
        self.jobs = legalize(req, self.e.bus_width, self.e.max_burst_beats)
        self.setup = self.e.setup_cycles
        self.addr = req.mem_addr
        self.limit = req.mem_addr + req.length
        self.job_index = 0
        self.acc = bytearray()
        self.inflight = 0
        self.saw_last = False
        self.received = 0

    def _chunk_len(self):
        w = self.e.bus_width
        return min(w - self.addr % w, self.limit - self.addr)

    def wants_port(self):
        if not self.acc or self.inflight or self.setup:
            return False
        return len(self.acc) >= self._chunk_len() or self.saw_last

    def next_chunk(self):
        job = self.jobs[self.job_index]
        if self.addr == job.mem_addr:
            self.e._trace("job", f"{job.mem_addr:#x}+{job.length}")
        n = min(self._chunk_len(), len(self.acc))
        data = bytes(self.acc[:n])
        del self.acc[:n]
        addr = self.addr
        self.addr += n
        while self.job_index < len(self.jobs) and self.addr >= self.jobs[self.job_index].end:
            self.job_index += 1
        self.inflight = n
        return addr, data

    def written(self, n):
        self.inflight = 0
        self.status.bytes_moved += n
        self.status.beats += 1
        self._maybe_done()

    def _maybe_done(self):
        if self.saw_last and not self.acc and not self.inflight:
            st = self.status
            st.state = DmaState.DONE
            st.end_edge = self.e.edges
            self.e._finished(self)

    def step(self):
        if self.setup:
            self.setup -= 1
            if not self.setup:
                self.src.set_ready(True)
            return
        src = self.src
        if not self.saw_last and src.valid and src.ready:
            beat = src.data
            data = beat.payload()
            self.received += len(data)
            room = self.limit - self.addr - len(self.acc) - self.inflight
            if len(data) > room:
                data = data[:max(room, 0)]
                self.status.overflow = True
            self.acc += data
            if beat.last:
                self.saw_last = True
                self._maybe_done()
        ready = not self.saw_last and len(self.acc) <= self.e.bus_width
        if ready is not src._ready_next:
            src.set_ready(ready)


class IDma:
    """Two-direction DMA engine ticking in the system domain.

    Parameters
    ----------
    memory : Memory
        Target memory; its read/write latencies set the data-phase pace.
    tx_sink :
        Write side of the outgoing stream (anything with ``can_push``/``push``).
    rx_source :
        Read side of the incoming stream (``valid``/``data``/``ready``/``set_ready``).
    setup_cycles : int
        Cycles between request acceptance and the first memory beat.
    """

    __slots__ = (
        "_port_busy", "_port_op", "_port_owner", "_rr", "_start", "bus_width", "data_beats",
        "edges", "kernel", "max_burst_beats", "memory", "name", "on_done", "port_conflicts",
        "rx", "setup_cycles", "tx",
    )

    def __init__(self, name, memory, tx_sink=None, rx_source=None, bus_width=8,
                 max_burst_beats=MAX_BURST_BEATS, setup_cycles=4, kernel=None):
        self.name = name
        self.memory = memory
        self.kernel = kernel
        self.bus_width = bus_width
        self.max_burst_beats = max_burst_beats
        self.setup_cycles = setup_cycles
        self.edges = 0
        self.tx = _ReadBackend(self, tx_sink)
        self.rx = _WriteBackend(self, rx_source)
        self._port_busy = 0
        self._port_owner = None
        self._port_op = None
        self._rr = 0
        self._start = []
        self.on_done = None  # callback(status)
        self.data_beats = 0
        self.port_conflicts = 0

    def submit(self, req):
        """Queue a request; it is accepted on the next system edge."""
        backend = self.tx if req.direction is Direction.MEM_TO_STREAM else self.rx
        if backend.active:
            raise ConfigurationError(f"{self.name}: {req.direction.value} channel busy")
        if not self.memory.contains(req.mem_addr, req.length):
            raise BusFault(req.mem_addr, "DMA request outside memory")
        self._start.append((backend, req))

    def cancel(self, direction):
        """Abandon the transfer running in ``direction`` (no completion callback)."""
        backend = self.tx if direction is Direction.MEM_TO_STREAM else self.rx
        self._start = [(b, r) for b, r in self._start if b is not backend]
        if not backend.active:
            return
        backend.active = False
        backend.status.state = DmaState.ERROR
        backend.status.error = "cancelled"
        backend.status.end_edge = self.edges
        if self._port_owner is backend:
            self._port_busy = 0
            self._port_op = None
            self._port_owner = None
        if backend is self.rx:
            self.rx.src.set_ready(False)
        self._trace("cancel", direction.value)

    def tick(self):
        self.edges += 1
        if self._start:
            for backend, req in self._start:
                backend.start(req)
                self._trace("start", f"{req.direction.value} {req.mem_addr:#x}+{req.length}")
            self._start.clear()
        tx, rx = self.tx, self.rx
        busy = self._port_busy
        if busy:
            # memory port: finish the beat in flight
            busy -= 1
            self._port_busy = busy
            if not busy:
                self._complete_port()
        elif not (tx.active or rx.active):
            return
        if tx.active:
            tx.step()
        if rx.active:
            rx.step()
        if not self._port_busy:
            self._issue()

    def _issue(self):
        tx_w = self.tx.active and self.tx.wants_port()
        rx_w = self.rx.active and self.rx.wants_port()
        if tx_w and rx_w:
            self.port_conflicts += 1
            pick = self.tx if self._rr == 0 else self.rx
            self._rr ^= 1
        elif tx_w:
            pick = self.tx
        elif rx_w:
            pick = self.rx
        else:
            return
        mem = self.memory
        try:
            if pick is self.tx:
                addr, n = pick.next_chunk()
                self._port_op = (pick, mem.read(addr, n))
                self._port_busy = mem.read_latency
            else:
                addr, data = pick.next_chunk()
                mem.write(addr, data)  # data becomes visible to later readers only
                self._port_op = (pick, len(data))
                self._port_busy = mem.write_latency
        except BusFault as exc:
            st = pick.status
            st.state = DmaState.ERROR
            st.error = str(exc)
            st.end_edge = self.edges
            self._finished(pick)
            return
        self._port_owner = pick
        self.data_beats += 1

    def _complete_port(self):
        owner, payload = self._port_op
        self._port_op = None
        self._port_owner = None
        if owner is self.tx:
            owner.deliver(payload)
        else:
            owner.written(payload)

    def _finished(self, backend):
        backend.active = False
        self._trace("done", f"{backend.status.direction.value} {backend.status.bytes_moved}")
        if self.on_done is not None:
            self.on_done(backend.status)

    def _trace(self, event, value=""):
        k = self.kernel
        if k is not None and k.tracing:
            k.trace(self.name, event, value)
