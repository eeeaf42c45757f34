"""Full controller compositions with phase instrumentation.

``BufferlessController``: AXI memory -> DMA -> CDC FIFO -> down-sizer -> MAC TX,
and MAC RX -> up-sizer -> CDC FIFO -> DMA -> memory. Only the CDC FIFOs hold
data in flight.

``BufferedBaseline``: the CPU copies each frame through a memory-mapped
window into a 1536-byte dual-port TX buffer (RX mirrored), and the MAC
transmits only once the whole frame is resident.

A transaction is split into four contiguous phases, counted in system
cycles from the edge before the first driver access:

* config  - up to the edge of the final start/arm register write
* preamble - up to the SFD octet
* payload - up to the last payload/pad octet
* crc     - up to the last FCS octet (TX) or until the host sees the frame
  delivered in memory (RX)
"""

from dataclasses import asdict, dataclass, field

from .axis import (
    OCTET_BEATS, OCTET_LAST_BEATS, CdcFifo, Channel, Downsizer, EventSync, Upsizer,
)
from .errors import ConfigurationError, SimulationError, SimulationTimeout
from .frame import FCS_LEN, HEADER_LEN, MIN_PAYLOAD, EthernetFrame, MacAddress
from .idma import MAX_BURST_BEATS, Direction, DmaState, IDma, TransferRequest
from .kernel import ClockDomain, ETH_DOMAIN, Kernel, ceil_div
from .mac import MacRx, MacTx, Wire, WireSource
from .soc import (
    CTRL_BASE, IRQ_EN, IRQ_RX_DONE, IRQ_STATUS, MEM_BASE, RX_BUF_LEN, RX_DONE, RX_DST_HI,
    RX_DST_LO, RX_FCS_ERR, RX_LEN_SHIFT, RX_OVERFLOW, RX_STATUS, RX_WINDOW, TX_LEN, TX_SRC_HI,
    TX_SRC_LO, TX_START, TX_WINDOW, WINDOW_SIZE, Bus, HostCpu, Mark, Memory, Read, RegisterFile,
    SubordinatePort, WaitIrq, Write, copy_words,
)

BASELINE_BUFFER_BYTES = WINDOW_SIZE

DEFAULT_DST = MacAddress(bytes.fromhex("020000000002"))
DEFAULT_SRC = MacAddress(bytes.fromhex("020000000001"))
DEFAULT_ETHERTYPE = 0x88B5

TX_FRAME_ADDR = MEM_BASE + 0x1_0000
RX_FRAME_ADDR = MEM_BASE + 0x2_0000


@dataclass(frozen=True)
class ControllerConfig:
    """Calibration and sizing knobs shared by both designs."""

    sys_clk_mhz: float = 50
    bus_width: int = 8
    cdc_depth: int = 32
    sync_stages: int = 2
    threshold: int = 16
    cpu_copy_overhead: int = 4
    dma_setup_cycles: int = 4
    max_burst_beats: int = MAX_BURST_BEATS
    mem_read_latency: int = 1
    mem_write_latency: int = 1
    mem_size: int = 1 << 20
    copy_as_payload_phase: bool = False

    def __post_init__(self):
        if self.threshold < 1:
            raise ConfigurationError("cut-through threshold must be >= 1 byte")
        if self.cpu_copy_overhead < 0 or self.dma_setup_cycles < 0:
            raise ConfigurationError("cycle overheads must be non-negative")
        # period validation
        ClockDomain.from_mhz("sys", self.sys_clk_mhz)

    def sys_domain(self):
        return ClockDomain.from_mhz("sys", self.sys_clk_mhz)


@dataclass(frozen=True)
class PhaseLatencies:
    config_cycles: int
    preamble_cycles: int
    payload_cycles: int
    crc_cycles: int

    @property
    def total_cycles(self):
        return self.config_cycles + self.preamble_cycles + self.payload_cycles + self.crc_cycles

    def as_dict(self):
        d = asdict(self)
        d["total_cycles"] = self.total_cycles
        return d

    PHASES = ("config", "preamble", "payload", "crc")

    def items(self):
        return zip(self.PHASES, (self.config_cycles, self.preamble_cycles,
                                 self.payload_cycles, self.crc_cycles))


def savings(buffered, bufferless):
    """Percentage of buffered total cycles saved by the bufferless design."""
    if buffered.total_cycles <= 0:
        raise ValueError("buffered total must be positive")
    return 100.0 * (buffered.total_cycles - bufferless.total_cycles) / buffered.total_cycles


# -- errors -------------------------------------------------------------------


class TxError(SimulationError):
    pass


class BufferOverflow(TxError):
    def __init__(self, frame_octets, capacity=BASELINE_BUFFER_BYTES):
        super().__init__(f"frame of {frame_octets} octets exceeds the {capacity}-byte buffer")
        self.frame_octets = frame_octets
        self.capacity = capacity


class Underrun(TxError):
    def __init__(self, phases, underruns):
        super().__init__(f"TX underrun ({underruns} event(s)); frame aborted with bad FCS")
        self.phases = phases
        self.underruns = underruns


class RxError(SimulationError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class RxOverflow(RxError):
    pass


class FcsError(RxError):
    pass


@dataclass
class RxResult:
    phases: PhaseLatencies
    data: bytes
    length: int
    fcs_ok: bool
    overflow: bool
    status: int = 0


@dataclass
class _TxRecord:
    report: object = None
    copy_end: int = None


@dataclass
class _Timeline:
    t0: int
    period: int
    marks: dict = field(default_factory=dict)

    def cycles(self, t):
        return ceil_div(t - self.t0, self.period)


def frame_octets(payload_len):
    """Header + padded payload + FCS: what the baseline buffer must hold."""
    return HEADER_LEN + max(payload_len, MIN_PAYLOAD) + FCS_LEN


# -- shared plumbing ----------------------------------------------------------


class _ControllerBase:
    name = "ctrl"

    def __init__(self, config=None, kernel=None, sys_domain=None, eth_domain=ETH_DOMAIN,
                 memory=None, name=None, external_phy=True):
        self.cfg = cfg = config or ControllerConfig()
        if name is not None:
            self.name = name
        self.kernel = kernel if kernel is not None else Kernel()
        self.sys = sys_domain or cfg.sys_domain()
        self.eth = eth_domain
        if self.eth.period_ps != 8000:
            raise ConfigurationError("the Ethernet domain must run at 125 MHz")
        self.memory = memory or Memory(cfg.mem_size, MEM_BASE, cfg.mem_read_latency,
                                       cfg.mem_write_latency, cfg.bus_width)
        k = self.kernel
        k.add_domain(self.sys)
        k.add_domain(self.eth)
        n = self.name
        self.regs = RegisterFile(f"{n}.regs", k)
        self.port = SubordinatePort(self.regs, cfg.cpu_copy_overhead, self._windows())
        self.bus = Bus(cfg.bus_width)
        self.bus.map(self.memory.base, self.memory.size, self.memory)
        self.bus.map(CTRL_BASE, 0x2000, self.port)
        self.cpu = HostCpu(f"{n}.cpu", self.bus, k, irq=self.regs)
        k.register(self.cpu, self.sys)
        self.tx_wire = Wire(f"{n}.txd", k)
        self.rx_wire = Wire(f"{n}.rxd", k)
        # without an external PHY the receiver only hears what loopback()/connect() wire up
        self.phy = WireSource(f"{n}.phy", self.rx_wire) if external_phy else None
        self.tx_done = EventSync(k, self.sys, cfg.sync_stages)
        self.rx_reports = EventSync(k, self.sys, cfg.sync_stages)
        self._tx = None
        self._tx_report_pending = None
        self._rx_armed = False
        self._build()
        k.register(self, self.sys)  # status logic commits last in the system domain
        k.register(self.tx_wire, self.eth)
        if self.phy is not None:
            k.register(self.phy, self.eth)
            k.register(self.rx_wire, self.eth)
        self.regs.on_tx_start = self._on_tx_start
        self.regs.on_rx_arm = self._on_rx_arm
        self.mac_tx.on_done = self.tx_done.post
        self.mac_rx.on_report = self.rx_reports.post
        self.mac_rx.accept = lambda: self._rx_armed

    def _windows(self):
        return {}

    def _reg(self, offset):
        return CTRL_BASE + offset

    # -- wiring ----------------------------------------------------------------

    def loopback(self):
        """Feed this controller's TX line into its own receiver."""
        self.mac_rx.wire = self.tx_wire

    def connect(self, peer):
        """Feed this controller's TX line into ``peer``'s receiver."""
        peer.mac_rx.wire = self.tx_wire

    def _run(self, predicate, timeout_ps, what):
        k = self.kernel
        outcome = k.run_until(predicate, k.now + timeout_ps, self.sys)
        if outcome.value == "timed_out":
            raise SimulationTimeout(f"{self.name}: {what} did not finish within {timeout_ps} ps")

    def _timeline(self):
        k = self.kernel
        t0 = self.sys.edge_time(k.edge_count(self.sys))
        return _Timeline(t0, self.sys.period_ps)

    # -- driver scripts --------------------------------------------------------

    def tx_config_script(self, addr, length):
        raise NotImplementedError

    def rx_arm_script(self, dst, buf_len):
        raise NotImplementedError

    def rx_collect_script(self, dst, buf_len, wait_irq=False):
        """Wait for a frame report, then latch RX_STATUS.

        By default RX_STATUS is polled back to back; with ``wait_irq`` the CPU
        sleeps on the RX interrupt (which the caller must have enabled).
        """
        if wait_irq:
            yield WaitIrq(IRQ_RX_DONE)
        while True:
            status = yield Read(self._reg(RX_STATUS))
            if status & RX_DONE:
                break
        yield Mark("rx_seen")
        self._rx_status = status

    # -- transactions ----------------------------------------------------------

    def frame_for(self, payload, dst=DEFAULT_DST, src=DEFAULT_SRC, ethertype=DEFAULT_ETHERTYPE):
        return EthernetFrame(dst, src, ethertype, bytes(payload))

    def check_tx(self, body_len):
        """Raise before any activity if the frame cannot be sent."""

    def tx_transaction(self, payload, dst=DEFAULT_DST, src=DEFAULT_SRC,
                       ethertype=DEFAULT_ETHERTYPE, addr=TX_FRAME_ADDR, timeout_ps=10**9):
        """Send one frame and return its :class:`PhaseLatencies`."""
        body = self.frame_for(payload, dst, src, ethertype).body()
        self.check_tx(len(body))
        if self.regs.tx_busy or self.cpu.busy:
            self._run(lambda _k: not self.regs.tx_busy and not self.cpu.busy, timeout_ps, "idle")
        self.memory.write(addr, body)
        tl = self._timeline()
        self._tx = _TxRecord()
        self.cpu.run(self.tx_config_script(addr, len(body)))
        self._run(lambda _k: self._tx.report is not None, timeout_ps, "transmission")
        rep = self._tx.report
        tl.marks.update(self.cpu.marks)
        phases = self._tx_phases(tl, rep)
        self._run(lambda _k: not self.regs.tx_busy, timeout_ps, "TX status update")
        if not rep.ok:
            raise Underrun(phases, self.mac_tx.underruns)
        return phases

    def _tx_phases(self, tl, rep):
        c_cfg = tl.cycles(tl.marks["config_end"])
        c_sfd = tl.cycles(rep.sfd_time)
        c_pay = tl.cycles(rep.payload_end_time)
        c_end = tl.cycles(rep.fcs_end_time)
        config, preamble, payload, crc = c_cfg, c_sfd - c_cfg, c_pay - c_sfd, c_end - c_pay
        if self.cfg.copy_as_payload_phase and "copy_end" in tl.marks:
            copy = tl.cycles(tl.marks["copy_end"])
            config -= copy
            payload += copy
        return PhaseLatencies(config, preamble, payload, crc)

    def rx_transaction(self, octets, dst=RX_FRAME_ADDR, buf_len=2048, timeout_ps=10**9):
        """Receive one wire frame (preamble through FCS) into memory at ``dst``.

        Returns :class:`RxResult`; raises :class:`FcsError` or
        :class:`RxOverflow` (each carrying the result) on a flagged frame.
        """
        if self.cpu.busy:
            self._run(lambda _k: not self.cpu.busy, timeout_ps, "idle")
        tl = self._timeline()
        self.cpu.run(self._rx_script(dst, buf_len))
        self._run(lambda _k: "config_end" in self.cpu.marks, timeout_ps, "RX configuration")
        if octets is not None:
            if self.phy is None:
                raise ConfigurationError(f"{self.name}: built without an external PHY")
            self.phy.send(octets)
        self._rx_report = None
        self._run(lambda _k: not self.cpu.busy, timeout_ps, "reception")
        tl.marks.update(self.cpu.marks)
        return self._rx_result(tl, dst)

    def echo(self, payload, dst=RX_FRAME_ADDR, buf_len=2048, addr=TX_FRAME_ADDR,
             timeout_ps=10**9):
        """Send ``payload`` out of TX and receive it back on RX (needs :meth:`loopback`).

        Returns ``(bytes delivered at dst, fcs_ok)``. A transmit underrun
        that leaves only a runt on the wire gets no receive report; the
        receive is then cancelled and ``(b"", False)`` returned.
        """
        body = self.frame_for(payload).body()
        self.check_tx(len(body))
        self.memory.write(addr, body)

        def script():
            yield Write(self._reg(IRQ_EN), IRQ_RX_DONE)
            yield from self.rx_arm_script(dst, buf_len)
            yield from self.tx_config_script(addr, len(body))
            yield from self.rx_collect_script(dst, buf_len, wait_irq=True)
            yield Write(self._reg(RX_STATUS), RX_DONE)
            yield Write(self._reg(IRQ_STATUS), IRQ_RX_DONE)

        self._tx = _TxRecord()
        frames_before = self.mac_rx.frames
        self.cpu.run(script())

        def settled(_k):
            rep = self._tx.report
            if rep is None or self.regs.tx_busy:
                return False
            if not self.cpu.busy:
                return True
            # failed send and the receiver is back to hunting without a frame
            return (not rep.ok and self.mac_rx.frames == frames_before
                    and self.mac_rx.state == MacRx.HUNT)

        self._run(settled, timeout_ps, "loopback")
        if self.cpu.busy:
            self.cpu.abort()
            self._cancel_rx()
            return b"", False
        status = self._rx_status
        length = (status >> RX_LEN_SHIFT) & 0xFFFF
        data = self.memory.read(dst, min(length, self._rx_capacity()))
        return data, not status & RX_FCS_ERR and self._tx.report.ok

    def _rx_script(self, dst, buf_len):
        self.cpu.marks.clear()
        yield from self.rx_arm_script(dst, buf_len)
        yield Mark("config_end")
        yield from self.rx_collect_script(dst, buf_len)
        yield Mark("rx_end")
        # acknowledge outside the measured window so the next receive starts clean
        yield Write(self._reg(RX_STATUS), RX_DONE | RX_FCS_ERR | RX_OVERFLOW)

    def _rx_result(self, tl, dst):
        rep = self._rx_report
        status = self._rx_status
        length = (status >> RX_LEN_SHIFT) & 0xFFFF
        fcs_ok = not status & RX_FCS_ERR
        overflow = bool(status & RX_OVERFLOW)
        c_cfg = tl.cycles(tl.marks["config_end"])
        c_sfd = tl.cycles(rep.sfd_time)
        c_pay = tl.cycles(rep.payload_end_time)
        c_end = tl.cycles(tl.marks["rx_end"])
        config, preamble, payload, crc = c_cfg, c_sfd - c_cfg, c_pay - c_sfd, c_end - c_pay
        if self.cfg.copy_as_payload_phase and "copy_start" in tl.marks:
            copy = c_end - tl.cycles(tl.marks["copy_start"])
            crc -= copy
            payload += copy
        phases = PhaseLatencies(config, preamble, payload, crc)
        data = self.memory.read(dst, min(length, self._rx_capacity()))
        result = RxResult(phases, data, length, fcs_ok, overflow, status)
        if overflow:
            raise RxOverflow(f"{self.name}: {length}-byte frame overflowed the receive buffer",
                             result)
        if not fcs_ok:
            raise FcsError(f"{self.name}: FCS mismatch on received frame", result)
        return result

    # -- system-domain status logic (registered as a component) ----------------

    def commit(self):
        rep = self._tx_report_pending
        if rep is None and self.tx_done.pending:
            rep = self._tx_report_pending = self.tx_done.poll()
        if rep is not None and self._tx_source_idle():
            # after an underrun the MAC reports early; completion waits for the source
            self._tx_report_pending = None
            self.regs.tx_complete(rep.ok)
            if self._tx is not None:
                self._tx.report = rep
        self._rx_commit()

    def _tx_source_idle(self):
        return True

    def _cancel_rx(self):
        self._rx_armed = False
        self._rx_report_pending = None


# -- bufferless design --------------------------------------------------------


class BufferlessController(_ControllerBase):
    """DMA-driven controller with no packet buffers."""

    name = "bufferless"

    def _build(self):
        cfg, k, n = self.cfg, self.kernel, self.name
        w = cfg.bus_width
        self.tx_cdc = CdcFifo(f"{n}.tx_cdc", cfg.cdc_depth, cfg.sync_stages, k, track_bytes=True)
        self.rx_cdc = CdcFifo(f"{n}.rx_cdc", cfg.cdc_depth, cfg.sync_stages, k)
        self.dma = IDma(f"{n}.dma", self.memory, self.tx_cdc, self.rx_cdc.reader, w,
                        cfg.max_burst_beats, cfg.dma_setup_cycles, k)
        self.tx_ch = Channel(f"{n}.tx_axis", 1, k)
        self.rx_ch = Channel(f"{n}.rx_axis", 1, k)
        self.downsizer = Downsizer(f"{n}.downsizer", self.tx_cdc.reader, self.tx_ch, w, 1)
        self.upsizer = Upsizer(f"{n}.upsizer", self.rx_ch, self.rx_cdc, 1, w)
        self.mac_tx = MacTx(f"{n}.mac_tx", self.tx_ch, self.tx_wire, self._tx_gate, k)
        self.mac_rx = MacRx(f"{n}.mac_rx", self.rx_wire, self.rx_ch, k, self.eth.period_ps)
        self.dma.on_done = self._dma_done
        self._rx_dma = None
        self._rx_report_pending = None
        k.register(self.dma, self.sys)
        self.tx_cdc.bind(k, self.sys, self.eth)
        self.rx_cdc.bind(k, self.eth, self.sys)
        for c in (self.downsizer, self.tx_ch, self.mac_tx, self.mac_rx, self.rx_ch,
                  self.upsizer):
            k.register(c, self.eth)

    def _tx_gate(self):
        rd = self.tx_cdc.reader
        ch = self.tx_ch
        level = rd.visible_bytes + self.downsizer.level + (1 if ch.valid else 0)
        if level >= self.cfg.threshold:
            return True
        return level > 0 and (rd.visible_lasts > 0 or self.downsizer.holds_last > 0
                              or (ch.valid and ch.data.last))

    @property
    def in_flight_capacity(self):
        """Upper bound on bytes the TX path can hold (CDC entries x width + sizer)."""
        return self.cfg.cdc_depth * self.cfg.bus_width + 2 * self.cfg.bus_width + 1

    def tx_config_script(self, addr, length):
        self.cpu.marks.clear()
        yield Write(self._reg(TX_SRC_LO), addr & 0xFFFFFFFF)
        yield Write(self._reg(TX_SRC_HI), addr >> 32)
        yield Write(self._reg(TX_LEN), length)
        yield Write(self._reg(TX_START), 1)
        yield Mark("config_end")

    def rx_arm_script(self, dst, buf_len):
        yield Write(self._reg(RX_DST_LO), dst & 0xFFFFFFFF)
        yield Write(self._reg(RX_DST_HI), dst >> 32)
        yield Write(self._reg(RX_BUF_LEN), buf_len)

    def _tx_source_idle(self):
        return not self.dma.tx.active

    def _cancel_rx(self):
        super()._cancel_rx()
        self._rx_dma = None
        self.dma.cancel(Direction.STREAM_TO_MEM)

    def _on_tx_start(self):
        regs = self.regs
        if regs.tx_len < 1:
            regs.tx_complete(ok=False)
            return
        self.dma.submit(TransferRequest(Direction.MEM_TO_STREAM, regs.tx_src, regs.tx_len))

    def _on_rx_arm(self):
        regs = self.regs
        self._rx_armed = True
        self._rx_dma = None
        self._rx_report_pending = None
        self.dma.submit(TransferRequest(Direction.STREAM_TO_MEM, regs.rx_dst, regs.rx_buf_len))

    def _dma_done(self, status):
        if status.direction is Direction.STREAM_TO_MEM:
            self._rx_dma = status
        elif status.state is DmaState.ERROR:
            self.kernel.trace(self.name, "dma_error", status.error)

    def _rx_capacity(self):
        return self.regs.rx_buf_len

    def _rx_commit(self):
        rep = self._rx_report_pending
        if rep is None:
            if not self._rx_armed or not self.rx_reports.pending:
                return
            rep = self._rx_report_pending = self.rx_reports.poll()
        dma = self._rx_dma
        if rep is not None and dma is not None:
            self._rx_armed = False
            self._rx_dma = None
            self._rx_report_pending = None
            self._rx_report = rep
            self.regs.rx_complete(rep.length, rep.fcs_ok, dma.overflow)


# -- buffered baseline --------------------------------------------------------


class _BufferReader:
    """MAC-side port of the TX buffer: streams a resident frame byte by byte."""

    def __init__(self, name, buf, dst):
        self.name = name
        self.buf = buf
        self.dst = dst
        self.remaining = 0
        self.pos = 0
        self.start = None

    def load(self, length):
        self.pos = 0
        self.remaining = length

    def tick(self):
        if self.remaining and self.dst.can_push():
            self.remaining -= 1
            beats = OCTET_BEATS if self.remaining else OCTET_LAST_BEATS
            self.dst.push(beats[self.buf[self.pos]])
            self.pos += 1


class _BufferWriter:
    """MAC-side port of the RX buffer."""

    def __init__(self, name, buf, src):
        self.name = name
        self.buf = buf
        self.src = src
        self.pos = 0
        self.overflow = False
        self.frames = []
        src.set_ready(True)
        src.ready = True

    def tick(self):
        src = self.src
        if src.valid and src.ready:
            beat = src.data
            if self.pos < len(self.buf):
                self.buf[self.pos] = beat.data[0]
            else:
                self.overflow = True
            self.pos += 1
            if beat.last:
                self.frames.append((self.pos, self.overflow))
                self.pos = 0
                self.overflow = False


class BufferedBaseline(_ControllerBase):
    """Store-and-forward controller with 1536-byte TX and RX buffers."""

    name = "buffered"

    def _windows(self):
        self.tx_buf = bytearray(BASELINE_BUFFER_BYTES)
        self.rx_buf = bytearray(BASELINE_BUFFER_BYTES)
        return {TX_WINDOW: self.tx_buf, RX_WINDOW: self.rx_buf}

    def _build(self):
        k, n = self.kernel, self.name
        self.tx_ch = Channel(f"{n}.tx_axis", 1, k)
        self.rx_ch = Channel(f"{n}.rx_axis", 1, k)
        self.reader = _BufferReader(f"{n}.tx_buf", self.tx_buf, self.tx_ch)
        self.writer = _BufferWriter(f"{n}.rx_buf", self.rx_buf, self.rx_ch)
        self.mac_tx = MacTx(f"{n}.mac_tx", self.tx_ch, self.tx_wire, self._tx_gate, k)
        self.mac_rx = MacRx(f"{n}.mac_rx", self.rx_wire, self.rx_ch, k, self.eth.period_ps)
        self.tx_go = EventSync(k, self.eth, self.cfg.sync_stages)
        self._starter = _EthStarter(self)
        for c in (self._starter, self.reader, self.tx_ch, self.mac_tx, self.mac_rx, self.rx_ch,
                  self.writer):
            k.register(c, self.eth)

    def _tx_gate(self):
        # store-and-forward: the whole frame sits in the buffer before the start request
        return self.reader.remaining > 0 or self.tx_ch.valid

    def check_tx(self, body_len):
        octets = HEADER_LEN + max(body_len - HEADER_LEN, MIN_PAYLOAD) + FCS_LEN
        if octets > BASELINE_BUFFER_BYTES:
            raise BufferOverflow(octets)

    def tx_config_script(self, addr, length):
        self.cpu.marks.clear()
        yield from copy_words(addr, self._reg(TX_WINDOW), length, self.cfg.bus_width)
        yield Mark("copy_end")
        yield Write(self._reg(TX_LEN), length)
        yield Write(self._reg(TX_START), 1)
        yield Mark("config_end")

    def rx_arm_script(self, dst, buf_len):
        yield Write(self._reg(RX_BUF_LEN), buf_len)

    def rx_collect_script(self, dst, buf_len, wait_irq=False):
        yield from super().rx_collect_script(dst, buf_len, wait_irq)
        length = (self._rx_status >> RX_LEN_SHIFT) & 0xFFFF
        n = min(length, buf_len, BASELINE_BUFFER_BYTES)
        yield Mark("copy_start")
        yield from copy_words(self._reg(RX_WINDOW), dst, n, self.cfg.bus_width)

    def _on_tx_start(self):
        length = self.regs.tx_len
        if not 0 < length <= BASELINE_BUFFER_BYTES - FCS_LEN:
            self.regs.tx_complete(ok=False)
            return
        self.tx_go.post(length)

    def _on_rx_arm(self):
        self._rx_armed = True

    def _rx_capacity(self):
        return min(self.regs.rx_buf_len, BASELINE_BUFFER_BYTES)

    def _rx_commit(self):
        rep = self.rx_reports.poll()
        if rep is None:
            return
        length, hw_overflow = self.writer.frames.pop(0)
        self._rx_armed = False
        self._rx_report = rep
        overflow = hw_overflow or length + FCS_LEN > BASELINE_BUFFER_BYTES \
            or length > self.regs.rx_buf_len
        self.regs.rx_complete(rep.length, rep.fcs_ok, overflow)


class _EthStarter:
    """Ethernet-domain side of the baseline's synchronized TX start pulse."""

    def __init__(self, ctrl):
        self.name = ctrl.name + ".tx_go"
        self.ctrl = ctrl

    def tick(self):
        length = self.ctrl.tx_go.poll()
        if length is not None:
            self.ctrl.reader.load(length)


DESIGNS = {"bufferless": BufferlessController, "buffered": BufferedBaseline}


def build(design, config=None, **kwargs):
    try:
        cls = DESIGNS[design]
    except KeyError:
        raise ConfigurationError(f"unknown design {design!r}") from None
    return cls(config, **kwargs)
