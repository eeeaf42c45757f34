"""MAC transmit/receive engines over an RGMII-style wire.

RGMII moves a 4-bit nibble on each clock edge at 125 MHz, low nibble on the
rising edge. The model folds that into one octet per Ethernet-domain cycle;
:func:`nibble_split` and :func:`ddr_nibbles` give the per-edge view.
"""

from collections import deque
from dataclasses import dataclass

from .axis import OCTET_BEATS, OCTET_LAST_BEATS
from .frame import CRC_INIT, CRC_TABLE, HEADER_LEN, MIN_PAYLOAD, SFD

IPG_OCTETS = 12
PREAMBLE_OCTETS = 7
MIN_BODY = HEADER_LEN + MIN_PAYLOAD  # 60


def nibble_split(octet):
    """Return ``(rising-edge nibble, falling-edge nibble)`` for one octet."""
    return octet & 0xF, octet >> 4


def nibble_join(low, high):
    return (high << 4) | low


def ddr_nibbles(octets):
    """Flatten octets into the nibble sequence seen on TXD[3:0]."""
    out = []
    for b in octets:
        out.extend(nibble_split(b))
    return out


def ddr_octets(nibbles):
    if len(nibbles) % 2:
        raise ValueError("odd nibble count")
    return bytes(nibble_join(nibbles[i], nibbles[i + 1]) for i in range(0, len(nibbles), 2))


class Wire:
    """One-cycle line between a transmitter and a receiver.

    Whatever is driven during an edge is what the receiver samples on the
    next edge. ``None`` means idle (TX_EN low).
    """

    __slots__ = ("_next", "active_octets", "kernel", "name", "octet_log", "value")

    def __init__(self, name="wire", kernel=None):
        self.name = name
        self.kernel = kernel
        self.value = None
        self._next = None
        self.active_octets = 0
        self.octet_log = None  # set to a list to capture (time, octet)

    def drive(self, octet):
        self._next = octet

    def commit(self):
        v = self._next
        if v is None and self.value is None:
            return
        self._next = None
        if v is not None:
            self.active_octets += 1
            if self.octet_log is not None:
                self.octet_log.append(v)
            k = self.kernel
            if k is not None and k.tracing:
                k.trace(self.name, "octet", f"{v:02x}")
        elif self.value is not None:
            k = self.kernel
            if k is not None and k.tracing:
                k.trace(self.name, "idle", "")
        self.value = v


@dataclass
class TxReport:
    ok: bool
    octets: int
    start_time: int
    sfd_time: int
    payload_end_time: int
    fcs_end_time: int


class MacTx:
    """Transmit engine: preamble, SFD, data with padding, FCS, inter-packet gap.

    ``start_gate()`` is polled while idle; returning True begins a frame
    (cut-through start). Data bytes come from ``src``, a 1-byte channel. If
    the channel is empty mid-frame the frame is aborted with a complemented
    FCS so any receiver rejects it, and the rest of that packet is drained.
    """

    IDLE, PREAMBLE, DATA, PAD, FCS = range(5)

    __slots__ = (
        "_ok", "_start", "_times", "count", "crc", "fcs", "flushing", "frames", "gap", "ipg",
        "kernel", "name", "on_done", "src", "start_gate", "state", "underruns", "wire",
    )

    def __init__(self, name, src, wire, start_gate, kernel=None, ipg=IPG_OCTETS):
        self.name = name
        self.src = src
        self.wire = wire
        self.start_gate = start_gate
        self.kernel = kernel
        self.ipg = ipg
        self.state = self.IDLE
        self.gap = 0
        self.count = 0
        self.crc = CRC_INIT
        self.fcs = b""
        self.flushing = False
        self.underruns = 0
        self.frames = 0
        self.on_done = None  # callback(TxReport)
        self._ok = True
        self._times = [0, 0, 0]

    def _now(self):
        return self.kernel.now if self.kernel is not None else 0

    def tick(self):
        src = self.src
        st = self.state
        if self.flushing and src.valid and src.ready:
            if src.data.last:
                self.flushing = False
                if st != self.DATA:
                    src.set_ready(False)
        if st == self.DATA:
            if src.valid and src.ready:
                beat = src.data
                octet = beat.data[0]
                crc = self.crc
                self.crc = (crc >> 8) ^ CRC_TABLE[(crc ^ octet) & 0xFF]
                self.count += 1
                self.wire._next = octet
                if beat.last:
                    src.set_ready(False)
                    if self.count < MIN_BODY:
                        self.state = self.PAD
                    else:
                        self._enter_fcs(good=True)
            else:
                self._underrun()
        elif st == self.IDLE:
            if self.gap:
                self.gap -= 1
            elif not self.flushing and self.start_gate():
                self.state = self.PREAMBLE
                self.count = 1
                self._ok = True
                self._start = self._now()
                self.wire.drive(0x55)
        elif st == self.PREAMBLE:
            if self.count < PREAMBLE_OCTETS:
                self.count += 1
                self.wire.drive(0x55)
            else:
                self.wire.drive(SFD)
                self._times[0] = self._now()
                self.state = self.DATA
                self.count = 0
                self.crc = CRC_INIT
                src.set_ready(True)
        elif st == self.PAD:
            self.crc = (self.crc >> 8) ^ CRC_TABLE[self.crc & 0xFF]
            self.count += 1
            self.wire.drive(0)
            if self.count >= MIN_BODY:
                self._enter_fcs(good=True)
        else:  # FCS
            i = self.count
            self.wire.drive(self.fcs[i])
            self.count = i + 1
            if i == 3:
                self._times[2] = self._now()
                self.state = self.IDLE
                self.gap = self.ipg
                self.frames += 1
                if self.on_done is not None:
                    t = self._times
                    self.on_done(TxReport(self._ok, self.frames, self._start, t[0], t[1], t[2]))

    def _enter_fcs(self, good):
        self._times[1] = self._now()
        value = self.crc ^ 0xFFFFFFFF
        if not good:
            value ^= 0xFFFFFFFF
        self.fcs = value.to_bytes(4, "little")
        self.state = self.FCS
        self.count = 0

    def _underrun(self):
        self.underruns += 1
        self._ok = False
        self.flushing = True
        self.src.set_ready(True)
        self._enter_fcs(good=False)
        k = self.kernel
        if k is not None:
            k.trace(self.name, "underrun", self.count)
        # this cycle's octet is the first byte of the corrupt trailer
        self.wire.drive(self.fcs[0])
        self.count = 1


@dataclass
class FrameReport:
    length: int  # header + payload + pad octets delivered (FCS excluded)
    fcs_ok: bool
    sfd_time: int
    payload_end_time: int
    fcs_end_time: int


class MacRx:
    """Receive engine: hunts for preamble/SFD, forwards header+payload octets
    and checks the FCS when the line goes idle.

    Octets are held in a 5-deep delay line so the FCS is never forwarded and
    ``last`` lands on the final payload octet.
    """

    HUNT, PREAMBLE, DATA, DISCARD = range(4)

    __slots__ = (
        "_sfd_time", "accept", "backlog", "bad_preambles", "count", "crc", "delay", "dropped",
        "dst", "fcs_errors", "fragments", "frames", "kernel", "max_backlog", "name",
        "on_report", "period", "state", "wire",
    )

    def __init__(self, name, wire, dst, kernel=None, period_ps=8000):
        self.name = name
        self.wire = wire
        self.dst = dst
        self.kernel = kernel
        self.period = period_ps
        self.state = self.HUNT
        self.count = 0
        self.crc = CRC_INIT
        self.delay = deque()
        self.backlog = deque()
        self.max_backlog = 0
        self.frames = 0
        self.bad_preambles = 0
        self.fcs_errors = 0
        self.fragments = 0
        self.dropped = 0
        self.on_report = None  # callback(FrameReport)
        self.accept = None  # optional callable; False at SFD drops the frame
        self._sfd_time = 0

    def _now(self):
        return self.kernel.now if self.kernel is not None else 0

    def tick(self):
        v = self.wire.value
        st = self.state
        if st == self.DATA:
            if v is not None:
                d = self.delay
                d.append(v)
                if len(d) > 5:
                    octet = d.popleft()
                    crc = self.crc
                    self.crc = (crc >> 8) ^ CRC_TABLE[(crc ^ octet) & 0xFF]
                    self.count += 1
                    b = self.backlog
                    dst = self.dst
                    if not b and dst.can_push():
                        dst.push(OCTET_BEATS[octet])
                        return
                    b.append(OCTET_BEATS[octet])
            else:
                self._end_frame()
        elif st == self.HUNT:
            if v is not None:
                if v == 0x55:
                    self.state = self.PREAMBLE
                    self.count = 1
                else:
                    self._bad()
        elif st == self.PREAMBLE:
            if v == 0x55 and self.count < PREAMBLE_OCTETS:
                self.count += 1
            elif v == SFD and self.count == PREAMBLE_OCTETS:
                if self.accept is not None and not self.accept():
                    self.dropped += 1
                    self.state = self.DISCARD
                else:
                    self.state = self.DATA
                    self.crc = CRC_INIT
                    self.count = 0
                    self.delay.clear()
                    self._sfd_time = self._now()
            elif v is None:
                self.bad_preambles += 1
                self.state = self.HUNT
            else:
                self._bad()
        elif v is None:  # DISCARD
            self.state = self.HUNT
        b = self.backlog
        if b:
            dst = self.dst
            if dst.can_push():
                dst.push(b.popleft())
            elif len(b) > self.max_backlog:
                self.max_backlog = len(b)

    def _bad(self):
        self.bad_preambles += 1
        self.state = self.DISCARD
        k = self.kernel
        if k is not None:
            k.trace(self.name, "bad_preamble", "")

    def _forward(self, octet, last):
        self.crc = (self.crc >> 8) ^ CRC_TABLE[(self.crc ^ octet) & 0xFF]
        self.count += 1
        self.backlog.append(OCTET_LAST_BEATS[octet] if last else OCTET_BEATS[octet])
        if len(self.backlog) > self.max_backlog:
            self.max_backlog = len(self.backlog)

    def _end_frame(self):
        d = self.delay
        self.state = self.HUNT
        if len(d) < 5:
            self.fragments += 1
            d.clear()
            return
        self._forward(d.popleft(), True)
        received = d[0] | (d[1] << 8) | (d[2] << 16) | (d[3] << 24)
        d.clear()
        ok = (self.crc ^ 0xFFFFFFFF) == received
        self.frames += 1
        if not ok:
            self.fcs_errors += 1
        last_sample = self._now() - self.period  # this edge saw the line go idle
        report = FrameReport(self.count, ok, self._sfd_time,
                             last_sample - 4 * self.period, last_sample)
        k = self.kernel
        if k is not None and k.tracing:
            k.trace(self.name, "frame", f"len={self.count} fcs_ok={int(ok)}")
        if self.on_report is not None:
            self.on_report(report)


class WireSource:
    """Test-side PHY that plays raw octet sequences onto a wire with IPG."""

    def __init__(self, name, wire, ipg=IPG_OCTETS):
        self.name = name
        self.wire = wire
        self.ipg = ipg
        self._queue = deque()
        self._cur = None
        self._pos = 0
        self._gap = 0
        self.sent = 0

    def send(self, octets):
        self._queue.append(bytes(octets))

    @property
    def busy(self):
        return self._cur is not None or bool(self._queue)

    def tick(self):
        if self._cur is None:
            if self._gap:
                self._gap -= 1
                return
            if not self._queue:
                return
            self._cur = self._queue.popleft()
            self._pos = 0
        self.wire.drive(self._cur[self._pos])
        self._pos += 1
        if self._pos == len(self._cur):
            self._cur = None
            self._gap = self.ipg
            self.sent += 1
