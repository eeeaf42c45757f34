"""System-side resources: memory, a memory-mapped bus, the controller register
file, and a host CPU that executes driver scripts one bus access at a time."""

from dataclasses import dataclass

from .errors import BusFault, ConfigurationError

# -- register map (byte offsets on the controller's subordinate port) --------

MAC_LO = 0x00
MAC_HI = 0x04
TX_SRC_LO = 0x08
TX_SRC_HI = 0x0C
TX_LEN = 0x10
TX_START = 0x14
RX_DST_LO = 0x18
RX_DST_HI = 0x1C
RX_BUF_LEN = 0x20
RX_STATUS = 0x24
IRQ_EN = 0x28
IRQ_STATUS = 0x2C
REG_SPAN = 0x30

RX_DONE = 1 << 0
RX_FCS_ERR = 1 << 1
RX_OVERFLOW = 1 << 2
RX_LEN_SHIFT = 16

IRQ_TX_DONE = 1 << 0
IRQ_RX_DONE = 1 << 1
IRQ_RX_ERR = 1 << 2
IRQ_TX_ERR = 1 << 3
IRQ_MASK = 0xF

# buffered baseline packet windows
TX_WINDOW = 0x1000
RX_WINDOW = 0x1800
WINDOW_SIZE = 1536

MEM_BASE = 0x8000_0000
CTRL_BASE = 0x0300_0000


@dataclass(frozen=True)
class BusTransaction:
    kind: str  # "read" | "write"
    address: int
    width: int = 4
    data: int = 0

    def __post_init__(self):
        if self.kind not in ("read", "write"):
            raise ValueError(f"bad transaction kind {self.kind!r}")
        if self.width not in (1, 2, 4, 8):
            raise ValueError(f"bad access width {self.width}")


def _check_aligned(address, width):
    if address % width:
        raise BusFault(address, f"misaligned {width}-byte access")


class Memory:
    """Byte-addressable single-port memory.

    Latencies are in system cycles per bus beat, so an ``n``-beat burst costs
    exactly ``n * latency`` cycles of data phase.
    """

    def __init__(self, size_bytes, base=MEM_BASE, read_latency=1, write_latency=1, bus_width=8):
        if read_latency < 1 or write_latency < 1:
            raise ConfigurationError("memory latencies must be >= 1 cycle")
        self.base = base
        self.size = size_bytes
        self.bus_width = bus_width
        self.read_latency = read_latency
        self.write_latency = write_latency
        self.contents = bytearray(size_bytes)

    def _offset(self, addr, n):
        off = addr - self.base
        if off < 0 or n < 0 or off + n > self.size:
            raise BusFault(addr, f"{n}-byte access outside memory")
        return off

    def contains(self, addr, n=1):
        off = addr - self.base
        return 0 <= off and off + n <= self.size

    def read(self, addr, n):
        off = self._offset(addr, n)
        return bytes(self.contents[off:off + n])

    def write(self, addr, data):
        off = self._offset(addr, len(data))
        self.contents[off:off + len(data)] = data

    mem_read = read
    mem_write = write

    def beats(self, addr, n):
        w = self.bus_width
        return (addr + n - 1) // w - addr // w + 1 if n else 0

    def burst_cycles(self, addr, n, write=False):
        """Data-phase cycles for an access of ``n`` bytes at ``addr``."""
        lat = self.write_latency if write else self.read_latency
        return self.beats(addr, n) * lat

    # bus target interface
    def bus_read(self, offset, width):
        return int.from_bytes(self.read(self.base + offset, width), "little")

    def bus_write(self, offset, width, value):
        self.write(self.base + offset, value.to_bytes(width, "little"))

    def access_cost(self, kind, offset, width):
        return self.read_latency if kind == "read" else self.write_latency


class Bus:
    """Address decoder routing CPU accesses to memory or controller ports."""

    def __init__(self, width=8):
        self.width = width
        self._regions = []

    def map(self, base, size, target):
        for b, s, _ in self._regions:
            if base < b + s and b < base + size:
                raise ConfigurationError(f"region at {base:#x} overlaps {b:#x}")
        self._regions.append((base, size, target))
        self._regions.sort(key=lambda r: r[0])

    def decode(self, address, width):
        if width > self.width:
            raise BusFault(address, f"{width}-byte access wider than the bus")
        _check_aligned(address, width)
        for base, size, target in self._regions:
            if base <= address and address + width <= base + size:
                return target, address - base
        raise BusFault(address)

    def access(self, txn):
        target, off = self.decode(txn.address, txn.width)
        if txn.kind == "read":
            return target.bus_read(off, txn.width)
        target.bus_write(off, txn.width, txn.data)
        return None

    def cost(self, kind, address, width):
        target, off = self.decode(address, width)
        return target.access_cost(kind, off, width)


_REG_READERS = {
    MAC_LO: lambda r: r.mac_lo,
    MAC_HI: lambda r: r.mac_hi,
    TX_SRC_LO: lambda r: r.tx_src & 0xFFFFFFFF,
    TX_SRC_HI: lambda r: r.tx_src >> 32,
    TX_LEN: lambda r: r.tx_len,
    TX_START: lambda r: int(r.tx_busy),
    RX_DST_LO: lambda r: r.rx_dst & 0xFFFFFFFF,
    RX_DST_HI: lambda r: r.rx_dst >> 32,
    RX_BUF_LEN: lambda r: r.rx_buf_len,
    RX_STATUS: lambda r: r.rx_status,
    IRQ_EN: lambda r: r.irq_en,
    IRQ_STATUS: lambda r: r.irq_status,
}


class RegisterFile:
    """32-bit configuration and status registers.

    Side effects are delivered through optional hooks set by the owning
    controller: ``on_tx_start()``, ``on_rx_arm()``.
    """

    RESERVED_MASKS = {MAC_HI: 0xFFFF, IRQ_EN: IRQ_MASK}

    def __init__(self, name="regs", kernel=None):
        self.name = name
        self.kernel = kernel
        self.mac_lo = 0
        self.mac_hi = 0
        self.tx_src = 0
        self.tx_len = 0
        self.tx_busy = False
        self.rx_dst = 0
        self.rx_buf_len = 0
        self.rx_status = 0
        self.irq_en = 0
        self.irq_status = 0
        self.warnings = []
        self.on_tx_start = None
        self.on_rx_arm = None

    # -- host side ----------------------------------------------------------

    def read(self, offset):
        if offset % 4:
            raise BusFault(offset, "misaligned register access")
        if offset >= REG_SPAN:
            raise BusFault(offset)
        getter = _REG_READERS.get(offset)
        return 0 if getter is None else getter(self)

    def write(self, offset, value):
        if offset % 4:
            raise BusFault(offset, "misaligned register access")
        if offset >= REG_SPAN:
            raise BusFault(offset)
        value &= 0xFFFFFFFF
        if offset == MAC_LO:
            self.mac_lo = value
        elif offset == MAC_HI:
            self.mac_hi = value & 0xFFFF
        elif offset in (TX_SRC_LO, TX_SRC_HI, TX_LEN):
            if self.tx_busy:
                self._warn(f"write to {offset:#04x} ignored while a transmission is active")
            elif offset == TX_SRC_LO:
                self.tx_src = (self.tx_src & ~0xFFFFFFFF) | value
            elif offset == TX_SRC_HI:
                self.tx_src = (self.tx_src & 0xFFFFFFFF) | (value << 32)
            else:
                self.tx_len = value
        elif offset == TX_START:
            if value & 1:
                if self.tx_busy:
                    self._warn("TX_START while busy ignored")
                else:
                    self.tx_busy = True
                    if self.on_tx_start is not None:
                        self.on_tx_start()
        elif offset == RX_DST_LO:
            self.rx_dst = (self.rx_dst & ~0xFFFFFFFF) | value
        elif offset == RX_DST_HI:
            self.rx_dst = (self.rx_dst & 0xFFFFFFFF) | (value << 32)
        elif offset == RX_BUF_LEN:
            self.rx_buf_len = value
            if value and self.on_rx_arm is not None:
                self.on_rx_arm()
        elif offset == RX_STATUS:
            if value & RX_DONE:
                self.rx_status = 0
        elif offset == IRQ_EN:
            self.irq_en = value & IRQ_MASK
        elif offset == IRQ_STATUS:
            self.irq_status &= ~value
        # reserved offsets: writes ignored

    def reg_access(self, txn):
        """Apply a :class:`BusTransaction`; returns read data or None."""
        if txn.width != 4:
            raise BusFault(txn.address, "registers are 32-bit")
        if txn.kind == "read":
            return self.read(txn.address)
        self.write(txn.address, txn.data)
        return None

    def _warn(self, message):
        self.warnings.append(message)
        if self.kernel is not None:
            self.kernel.trace(self.name, "warning", message)

    # -- hardware side ------------------------------------------------------

    @property
    def mac_address(self):
        return (self.mac_hi << 32) | self.mac_lo

    def raise_irq(self, bit):
        if self.irq_en & bit:
            self.irq_status |= bit

    def tx_complete(self, ok=True):
        self.tx_busy = False
        self.raise_irq(IRQ_TX_DONE if ok else IRQ_TX_ERR)

    def rx_complete(self, length, fcs_ok=True, overflow=False):
        status = RX_DONE | ((length & 0xFFFF) << RX_LEN_SHIFT)
        if not fcs_ok:
            status |= RX_FCS_ERR
        if overflow:
            status |= RX_OVERFLOW
        self.rx_status = status
        self.raise_irq(IRQ_RX_DONE)
        if not fcs_ok or overflow:
            self.raise_irq(IRQ_RX_ERR)


class SubordinatePort:
    """Controller's memory-mapped face: registers plus optional packet windows.

    A register access costs one cycle plus ``reg_latency``; a packet-window
    word costs one cycle plus ``overhead`` (the per-word copy penalty of
    pushing data through the controller's slave port).
    """

    def __init__(self, regs, overhead=1, windows=None, reg_latency=1):
        self.regs = regs
        self.overhead = overhead
        self.reg_latency = reg_latency
        self.windows = windows or {}  # offset -> bytearray

    def _window(self, offset, width):
        for base, buf in self.windows.items():
            if base <= offset and offset + width <= base + len(buf):
                return buf, offset - base
        return None, None

    def bus_read(self, offset, width):
        if offset < REG_SPAN:
            return self.regs.reg_access(BusTransaction("read", offset, width))
        buf, off = self._window(offset, width)
        if buf is None:
            raise BusFault(offset)
        return int.from_bytes(buf[off:off + width], "little")

    def bus_write(self, offset, width, value):
        if offset < REG_SPAN:
            self.regs.reg_access(BusTransaction("write", offset, width, value))
            return
        buf, off = self._window(offset, width)
        if buf is None:
            raise BusFault(offset)
        buf[off:off + width] = value.to_bytes(width, "little")

    def access_cost(self, kind, offset, width):
        if offset < REG_SPAN:
            return 1 + self.reg_latency
        return 1 + self.overhead


# -- host CPU ---------------------------------------------------------------


class Read:
    __slots__ = ("address", "width")

    def __init__(self, address, width=4):
        self.address = address
        self.width = width


class Write:
    __slots__ = ("address", "value", "width")

    def __init__(self, address, value, width=4):
        self.address = address
        self.value = value
        self.width = width


class WaitIrq:
    """Stall until ``irq_status & mask`` is set on the CPU's interrupt source."""

    __slots__ = ("mask",)

    def __init__(self, mask):
        self.mask = mask


class Mark:
    """Zero-cost op recording the current time under ``name``."""

    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name


class HostCpu:
    """In-order bus master driven by a generator script.

    The script yields :class:`Read`, :class:`Write`, :class:`WaitIrq` and
    :class:`Mark` ops; the result of a ``Read`` is sent back into the
    generator. An access occupies
    ``bus.cost(...)`` system cycles. Reads sample committed state on their
    final edge; writes take effect in that edge's commit phase.
    """

    __slots__ = (
        "_finished", "_gen", "_offset", "_op", "_remaining", "_result", "_target", "accesses",
        "bus", "irq", "kernel", "marks", "name",
    )

    def __init__(self, name, bus, kernel=None, irq=None):
        self.name = name
        self.bus = bus
        self.kernel = kernel
        self.irq = irq  # object with an ``irq_status`` word, for WaitIrq
        self.marks = {}
        self.accesses = 0
        self._gen = None
        self._op = None
        self._remaining = 0
        self._finished = None
        self._result = None
        self._target = None
        self._offset = 0

    @property
    def busy(self):
        return self._gen is not None

    def run(self, script):
        if self._gen is not None:
            raise ConfigurationError(f"{self.name}: previous script still running")
        self._gen = script
        self._next(None)

    def abort(self):
        """Drop the running script, including an access in flight."""
        self._gen = None
        self._op = None
        self._finished = None

    def tick(self):
        op = self._op
        if op is None:
            return
        if type(op) is WaitIrq:
            if self.irq.irq_status & op.mask:
                self._finished = op
            return
        self._remaining -= 1
        if self._remaining:
            return
        self._finished = op
        if type(op) is Read:
            self._result = self._target.bus_read(self._offset, op.width)

    def commit(self):
        op = self._finished
        if op is None:
            return
        self._finished = None
        result = None
        if type(op) is WaitIrq:
            self._next(None)
            return
        self.accesses += 1
        if type(op) is Write:
            self._target.bus_write(self._offset, op.width, op.value)
        else:
            result = self._result
        self._next(result)

    def _next(self, result):
        gen = self._gen
        while True:
            try:
                op = gen.send(result)
            except StopIteration:
                self._gen = None
                self._op = None
                return
            if type(op) is Mark:
                self.marks[op.name] = 0 if self.kernel is None else self.kernel.now
                result = None
                continue
            if type(op) is WaitIrq:
                if self.irq is None:
                    raise ConfigurationError(f"{self.name}: WaitIrq without an interrupt source")
                self._op = op
                return
            kind = "read" if type(op) is Read else "write"
            target, offset = self.bus.decode(op.address, op.width)
            self._op = op
            self._target, self._offset = target, offset
            self._remaining = target.access_cost(kind, offset, op.width)
            return


def copy_words(src, dst, nbytes, width=8):
    """Script fragment: word-by-word copy, each word a load then a store."""
    off = 0
    while off < nbytes:
        w = width
        while w > nbytes - off or (src + off) % w or (dst + off) % w:
            w //= 2
        value = yield Read(src + off, w)
        yield Write(dst + off, value, w)
        off += w
