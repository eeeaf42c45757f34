import pytest

from ethsim.errors import BusFault, ConfigurationError
from ethsim.kernel import SYS_DOMAIN, Kernel
from ethsim.soc import (
    CTRL_BASE, IRQ_EN, IRQ_RX_DONE, IRQ_RX_ERR, IRQ_STATUS, IRQ_TX_DONE, MAC_HI, MAC_LO,
    MEM_BASE, RX_BUF_LEN, RX_DONE, RX_FCS_ERR, RX_LEN_SHIFT, RX_STATUS, TX_LEN, TX_SRC_HI,
    TX_SRC_LO, TX_START, TX_WINDOW, Bus, HostCpu, Mark, Memory, Read, RegisterFile,
    SubordinatePort, WaitIrq, Write, copy_words,
)


def test_register_round_trip_and_reserved_bits():
    r = RegisterFile()
    r.write(MAC_LO, 0x1234_5678)
    r.write(MAC_HI, 0xFFFF_ABCD)
    assert r.read(MAC_HI) == 0xABCD
    assert r.mac_address == 0xABCD_1234_5678
    r.write(TX_SRC_LO, 0x8000_0000)
    r.write(TX_SRC_HI, 0x1)
    assert r.tx_src == 0x1_8000_0000


def test_register_faults():
    r = RegisterFile()
    with pytest.raises(BusFault):
        r.read(0x2)
    with pytest.raises(BusFault):
        r.write(0x100, 1)


def test_tx_start_and_busy_protection():
    r = RegisterFile()
    started = []
    r.on_tx_start = lambda: started.append(r.tx_len)
    r.write(TX_LEN, 100)
    r.write(TX_START, 1)
    assert started == [100] and r.read(TX_START) == 1
    r.write(TX_LEN, 5)  # ignored while busy
    r.write(TX_START, 1)
    assert r.tx_len == 100 and started == [100] and len(r.warnings) == 2
    r.tx_complete()
    assert r.read(TX_START) == 0


def test_rx_status_w1c_and_irq():
    r = RegisterFile()
    r.write(IRQ_EN, IRQ_RX_DONE | IRQ_RX_ERR)
    r.rx_complete(64, fcs_ok=False)
    st = r.read(RX_STATUS)
    assert st & RX_DONE and st & RX_FCS_ERR and st >> RX_LEN_SHIFT == 64
    assert r.irq_status == IRQ_RX_DONE | IRQ_RX_ERR
    r.write(RX_STATUS, 0)
    assert r.read(RX_STATUS) == st  # writing zero clears nothing
    r.write(RX_STATUS, RX_DONE)
    assert r.read(RX_STATUS) == 0
    r.write(IRQ_STATUS, IRQ_RX_DONE)
    assert r.irq_status == IRQ_RX_ERR
    r.tx_complete()
    assert not r.irq_status & IRQ_TX_DONE  # not enabled


def test_rx_arm_hook():
    r = RegisterFile()
    armed = []
    r.on_rx_arm = lambda: armed.append(r.rx_buf_len)
    r.write(RX_BUF_LEN, 0)
    r.write(RX_BUF_LEN, 2048)
    assert armed == [2048]


def test_memory_bounds_and_burst_cycles():
    m = Memory(4096, read_latency=2, write_latency=3)
    m.write(MEM_BASE + 10, b"abc")
    assert m.read(MEM_BASE + 10, 3) == b"abc"
    with pytest.raises(BusFault):
        m.read(MEM_BASE + 4095, 2)
    assert m.beats(MEM_BASE + 7, 2) == 2
    assert m.burst_cycles(MEM_BASE, 64) == 16
    assert m.burst_cycles(MEM_BASE, 64, write=True) == 24
    with pytest.raises(ConfigurationError):
        Memory(16, read_latency=0)


def test_bus_decode():
    bus = Bus(8)
    mem = Memory(4096)
    regs = RegisterFile()
    bus.map(MEM_BASE, 4096, mem)
    bus.map(CTRL_BASE, 0x2000, SubordinatePort(regs))
    with pytest.raises(ConfigurationError):
        bus.map(MEM_BASE + 16, 16, mem)
    with pytest.raises(BusFault):
        bus.decode(0x10, 4)
    with pytest.raises(BusFault):
        bus.decode(MEM_BASE + 2, 4)  # misaligned
    with pytest.raises(BusFault):
        bus.decode(MEM_BASE, 16)  # wider than the bus


def test_port_costs():
    buf = bytearray(64)
    port = SubordinatePort(RegisterFile(), overhead=4, windows={TX_WINDOW: buf})
    assert port.access_cost("write", TX_LEN, 4) == 2
    assert port.access_cost("write", TX_WINDOW, 8) == 5
    port.bus_write(TX_WINDOW + 8, 8, 0x0102030405060708)
    assert buf[8:16] == bytes([8, 7, 6, 5, 4, 3, 2, 1])
    with pytest.raises(BusFault):
        port.bus_read(TX_WINDOW + 64, 8)


def make_cpu(overhead=1):
    k = Kernel()
    bus = Bus(8)
    mem = Memory(1 << 16)
    regs = RegisterFile()
    bus.map(MEM_BASE, 1 << 16, mem)
    bus.map(CTRL_BASE, 0x2000, SubordinatePort(regs, overhead, {TX_WINDOW: bytearray(1536)}))
    cpu = HostCpu("cpu", bus, k, irq=regs)
    k.register(cpu, SYS_DOMAIN)
    return k, cpu, mem, regs


def test_cpu_access_timing_and_marks():
    k, cpu, mem, regs = make_cpu()

    def script():
        yield Mark("start")
        yield Write(CTRL_BASE + TX_LEN, 7)  # 2 cycles
        v = yield Read(CTRL_BASE + TX_LEN)  # 2 cycles
        yield Mark("end")
        assert v == 7

    cpu.run(script())
    k.run_until(lambda _k: not cpu.busy, 10**6)
    assert cpu.marks == {"start": 0, "end": 4 * 20000}
    assert cpu.accesses == 2


def test_copy_words_cost_with_overhead():
    # 64 bytes = 8 load/store pairs; load 1 cycle, store 1 + overhead
    k, cpu, mem, regs = make_cpu(overhead=4)
    mem.write(MEM_BASE, bytes(range(64)))

    def script():
        yield from copy_words(MEM_BASE, CTRL_BASE + TX_WINDOW, 64)
        yield Mark("done")

    cpu.run(script())
    k.run_until(lambda _k: not cpu.busy, 10**7)
    assert cpu.marks["done"] == 8 * (1 + 5) * 20000


def test_copy_words_unaligned_tail():
    k, cpu, mem, regs = make_cpu()
    mem.write(MEM_BASE, bytes(range(13)))
    cpu.run(copy_words(MEM_BASE, MEM_BASE + 0x100, 13))
    k.run_until(lambda _k: not cpu.busy, 10**7)
    assert mem.read(MEM_BASE + 0x100, 13) == bytes(range(13))
    assert cpu.accesses == 2 * 3  # 8 + 4 + 1 byte words


def test_wait_irq():
    k, cpu, mem, regs = make_cpu()

    class Raiser:
        def tick(self):
            if k.edge_count("sys") == 10:
                regs.write(IRQ_EN, IRQ_RX_DONE)
                regs.rx_complete(60)

    k.register(Raiser(), SYS_DOMAIN)

    def script():
        yield WaitIrq(IRQ_RX_DONE)
        yield Mark("woke")

    cpu.run(script())
    k.run_until(lambda _k: not cpu.busy, 10**7)
    assert cpu.marks["woke"] == 11 * 20000


def test_cpu_abort():
    k, cpu, mem, regs = make_cpu()

    def script():
        yield WaitIrq(IRQ_RX_DONE)

    cpu.run(script())
    k.run_for(100000)
    assert cpu.busy
    cpu.abort()
    assert not cpu.busy
