import random

import pytest
from hypothesis import given, strategies as st

from ethsim.axis import Channel, StreamBeat, packetize
from ethsim.errors import BusFault, ConfigurationError
from ethsim.idma import DmaState, Direction, IDma, TransferRequest, legalize
from ethsim.kernel import SYS_DOMAIN, Kernel
from ethsim.soc import MEM_BASE, Memory
from oracles import check_legalization


def req(addr, n):
    return TransferRequest(Direction.MEM_TO_STREAM, addr, n)


# -- legalizer -------------------------------------------------------------------


def test_single_job_inside_page():
    jobs = legalize(req(0x1000, 100))
    assert [(j.mem_addr, j.length) for j in jobs] == [(0x1000, 100)]
    assert jobs[0].beats == 13


def test_page_split():
    jobs = legalize(req(0x0FF0, 0x20))
    assert [(j.mem_addr, j.length) for j in jobs] == [(0x0FF0, 0x10), (0x1000, 0x10)]


def test_burst_cap_split():
    jobs = legalize(req(0x0, 4096), bus_width=8, max_burst_beats=256)
    assert [(j.mem_addr, j.length, j.beats) for j in jobs] == [(0, 2048, 256), (2048, 2048, 256)]


def test_unaligned_offsets():
    (j,) = legalize(req(0x1003, 10))
    assert (j.first_offset, j.last_offset, j.beats) == (3, 4, 2)


def test_bad_requests():
    with pytest.raises(ConfigurationError):
        req(0, 0)
    with pytest.raises(ConfigurationError):
        legalize(req(0, 8), bus_width=3)
    with pytest.raises(ConfigurationError):
        legalize(req(0, 8), max_burst_beats=0)


@given(st.integers(0, 3 * 4096), st.integers(1, 3 * 4096), st.sampled_from([1, 4, 8, 16]),
       st.sampled_from([1, 2, 16, 256]))
def test_legalizer_against_brute_force(addr, n, width, cap):
    jobs = legalize(req(addr, n), width, cap)
    assert check_legalization(addr, n, jobs, width, cap) == []


# -- transport -------------------------------------------------------------------


class Sink:
    def __init__(self, ch, rng, duty):
        self.ch, self.rng, self.duty = ch, rng, duty
        self.got = []

    def tick(self):
        if self.ch.valid and self.ch.ready:
            self.got.append(self.ch.data)
        self.ch.set_ready(self.rng.random() < self.duty)


class Source:
    def __init__(self, ch, beats, rng, duty):
        self.ch, self.beats, self.rng, self.duty = ch, list(beats), rng, duty

    def tick(self):
        if self.beats and self.rng.random() < self.duty and self.ch.can_push():
            self.ch.push(self.beats.pop(0))


def dma_rig(seed, duty, **kw):
    rng = random.Random(seed)
    k = Kernel()
    mem = Memory(1 << 16, **kw)
    tx_ch, rx_ch = Channel("tx", 8), Channel("rx", 8)
    dma = IDma("dma", mem, tx_ch, rx_ch, kernel=k)
    sink = Sink(tx_ch, rng, duty)
    done = []
    dma.on_done = done.append
    for c in (dma, sink, tx_ch, rx_ch):
        k.register(c, SYS_DOMAIN)
    return k, mem, dma, sink, rx_ch, rng, done


@given(st.integers(0, 100), st.integers(1, 600), st.integers(0, 2**32),
       st.sampled_from([0.3, 1.0]))
def test_read_transport_packs_bytes(offset, n, seed, duty):
    k, mem, dma, sink, _, rng, done = dma_rig(seed, duty)
    data = random.Random(seed).randbytes(n)
    mem.write(MEM_BASE + offset, data)
    dma.submit(req(MEM_BASE + offset, n))
    k.run_until(lambda _k: bool(done), 10**9)
    k.run_for(10 * 20000)
    assert sink.got == packetize(data, 8)
    assert done[0].state is DmaState.DONE and done[0].bytes_moved == n


@given(st.integers(0, 100), st.integers(1, 600), st.integers(0, 2**32))
def test_write_transport_places_bytes(offset, n, seed):
    k, mem, dma, _, rx_ch, rng, done = dma_rig(seed, 0.5, write_latency=2)
    data = random.Random(seed).randbytes(n)
    k.register(Source(rx_ch, packetize(data, 8), rng, 0.6), SYS_DOMAIN)
    dma.submit(TransferRequest(Direction.STREAM_TO_MEM, MEM_BASE + offset, 2048))
    k.run_until(lambda _k: bool(done), 10**9)
    assert mem.read(MEM_BASE + offset, n) == data
    assert done[0].bytes_moved == n and not done[0].overflow


def test_write_overflow_truncates():
    k, mem, dma, _, rx_ch, rng, done = dma_rig(1, 1.0)
    k.register(Source(rx_ch, packetize(bytes(range(100)), 8), rng, 1.0), SYS_DOMAIN)
    dma.submit(TransferRequest(Direction.STREAM_TO_MEM, MEM_BASE, 40))
    k.run_until(lambda _k: bool(done), 10**9)
    assert done[0].overflow
    assert mem.read(MEM_BASE, 41) == bytes(range(40)) + b"\x00"


def test_setup_and_latency_set_duration():
    # 64 aligned bytes with an always-ready sink: the first memory beat issues on
    # the last setup edge, then one beat lands every read_latency edges and is
    # pushed on the edge it lands
    for lat in (1, 3):
        k, mem, dma, sink, _, rng, done = dma_rig(0, 1.0, read_latency=lat)
        dma.setup_cycles = 4
        dma.submit(req(MEM_BASE, 64))
        k.run_until(lambda _k: bool(done), 10**9)
        assert done[0].edges == 4 - 1 + 8 * lat


def test_submit_checks():
    k, mem, dma, *_ = dma_rig(0, 1.0)
    with pytest.raises(BusFault):
        dma.submit(req(MEM_BASE + (1 << 16) - 4, 8))
    dma.submit(req(MEM_BASE, 8))
    k.run_for(20000)
    with pytest.raises(ConfigurationError):
        dma.submit(req(MEM_BASE, 8))


def test_cancel_stops_transfer():
    k, mem, dma, _, rx_ch, rng, done = dma_rig(0, 1.0)
    dma.submit(TransferRequest(Direction.STREAM_TO_MEM, MEM_BASE, 64))
    k.run_for(5 * 20000)
    dma.cancel(Direction.STREAM_TO_MEM)
    assert not dma.rx.active and dma.rx.status.state is DmaState.ERROR
    assert done == []
    rx_ch.push(StreamBeat(bytes(8), 0xFF, True))
    k.run_for(10 * 20000)
    assert rx_ch.valid  # nobody consumes it any more
