import random

from hypothesis import given, settings, strategies as st

from ethsim.axis import Channel, packetize
from ethsim.frame import EthernetFrame, MacAddress, encode
from ethsim.kernel import ETH_DOMAIN, Kernel
from ethsim.mac import (
    MacRx, MacTx, Wire, WireSource, ddr_nibbles, ddr_octets, nibble_join, nibble_split,
)
from oracles import crc32_bit_serial

DST = MacAddress.parse("02:00:00:00:00:01")
SRC = MacAddress.parse("02:00:00:00:00:02")


def frame(payload):
    return EthernetFrame(DST, SRC, 0x88B5, payload)


class Source:
    def __init__(self, ch, packets, rng=None, duty=1.0):
        self.ch, self.rng, self.duty = ch, rng, duty
        self.beats = [b for p in packets for b in packetize(p, 1)]

    def tick(self):
        if not self.beats or not self.ch.can_push():
            return
        if self.rng is None or self.rng.random() < self.duty:
            self.ch.push(self.beats.pop(0))


class Sink:
    def __init__(self, ch):
        self.ch = ch
        self.got = []

    def tick(self):
        if self.ch.valid and self.ch.ready:
            self.got.append(self.ch.data)
        self.ch.set_ready(True)


def gate(n):
    """Start gate that opens for exactly ``n`` frames."""
    left = [n]

    def open_():
        if left[0]:
            left[0] -= 1
            return True
        return False

    return open_


def loop_rig(data, rng=None, duty=1.0):
    """MacTx -> wire -> MacRx with a 1-byte source and an always-ready sink."""
    k = Kernel()
    tx_ch, rx_ch = Channel("tx", 1), Channel("rx", 1)
    wire = Wire("w", k)
    wire.octet_log = []
    src = Source(tx_ch, [data], rng, duty)
    tx = MacTx("tx", tx_ch, wire, gate(1), k)
    rx = MacRx("rx", wire, rx_ch, k)
    sink = Sink(rx_ch)
    txr, rxr = [], []
    tx.on_done, rx.on_report = txr.append, rxr.append
    for c in (src, tx, rx, sink, wire, tx_ch, rx_ch):
        k.register(c, ETH_DOMAIN)
    k.run_until(lambda _k: bool(rxr) or rx.fragments, 10**9)
    k.run_for(16 * 8000)
    return wire, tx, rx, sink, txr, rxr


# -- transmit --------------------------------------------------------------------


@settings(max_examples=30)
@given(st.binary(min_size=0, max_size=300))
def test_wire_octets_equal_encoder(payload):
    f = frame(payload)
    wire, tx, rx, sink, txr, rxr = loop_rig(f.header() + payload)
    assert bytes(wire.octet_log) == encode(f).octets
    assert txr[0].ok and tx.underruns == 0


def test_active_octet_count_law():
    for p in (0, 10, 46, 47, 256, 1500):
        f = frame(bytes(p))
        wire, *_ = loop_rig(f.header() + f.payload)
        assert wire.active_octets == 8 + 14 + max(p, 46) + 4


def test_inter_packet_gap():
    k = Kernel()
    ch = Channel("c", 1)
    wire = Wire("w", k)
    times = []

    class Probe:
        def tick(self):
            if wire.value is not None:
                times.append(k.edge_count("eth"))

    data = frame(bytes(46)).header() + bytes(46)
    src = Source(ch, [data, data])
    tx = MacTx("tx", ch, wire, gate(2), k)
    for c in (src, tx, Probe(), wire, ch):
        k.register(c, ETH_DOMAIN)
    k.run_for(300 * 8000)
    assert len(times) == 2 * 72
    gap = times[72] - times[71] - 1
    assert gap == 12


def test_underrun_complements_fcs():
    f = frame(bytes(range(200)))
    wire, tx, rx, sink, txr, rxr = loop_rig(f.header() + f.payload, random.Random(3), 0.3)
    assert tx.underruns == 1 and not txr[0].ok
    octets = bytes(wire.octet_log)
    body, trailer = octets[8:-4], octets[-4:]
    good = crc32_bit_serial(body)
    assert int.from_bytes(trailer, "little") == good ^ 0xFFFFFFFF
    assert rxr and not rxr[0].fcs_ok
    assert rx.fcs_errors == 1


# -- receive ---------------------------------------------------------------------


def rx_rig():
    k = Kernel()
    ch = Channel("rx", 1)
    wire = Wire("w", k)
    phy = WireSource("phy", wire)
    rx = MacRx("rx", wire, ch, k)
    sink = Sink(ch)
    reports = []
    rx.on_report = reports.append
    for c in (phy, rx, sink, wire, ch):
        k.register(c, ETH_DOMAIN)
    return k, phy, rx, sink, reports


@settings(max_examples=20)
@given(st.binary(min_size=46, max_size=200))
def test_rx_forwards_body_without_fcs(payload):
    k, phy, rx, sink, reports = rx_rig()
    octets = encode(frame(payload)).octets
    phy.send(octets)
    k.run_for((len(octets) + 20) * 8000)
    assert b"".join(b.data for b in sink.got) == octets[8:-4]
    assert [b.last for b in sink.got] == [False] * (len(sink.got) - 1) + [True]
    assert reports[0].fcs_ok and reports[0].length == len(octets) - 12


def test_rx_flags_bad_fcs_and_keeps_going():
    k, phy, rx, sink, reports = rx_rig()
    good = encode(frame(bytes(50))).octets
    bad = bytearray(good)
    bad[30] ^= 1
    phy.send(bad)
    phy.send(good)
    k.run_for(200 * 8000)
    assert [r.fcs_ok for r in reports] == [False, True]


def test_rx_fragment_and_bad_preamble():
    k, phy, rx, sink, reports = rx_rig()
    phy.send(b"\x55" * 7 + b"\xd5" + b"\x01\x02")  # too short for an FCS
    phy.send(b"\x55\x55\x42\x55")
    phy.send(b"\x55" * 3)  # preamble then idle
    k.run_for(100 * 8000)
    assert reports == []
    assert rx.fragments == 1 and rx.bad_preambles == 2


def test_rx_accept_hook_drops_frame():
    k, phy, rx, sink, reports = rx_rig()
    rx.accept = lambda: False
    phy.send(encode(frame(bytes(46))).octets)
    k.run_for(100 * 8000)
    assert rx.dropped == 1 and sink.got == [] and reports == []


# -- rgmii nibbles ---------------------------------------------------------------


def test_nibble_order_low_first():
    assert nibble_split(0xD5) == (0x5, 0xD)
    assert nibble_join(0x5, 0xD) == 0xD5


@given(st.binary(max_size=64))
def test_ddr_round_trip(data):
    n = ddr_nibbles(data)
    assert len(n) == 2 * len(data)
    assert ddr_octets(n) == data
