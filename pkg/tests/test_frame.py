import random
import zlib

import pytest
from hypothesis import given, strategies as st

from ethsim.frame import (
    BadFcs, BadPreamble, BadSfd, Crc32, EthernetFrame, FrameTooLong, MacAddress, Runt,
    crc32, crc32_finish, crc32_update, decode, encode, fcs_bytes, wire_length, CRC_INIT,
)
from oracles import crc32_bit_serial

DST = MacAddress.parse("02:00:00:00:00:01")
SRC = MacAddress.parse("02:00:00:00:00:02")


def frame(payload, ethertype=0x88B5):
    return EthernetFrame(DST, SRC, ethertype, payload)


# -- crc ------------------------------------------------------------------------


def test_check_value_against_oracle():
    assert crc32_bit_serial(b"123456789") == 0xCBF43926
    assert crc32(b"123456789") == 0xCBF43926


def test_empty_input():
    assert crc32_bit_serial(b"") == 0
    assert crc32(b"") == 0


def test_oracle_agrees_with_zlib_on_a_sample():
    # a second independent reference for the oracle itself
    rng = random.Random(5)
    for _ in range(50):
        data = rng.randbytes(rng.randint(0, 64))
        assert crc32_bit_serial(data) == zlib.crc32(data)


@given(st.binary(max_size=256))
def test_table_matches_bit_serial(data):
    assert crc32(data) == crc32_bit_serial(data)


@given(st.binary(max_size=128), st.integers(0, 128))
def test_incremental_equals_one_shot(data, cut):
    state = crc32_update(CRC_INIT, data[:cut])
    state = crc32_update(state, data[cut:])
    assert crc32_finish(state) == crc32(data)
    c = Crc32()
    for b in data:
        c.update(b)
    assert c.value == crc32(data)


def test_fcs_is_lsb_first():
    assert fcs_bytes(0xCBF43926) == bytes([0x26, 0x39, 0xF4, 0xCB])


# -- encode / decode ------------------------------------------------------------


@pytest.mark.parametrize("n,length", [(46, 72), (10, 72), (0, 72), (1024, 1050), (1500, 1526)])
def test_wire_length(n, length):
    assert len(encode(frame(bytes(n)))) == length == wire_length(n)


def test_layout_and_padding():
    w = encode(frame(b"\x01\x02\x03")).octets
    assert w[:7] == b"\x55" * 7 and w[7] == 0xD5
    assert w[8:14] == DST.octets and w[14:20] == SRC.octets
    assert w[20:22] == b"\x88\xb5"
    assert w[22:25] == b"\x01\x02\x03"
    assert w[25:68] == bytes(43)
    assert int.from_bytes(w[-4:], "little") == crc32_bit_serial(w[8:-4])


def test_oversize_rejected():
    with pytest.raises(FrameTooLong):
        encode(frame(bytes(1501)))


@given(st.binary(min_size=46, max_size=1500), st.integers(1536, 0xFFFF))
def test_round_trip(payload, ethertype):
    f = frame(payload, ethertype)
    assert decode(encode(f)) == f


def test_length_field_strips_padding():
    f = frame(b"abc", ethertype=3)
    assert decode(encode(f)).payload == b"abc"


def test_type_field_keeps_padding():
    f = frame(b"abc")
    assert decode(encode(f)).payload == b"abc" + bytes(43)


def test_each_error_is_distinct():
    w = bytearray(encode(frame(bytes(range(46)))).octets)
    with pytest.raises(Runt):
        decode(w[:60])
    bad = bytearray(w)
    bad[2] = 0x54
    with pytest.raises(BadPreamble):
        decode(bad)
    bad = bytearray(w)
    bad[7] = 0xD4
    with pytest.raises(BadSfd):
        decode(bad)
    bad = bytearray(w)
    bad[30] ^= 0x10
    with pytest.raises(BadFcs):
        decode(bad)


def test_every_single_bit_error_is_caught():
    w = encode(frame(bytes(range(46)))).octets
    for i in range(8, len(w)):
        for bit in range(8):
            bad = bytearray(w)
            bad[i] ^= 1 << bit
            with pytest.raises(BadFcs):
                decode(bytes(bad))


def test_mac_address():
    m = MacAddress.parse("02-00-00-00-00-0a")
    assert str(m) == "02:00:00:00:00:0a"
    assert MacAddress.from_int(int(m)) == m
    with pytest.raises(ValueError):
        MacAddress(b"\x00" * 5)
