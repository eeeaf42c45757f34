"""IEEE 802.3 framing: preamble/SFD, header, padding and the CRC-32 FCS.

All functions are pure. Octet 0 of any byte sequence is the first on the wire.
"""

from dataclasses import dataclass

from .errors import SimulationError

PREAMBLE = b"\x55" * 7
SFD = 0xD5
HEADER_LEN = 14
MIN_PAYLOAD = 46
MAX_PAYLOAD = 1500
FCS_LEN = 4
MIN_WIRE_LEN = len(PREAMBLE) + 1 + HEADER_LEN + MIN_PAYLOAD + FCS_LEN  # 72
ETHERTYPE_MIN = 1536

CRC_POLY = 0x04C11DB7
CRC_POLY_REFLECTED = 0xEDB88320
CRC_INIT = 0xFFFFFFFF


def _make_table():
    table = []
    for i in range(256):
        c = i
        for _ in range(8):
            c = (c >> 1) ^ CRC_POLY_REFLECTED if c & 1 else c >> 1
        table.append(c)
    return tuple(table)


CRC_TABLE = _make_table()


def crc32_update(state, data):
    """Feed ``data`` into a raw (non-finalized) CRC register."""
    table = CRC_TABLE
    for b in data:
        state = (state >> 8) ^ table[(state ^ b) & 0xFF]
    return state


def crc32_finish(state):
    return state ^ 0xFFFFFFFF


def crc32(data):
    """Ethernet FCS value of ``data`` (reflected, init all-ones, final complement)."""
    return crc32_update(CRC_INIT, data) ^ 0xFFFFFFFF


class Crc32:
    """Incremental FCS accumulator, one octet at a time."""

    __slots__ = ("state",)

    def __init__(self):
        self.state = CRC_INIT

    def update(self, octet):
        self.state = (self.state >> 8) ^ CRC_TABLE[(self.state ^ octet) & 0xFF]

    @property
    def value(self):
        return self.state ^ 0xFFFFFFFF


def fcs_bytes(value):
    """FCS octets in transmission order (least significant byte first)."""
    return value.to_bytes(4, "little")


# -- frames -----------------------------------------------------------------


@dataclass(frozen=True)
class MacAddress:
    octets: bytes

    def __post_init__(self):
        if len(self.octets) != 6:
            raise ValueError(f"MAC address needs 6 octets, got {len(self.octets)}")
        object.__setattr__(self, "octets", bytes(self.octets))

    @classmethod
    def parse(cls, text):
        parts = text.replace("-", ":").split(":")
        if len(parts) != 6:
            raise ValueError(f"bad MAC address {text!r}")
        return cls(bytes(int(p, 16) for p in parts))

    @classmethod
    def from_int(cls, value):
        return cls(value.to_bytes(6, "big"))

    def __int__(self):
        return int.from_bytes(self.octets, "big")

    def __str__(self):
        return ":".join(f"{b:02x}" for b in self.octets)


@dataclass(frozen=True)
class EthernetFrame:
    dst: MacAddress
    src: MacAddress
    ethertype: int
    payload: bytes

    def __post_init__(self):
        if not 0 <= self.ethertype <= 0xFFFF:
            raise ValueError(f"ethertype {self.ethertype:#x} is not 16-bit")
        object.__setattr__(self, "payload", bytes(self.payload))

    def header(self):
        return self.dst.octets + self.src.octets + self.ethertype.to_bytes(2, "big")

    def body(self):
        """Header and payload, without padding or FCS."""
        return self.header() + self.payload


@dataclass(frozen=True)
class WireFrame:
    octets: bytes

    def __len__(self):
        return len(self.octets)


def wire_length(payload_len):
    return len(PREAMBLE) + 1 + HEADER_LEN + max(payload_len, MIN_PAYLOAD) + FCS_LEN


class FrameTooLong(SimulationError, ValueError):
    pass


class DecodeError(SimulationError):
    pass


class BadPreamble(DecodeError):
    pass


class BadSfd(DecodeError):
    pass


class Runt(DecodeError):
    pass


class BadFcs(DecodeError):
    def __init__(self, expected, received):
        super().__init__(f"FCS mismatch: computed {expected:#010x}, received {received:#010x}")
        self.expected = expected
        self.received = received


def pad(body):
    """Zero-pad header+payload to the 60-octet minimum."""
    short = HEADER_LEN + MIN_PAYLOAD - len(body)
    return body + bytes(short) if short > 0 else body


def encode(frame, max_payload=MAX_PAYLOAD):
    if len(frame.payload) > max_payload:
        raise FrameTooLong(f"payload of {len(frame.payload)} bytes exceeds {max_payload}")
    body = pad(frame.body())
    return WireFrame(PREAMBLE + bytes([SFD]) + body + fcs_bytes(crc32(body)))


def decode(octets):
    """Parse and verify a wire frame.

    Padding is stripped only when the type field is an 802.3 length
    (``< 1536``); otherwise the payload is returned exactly as received.
    """
    if isinstance(octets, WireFrame):
        octets = octets.octets
    octets = bytes(octets)
    if len(octets) < MIN_WIRE_LEN:
        raise Runt(f"{len(octets)} wire octets, minimum is {MIN_WIRE_LEN}")
    if octets[:7] != PREAMBLE:
        raise BadPreamble(octets[:7].hex())
    if octets[7] != SFD:
        raise BadSfd(f"{octets[7]:#04x}")
    body = octets[8:-FCS_LEN]
    received = int.from_bytes(octets[-FCS_LEN:], "little")
    computed = crc32(body)
    if computed != received:
        raise BadFcs(computed, received)
    ethertype = int.from_bytes(body[12:14], "big")
    payload = body[HEADER_LEN:]
    if ethertype < ETHERTYPE_MIN and ethertype <= len(payload):
        payload = payload[:ethertype]
    return EthernetFrame(MacAddress(body[0:6]), MacAddress(body[6:12]), ethertype, payload)
