"""Cycle-level model of a gigabit Ethernet controller: a bufferless DMA design
and a buffered store-and-forward baseline, with benchmark tooling."""

from .controllers import (
    BufferedBaseline, BufferlessController, BufferOverflow, ControllerConfig, FcsError,
    PhaseLatencies, RxError, RxOverflow, TxError, Underrun, savings,
)
from .errors import BusFault, ConfigurationError, ProtocolViolation, SimulationError
from .frame import EthernetFrame, MacAddress, crc32, decode, encode
from .kernel import ClockDomain, Kernel

__all__ = [
    "BufferedBaseline", "BufferlessController", "BufferOverflow", "BusFault", "ClockDomain",
    "ConfigurationError", "ControllerConfig", "EthernetFrame", "FcsError", "Kernel",
    "MacAddress", "PhaseLatencies", "ProtocolViolation", "RxError", "RxOverflow",
    "SimulationError", "TxError", "Underrun", "crc32", "decode", "encode", "savings",
]

__version__ = "0.1.0"
