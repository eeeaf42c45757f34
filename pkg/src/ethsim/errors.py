"""Exception hierarchy shared by all simulator modules."""


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigurationError(SimulationError, ValueError):
    """Invalid static configuration (bad clock, width ratio, late registration...)."""


class ProtocolViolation(SimulationError):
    """A component broke a handshake or clock-domain contract; the run is halted."""


class BusFault(SimulationError):
    """Out-of-range, unmapped or misaligned bus access."""

    def __init__(self, address, reason="unmapped"):
        super().__init__(f"bus fault at {address:#x}: {reason}")
        self.address = address
        self.reason = reason


class SimulationTimeout(SimulationError):
    """A blocking transaction did not finish before its time budget."""
