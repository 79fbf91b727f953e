"""Exception hierarchy for the simulator."""


class SmartletSimError(Exception):
    """Base class for all simulator errors."""


class ProtocolViolation(SmartletSimError):
    """An FSM operation was attempted in a mode that forbids it."""


class MalformedProgram(SmartletSimError):
    """A 58-bit program image has the wrong length or a set reserved bit."""


class DomainError(SmartletSimError):
    """A numeric argument is outside its physical domain."""


class ConfigError(SmartletSimError):
    """A configuration value is outside its allowed range."""


class CodecError(SmartletSimError):
    """A waveform segment cannot be classified by the decoder."""


class FrameUnderrun(CodecError):
    """Fewer than one pixel's worth of bits arrived before the reset gap."""


class ScenarioError(SmartletSimError):
    """A scenario file is malformed. Carries a human-readable location."""

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class TraceIOError(SmartletSimError):
    """Writing or reading a trace file failed."""
