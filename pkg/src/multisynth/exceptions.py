class SynthError(Exception):
    """Base class for numerical/engine failures."""


class TruncationError(SynthError, ValueError):
    """Raised when a Fock truncation drops more probability than allowed."""


class HeraldUnderflowError(SynthError, RuntimeError):
    """Raised when a homodyne window has (numerically) zero success probability."""


class ConsistencyError(SynthError, RuntimeError):
    pass
