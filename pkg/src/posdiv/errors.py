"""Exception hierarchy shared across the package."""


class PosdivError(Exception):
    """Base class for all package errors."""


class ZeroInputError(PosdivError):
    """Raised when a valuation, sign or logarithm of zero is requested."""


class PrecisionError(PosdivError):
    """Raised when a result cannot be certified at the requested precision."""


class DivisionContractError(PosdivError):
    """Raised when a quotient that is contractually a 2-adic integer is not."""


class GrossAlarm(PosdivError):
    """Raised when a group that should be finite fails to stabilize.

    Surfacing this instead of silently truncating is deliberate: a genuine
    occurrence would contradict the finiteness conjecture the computation
    relies on, so it must never be swallowed.
    """


class NotInSpanError(PosdivError):
    """Raised when a divisor class cannot be decomposed over the factor base."""


class UnsupportedCaseError(PosdivError):
    """Raised for inputs that require the narrow logarithmic class group."""


class IngestionError(PosdivError):
    """Raised when a field data file fails schema or verification checks.

    The ``reason`` attribute carries a stable machine-readable identifier,
    e.g. ``"principality witness invalid"`` or ``"local factor mismatch"``.
    """

    def __init__(self, reason, detail=""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)
