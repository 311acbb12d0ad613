"""Exception hierarchy shared by every module."""


class DockAllocError(Exception):
    """Base class for all package errors."""


class DimensionError(DockAllocError, ValueError):
    """Vectors of mismatched length or wrong station count."""


class CostDomainError(DockAllocError, ValueError):
    """A cost was requested outside the domain of its model."""

    def __init__(self, station, d, b, detail=""):
        self.station = station
        self.point = (d, b)
        msg = f"station {station}: cost undefined at (d={d}, b={b})"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class InfeasibleError(DockAllocError):
    """The requested problem has no feasible allocation.

    ``certificate`` is a short human-readable reason, e.g. which bound sum fails.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate if certificate is not None else message


class PreconditionError(DockAllocError, ValueError):
    """An operation was called with inputs violating its stated precondition."""


class OracleCapExceeded(DockAllocError):
    """Brute-force enumeration refused because the search space is too large."""

    def __init__(self, estimated, cap):
        self.estimated = estimated
        self.cap = cap
        super().__init__(f"search space ~{estimated} points exceeds oracle cap {cap}")


class CheckFailure(DockAllocError, AssertionError):
    """A verification check observed a counterexample; ``witness`` holds the dump."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness or {}
