"""Exception hierarchy shared by the solver, the oracles and the parsers."""


class FWMAPError(Exception):
    """Base class for all errors raised by this package."""


class DecompositionError(FWMAPError, ValueError):
    pass


class DuplicateIndexInTerm(DecompositionError):
    pass


class VariableUncovered(DecompositionError):
    pass


class OracleFailure(FWMAPError, RuntimeError):
    pass


class EmptyCache(FWMAPError, RuntimeError):
    pass


class ZeroGradient(FWMAPError):
    """Raised by the Polyak step when the projected supergradient vanishes.

    A zero supergradient over the multiplier space certifies optimality, so
    callers usually catch this and stop.
    """


class InfeasibleRow(FWMAPError, ValueError):
    pass


class InfeasibleMatching(FWMAPError, ValueError):
    pass


class ParseError(FWMAPError, ValueError):
    """Malformed instance file. ``line`` is 1-based, or None at end of input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ArityError(ParseError):
    pass
