"""Exception hierarchy shared by all modules.

Every error carries the CLI exit code it maps to, so the command layer never
has to pattern-match on messages.
"""


class NNCertError(Exception):
    exit_code = 1


class ParseError(NNCertError):
    """Malformed expression or problem text."""

    exit_code = 64

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} at offset {position}"
        super().__init__(message)


class InfeasiblePointError(NNCertError):
    exit_code = 65


class FormatError(NNCertError):
    """Certificate IR payload is malformed, truncated or of the wrong version."""

    exit_code = 66


class DomainError(NNCertError, ArithmeticError):
    """log/sqrt/division evaluated outside its domain."""

    exit_code = 4


class ChartError(DomainError):
    """Newton inversion of a chart did not converge (point outside the chart)."""


class DerivativeOrderError(NNCertError):
    """A jet evaluation would need derivatives beyond order two."""


class HypothesisError(NNCertError):
    """A regularity / complementarity / second-order hypothesis fails."""

    exit_code = 3

    def __init__(self, message, condition=None, point=None):
        self.condition = condition
        self.point = point
        super().__init__(message)


class NonIsolatedZeroError(HypothesisError):
    exit_code = 5


class CoverageError(NNCertError):
    exit_code = 4

    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message)


class ConstructionError(NNCertError):
    """Radius sweep or residual check failed while building a certificate."""

    exit_code = 2

    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message)
