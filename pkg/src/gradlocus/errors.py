"""Exception hierarchy shared across the package."""


class GradlocusError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateForm(GradlocusError):
    """The bilinear form's matrix is (numerically) singular."""

    def __init__(self, message, sv_ratio=None):
        super().__init__(message)
        self.sv_ratio = sv_ratio


class DimensionMismatch(GradlocusError):
    """Operands live in spaces of different dimensions."""


class OddDimension(GradlocusError):
    """An operation requiring even dimension was called on odd n."""


class NotAntisymmetric(GradlocusError):
    """A Pfaffian was requested for a matrix that is not antisymmetric."""


class NotSymplectic(GradlocusError):
    """A symplectic-only operation was called on a non-symplectic form."""


class ParseError(GradlocusError):
    """Expression text does not conform to the grammar.

    ``position`` is the 0-based character offset of the offending token.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DomainError(GradlocusError):
    """Evaluation hit a singular point (division by zero, log of a
    non-positive value, or an overflow to non-finite).

    ``subexpression`` is the printed form of the offending node.
    """

    def __init__(self, message, subexpression=None):
        if subexpression is not None:
            message = f"{message} in '{subexpression}'"
        super().__init__(message)
        self.subexpression = subexpression


class Diverged(GradlocusError):
    """The least-squares iteration failed to reach the residual target."""

    def __init__(self, message, last_point=None, last_residual=None):
        super().__init__(message)
        self.last_point = last_point
        self.last_residual = last_residual


class TooFewPoints(GradlocusError):
    """Not enough points for a meaningful dimension estimate."""


class ScenarioError(GradlocusError):
    """A scenario file failed validation; the message names the field."""
