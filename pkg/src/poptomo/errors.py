"""Exception hierarchy shared across the package.

Two branches matter for scripting: ``ValidationError`` (bad inputs, exit
code 2 from the CLI) and ``NumericalError`` (a computation left its
guaranteed envelope, exit code 3).
"""


class PoptomoError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PoptomoError):
    """Invalid input data or configuration."""


class NumericalError(PoptomoError):
    """A numerical guarantee was violated at runtime."""


class NonHermitianInput(ValidationError):
    """A matrix that must be Hermitian is not, beyond tolerance."""


class DimensionMismatch(ValidationError):
    """Two objects that must share a dimension do not."""


class InvalidState(ValidationError):
    """A density matrix violates one of its defining invariants."""


class DegenerateParams(ValidationError):
    """A parameter vector has no direction (all entries ~ zero)."""


class GridMismatch(ValidationError):
    """Measurement times do not sit on a common uniform time grid."""


class EmptyWindow(ValidationError):
    """A truncation window keeps fewer than two time points."""


class ParseError(ValidationError):
    """A data file could not be parsed; carries line/column context."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class SchemaError(ValidationError):
    """Parsed data violates a record invariant; names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalDrift(NumericalError):
    """Propagation drifted off the physical manifold beyond tolerance."""


class FactorizationFailure(NumericalError):
    """Cholesky-style factorization failed even after jittering."""


class NonFiniteObjective(NumericalError):
    """The objective returned NaN/inf repeatedly."""


class NoConvergence(NumericalError):
    """Reconstruction finished above the acceptable error ceiling."""
