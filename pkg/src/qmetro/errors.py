"""Exception hierarchy.

Every error raised on purpose by the package derives from ``QmetroError``.
Schema problems (bad input files) and numerical-invariant failures are kept
apart so the command line front end can map them onto distinct exit codes.
"""


class QmetroError(Exception):
    """Base class for all package errors."""


class SchemaError(QmetroError, ValueError):
    """Malformed model, POVM or tolerance input."""


class NumericalInvariantError(QmetroError, ValueError):
    """An input or intermediate result violates a numerical invariant."""


class NonHermitianInput(NumericalInvariantError):
    pass


class NegativeEigenvalue(NumericalInvariantError):
    pass


class InconsistentDerivative(NumericalInvariantError):
    """The kernel-kernel block of a derivative is nonzero, so no SLD exists."""


class IncompletePovm(NumericalInvariantError):
    pass


class NullOutcomeWithNonzeroDerivative(NumericalInvariantError):
    pass


class NotTraceless(NumericalInvariantError):
    pass


class DimensionTooSmall(QmetroError, ValueError):
    pass


class SpectrumMismatch(QmetroError, ValueError):
    """A candidate ``v.T`` does not have the rank-one projector spectrum."""

    def __init__(self, message, gaps=None):
        super().__init__(message)
        self.gaps = gaps


class ZeroOutcomeInformation(QmetroError):
    """Raised only in strict mode; see ``check_outcome_reduced``."""


class PreconditionNotMet(QmetroError, ValueError):
    pass


class BranchConstructionFailed(QmetroError, RuntimeError):
    def __init__(self, branch, message=""):
        super().__init__(f"branch {branch}: {message}" if message else f"branch {branch}")
        self.branch = branch
