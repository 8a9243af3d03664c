"""Exception hierarchy for secrecy_opt."""


class SecrecyOptError(Exception):
    """Base class for all package errors."""


class ValidationError(SecrecyOptError):
    """A domain object violates one of its invariants."""


class DimensionMismatch(ValidationError):
    pass


class NonPositivePower(ValidationError):
    pass


class ZeroBobChannel(ValidationError):
    pass


class EmptyEveList(ValidationError):
    pass


class NegativeEpsilon(ValidationError):
    pass


class NonHermitianInput(ValidationError):
    pass


class RequiresMultipleAntennas(ValidationError):
    """Raised when a construction needs an orthogonal complement but nt == 1."""


class SolverFailure(SecrecyOptError):
    """Conic solve did not reach a certified terminal status.

    Carries solver diagnostics so the caller can distinguish numerical
    trouble from certified infeasibility (which is reported separately).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class Infeasible(SecrecyOptError):
    """The conic program is certified infeasible."""


class RankExtractionFailed(SecrecyOptError):
    """Beamformer extraction failed the rank-one test and re-verification.

    Attributes carry the offending eigenvalue ratio and the feasibility
    residuals of the projected matrix.
    """

    def __init__(self, message, lambda_ratio=None, residuals=None):
        super().__init__(message)
        self.lambda_ratio = lambda_ratio
        self.residuals = residuals or {}


class NumericalFailure(SecrecyOptError):
    """An iterative numerical routine stalled (e.g. secular root bracketing)."""


class PipelineVerificationFailed(SecrecyOptError):
    """Final design failed its independent worst-case re-evaluation."""
