"""Exception hierarchy shared by the numerical modules."""


class WishriskError(Exception):
    """Base class for all errors raised by the package."""


class ValidationError(WishriskError, ValueError):
    """Invalid model parameters or query."""


class DomainError(WishriskError, ArithmeticError):
    """A transform argument lies outside the domain where the MGF is finite."""


class SingularMatrixError(WishriskError, ArithmeticError):
    """A linear system is numerically singular."""


class ConvergenceError(WishriskError, RuntimeError):
    """An iterative or adaptive scheme did not reach its tolerance."""


class BracketError(ConvergenceError):
    """Root bracketing failed to find a sign change."""


class ZeroTailProbability(WishriskError, ArithmeticError):
    """The conditioning event has (numerically) zero probability."""


class NegativeVariance(WishriskError, ArithmeticError):
    """A tail variance came out negative beyond quadrature noise."""


class ParseError(WishriskError, ValueError):
    """Malformed input data."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyPanel(WishriskError, ValueError):
    """No observation survived aggregation and filtering."""


class DegenerateSample(WishriskError, ValueError):
    """Sample moments do not identify the parameters."""


class NonConvergence(ConvergenceError):
    """Optimizer failed on every multi-start."""


class EmptyTail(WishriskError, ValueError):
    """No simulated draw exceeds the threshold."""
