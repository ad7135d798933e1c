"""Conditional tail risk measures of Wishart losses by MGF inversion."""

from .allocation import AllocationProblem, AllocationSolution
from .allocation import solve as solve_allocation
from .exceptions import (ConvergenceError, DegenerateSample, DomainError, EmptyPanel,
                         EmptyTail, NegativeVariance, NonConvergence, ParseError,
                         SingularMatrixError, ValidationError, WishriskError,
                         ZeroTailProbability)
from .inversion import InversionConfig, MomentResult
from .riskmeasures import (OneDate, SpectralPayoff, TailQuery, TwoDates, conditional_moment,
                           dependence_report, tail_covariance, tail_skewness, tail_variance,
                           tce)
from .wishart import (WishartParams, example_params, mgf, mgf_two_dates,
                      zero_dependence_equivalent)

__version__ = "0.1.0"

__all__ = [
    "AllocationProblem", "AllocationSolution", "solve_allocation",
    "InversionConfig", "MomentResult",
    "OneDate", "TwoDates", "SpectralPayoff", "TailQuery",
    "conditional_moment", "dependence_report", "tce", "tail_variance", "tail_covariance",
    "tail_skewness",
    "WishartParams", "example_params", "mgf", "mgf_two_dates", "zero_dependence_equivalent",
    "WishriskError", "ValidationError", "DomainError", "SingularMatrixError",
    "ConvergenceError", "NonConvergence", "ZeroTailProbability", "NegativeVariance",
    "ParseError", "EmptyPanel", "DegenerateSample", "EmptyTail",
]
