"""Steady states bifurcating from the Kurth solution of Vlasov-Poisson.

Numerical construction of the profile family ``f_Gamma`` (``Gamma < 1``
close to 1), the self-similar periodic family around it, and Monte Carlo
checks of the weak equations.
"""

from __future__ import annotations

from .errors import (
    AccuracyError,
    BuildError,
    ChartSingularityError,
    ContractionError,
    ConvergenceError,
    DomainError,
    KurthBifError,
    SamplerError,
)
from .params import GammaParam
from .quadrature import QuadratureSpec
from .reduction import PhasePoint

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "BuildError",
    "ChartSingularityError",
    "ContractionError",
    "ConvergenceError",
    "DomainError",
    "GammaParam",
    "KurthBifError",
    "PhasePoint",
    "QuadratureSpec",
    "SamplerError",
    "__version__",
]
