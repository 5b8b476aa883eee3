"""The bifurcation parameter Gamma and its derived constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

#: Lower end of the parameter range covered by the full construction.
PIPELINE_MIN_EXPONENT = 12
#: ``1 - 2**-k`` is exactly representable in binary64 up to this exponent.
MAX_EXPONENT = 53
#: Lower end of the range on which the iterate series is known to contract.
SERIES_GAMMA_MIN = 1727.0 / 1728.0


@dataclass(frozen=True)
class GammaParam:
    """Validated Gamma in ``[1 - 2**-12, 1]``.

    ``one_minus_gamma`` is the authoritative quantity: it is stored once and
    reused everywhere (branch split, bounds, series) instead of recomputing
    ``1 - gamma``. Build instances with :meth:`from_exponent` when possible.
    """

    gamma: float
    one_minus_gamma: float
    exponent: int | None = None

    def __post_init__(self):
        g, a = self.gamma, self.one_minus_gamma
        if not (math.isfinite(g) and math.isfinite(a)):
            raise DomainError(f"non-finite gamma {g!r}")
        if a < 0.0 or g > 1.0:
            raise DomainError(f"gamma must not exceed 1 (got {g!r})")
        if g + a != 1.0 and abs(g + a - 1.0) > 4 * math.ulp(1.0):
            raise DomainError("gamma and one_minus_gamma are inconsistent")

    @classmethod
    def from_exponent(cls, k: int) -> GammaParam:
        """Gamma = 1 - 2**-k for integer ``k`` in ``[12, 53]``."""
        if isinstance(k, bool) or int(k) != k:
            raise DomainError(f"gamma exponent must be an integer, got {k!r}")
        k = int(k)
        if not PIPELINE_MIN_EXPONENT <= k <= MAX_EXPONENT:
            raise DomainError(
                f"gamma exponent must lie in [{PIPELINE_MIN_EXPONENT}, "
                f"{MAX_EXPONENT}] (Gamma = 1 - 2^-K), got {k}"
            )
        a = math.ldexp(1.0, -k)
        return cls(1.0 - a, a, k)

    @classmethod
    def from_value(cls, gamma: float, *, series_only: bool = False) -> GammaParam:
        """Validate a decimal Gamma.

        ``series_only=True`` admits the wider range ``[1727/1728, 1)`` on which
        only the iterate series (not the full profile) is meaningful.
        """
        gamma = float(gamma)
        lower = SERIES_GAMMA_MIN if series_only else 1.0 - math.ldexp(1.0, -12)
        if not lower <= gamma <= 1.0:
            raise DomainError(f"gamma must lie in [{lower!r}, 1], got {gamma!r}")
        if series_only and gamma == 1.0:
            raise DomainError("the series-only range excludes gamma = 1")
        return cls(gamma, 1.0 - gamma)

    @classmethod
    def kurth(cls) -> GammaParam:
        """The degenerate member Gamma = 1 (the Kurth solution)."""
        return cls(1.0, 0.0)

    @property
    def split(self) -> float:
        """Branch split point ``1 - Gamma`` of psi and phi."""
        return self.one_minus_gamma

    @property
    def R(self) -> float:
        """Radius ``2 (1 - Gamma)**(1/3)`` of the disc of convergence."""
        return 2.0 * self.one_minus_gamma ** (1.0 / 3.0)

    @property
    def is_kurth(self) -> bool:
        return self.one_minus_gamma == 0.0

    def __str__(self) -> str:
        if self.exponent is not None:
            return f"1-2^-{self.exponent}"
        return repr(self.gamma)
