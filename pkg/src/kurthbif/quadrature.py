"""Gauss-Legendre rules with endpoint-singularity aware substitutions.

Every rule here is open (no endpoint evaluation) and vectorized over the
interval endpoints: ``lo`` and ``hi`` may be arrays of any common shape
``S`` and the returned nodes/weights have shape ``S + (m,)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from functools import lru_cache

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and tolerances shared by the fixed-order composite rules.

    ``u_nodes`` also sets the per-half order of the one-dimensional singular
    rules (Abel kernels, density integrals). ``tol`` is the admissible gap
    between a rule and its lower-order companion.
    """

    radial_nodes: int = 48
    pr_nodes: int = 32
    u_nodes: int = 24
    euler_nodes: int = 8
    mc_samples: int = 20000
    seed: int = 0
    tol: float = 1e-7

    def __post_init__(self):
        for f in fields(self):
            if f.name in ("seed", "tol"):
                continue
            value = getattr(self, f.name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise DomainError(f"{f.name} must be a positive integer")
        if not (self.tol > 0 and np.isfinite(self.tol)):
            raise DomainError("tol must be positive")
        if int(self.seed) != self.seed or self.seed < 0:
            raise DomainError("seed must be a non-negative integer")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> QuadratureSpec:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown quadrature keys: {sorted(unknown)}")
        return cls(**data)

    def with_(self, **changes) -> QuadratureSpec:
        return replace(self, **changes)

    def lower(self) -> QuadratureSpec:
        """Companion spec used for a-posteriori error estimates."""
        def cut(n):
            return max(2, (2 * n) // 3)

        return replace(
            self,
            radial_nodes=cut(self.radial_nodes),
            pr_nodes=cut(self.pr_nodes),
            u_nodes=cut(self.u_nodes),
        )


DEFAULT_SPEC = QuadratureSpec()


@lru_cache(maxsize=None)
def _legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(lo, hi, n: int):
    """Plain ``n``-point Gauss-Legendre rule on ``[lo, hi]``."""
    x, w = _legendre01(n)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    return lo + (hi - lo) * x, (hi - lo) * w


def sqrt_endpoint_rule(lo, hi, n: int):
    """Rule for integrands with square-root behaviour at either end.

    Uses ``sigma = lo + (hi - lo) sin^2(theta)``. An integrand of the form
    ``A + B sqrt(sigma - lo) + C sqrt(hi - sigma)`` or one carrying a factor
    ``1/sqrt(sigma - lo)`` / ``1/sqrt(hi - sigma)`` (with A, B, C smooth)
    becomes smooth in ``theta``, so convergence stays spectral.
    """
    x, w = _legendre01(n)
    theta = 0.5 * np.pi * x
    wt = 0.5 * np.pi * w
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    span = hi - lo
    nodes = lo + span * np.sin(theta) ** 2
    weights = span * np.sin(2.0 * theta) * wt
    return nodes, weights


def abel_rule(s, lo, hi, n: int):
    """Nodes/weights for ``int_lo^hi g(sigma) / sqrt(s - sigma) dsigma``.

    Requires ``lo <= hi <= s``. ``g`` may carry a ``sqrt(sigma - lo)`` term
    and must be smooth elsewhere on ``[lo, hi]``. The interval is halved:
    the left half uses ``sigma = lo + t^2`` (removes the root at ``lo``), the
    right half ``sigma = s - tau^2`` (removes the kernel singularity, or its
    near-singularity when ``hi`` is just below ``s``). The kernel is folded
    into the returned weights. Total node count is ``2 n``.
    """
    x, w = _legendre01(n)
    s = np.asarray(s, dtype=float)[..., None]
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    mid = 0.5 * (lo + hi)
    # left half: sigma = lo + t^2, t in [0, sqrt(mid - lo)]
    tmax = np.sqrt(mid - lo)
    t = tmax * x
    sig_l = lo + t * t
    gap = np.maximum(s - sig_l, np.finfo(float).tiny)
    w_l = tmax * w * 2.0 * t / np.sqrt(gap)
    # right half: sigma = s - tau^2, tau in [sqrt(s - hi), sqrt(s - mid)]
    ta = np.sqrt(np.maximum(s - hi, 0.0))
    tb = np.sqrt(s - mid)
    tau = ta + (tb - ta) * x
    sig_r = s - tau * tau
    w_r = (tb - ta) * w * 2.0
    nodes = np.concatenate([sig_l, sig_r], axis=-1)
    weights = np.concatenate(
        [w_l, np.broadcast_to(w_r, sig_r.shape)], axis=-1
    )
    return nodes, weights


def integrate(f, nodes, weights):
    """Apply a rule: ``sum(weights * f(nodes), axis=-1)``."""
    return np.sum(weights * f(nodes), axis=-1)
