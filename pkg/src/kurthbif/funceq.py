"""The map h, its iterate series, and the solution psi of psi - psi o h = id.

On ``[0, 1 - Gamma]`` the map ``h(s) = s (1 - Gamma / (1 - s))`` contracts
towards 0 with ratio at most ``1 - Gamma``; psi is the sum of the iterates
there and the identity on ``[1 - Gamma, 1]``. Derivatives of psi are summed
term by term along the iterate orbit (chain and product rule), never taken
from an interpolant.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractionError, DomainError
from .params import GammaParam

__all__ = [
    "GammaParam",
    "chi",
    "h",
    "h_prime",
    "psi_tilde",
    "psi_tilde_derivatives",
    "psi",
    "psi_prime",
    "psi_second",
]

DEFAULT_TOL = 1e-17
_MAX_TERMS = 400


def _unit_interval(s, name="s"):
    s = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s < 0.0) or np.any(s > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return s


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def chi(s, gamma: GammaParam):
    """``Gamma s / (1 - s)`` on ``[0, 1 - Gamma]``, identity beyond."""
    s = _unit_interval(s)
    a = gamma.one_minus_gamma
    inner = s < a
    denom = np.where(inner, 1.0 - s, 1.0)
    return _out(np.where(inner, gamma.gamma * s / denom, s), s)


def h(s, gamma: GammaParam):
    """``s - chi(s)``; vanishes on ``[1 - Gamma, 1]``."""
    s = _unit_interval(s)
    a = gamma.one_minus_gamma
    inner = s < a
    denom = np.where(inner, 1.0 - s, 1.0)
    return _out(np.where(inner, s * (1.0 - gamma.gamma / denom), 0.0), s)


def h_prime(s, gamma: GammaParam):
    """Derivative of the inner branch of h (extended analytically)."""
    s = np.asarray(s, dtype=float)
    return _out(1.0 - gamma.gamma / (1.0 - s) ** 2, s)


def _series(s, gamma: GammaParam, tol: float, order: int):
    """Partial sums of the iterate series and its first ``order`` derivatives.

    The tail after the last retained term ``t`` is bounded by ``t q/(1-q)``
    where ``q`` is the larger of the measured contraction ratio and the
    a-priori real-slice ratio ``2(1-Gamma)/Gamma``.
    """
    g = gamma.gamma
    a = gamma.one_minus_gamma
    x = np.array(s, dtype=float, copy=True)
    total = x.copy()
    d1 = np.ones_like(x)
    d2 = np.zeros_like(x)
    t1 = d1.copy()
    t2 = d2.copy()
    q = 2.0 * a / g if g > 0 else 1.0
    for _ in range(_MAX_TERMS):
        one_minus_x = 1.0 - x
        factor = 1.0 - g / one_minus_x
        nz = x != 0.0
        if np.any(nz):
            measured = float(np.max(np.abs(factor[nz])))
            if measured > 0.5:
                raise ContractionError(
                    f"iterate ratio {measured:.3g} exceeds 1/2 for gamma={gamma}",
                    measured,
                )
            q = max(q, measured)
        if order >= 1:
            hp = 1.0 - g / one_minus_x**2
            if order >= 2:
                hpp = -2.0 * g / one_minus_x**3
                d2 = hpp * d1 * d1 + hp * d2
                t2 += d2
            d1 = hp * d1
            t1 += d1
        x = x * factor
        total += x
        term = np.max(np.abs(x)) if x.size else 0.0
        if order >= 1 and x.size:
            term = max(term, np.max(np.abs(d1)))
        if order >= 2 and x.size:
            term = max(term, np.max(np.abs(d2)))
        if q >= 1.0 or term * q / (1.0 - q) < tol:
            break
    else:  # pragma: no cover - geometric decay guarantees exit
        raise ContractionError("iterate series did not settle", q)
    return total, t1, t2


def _check_inner(s, gamma):
    s = np.asarray(s, dtype=float)
    a = gamma.one_minus_gamma
    if np.any(~np.isfinite(s)) or np.any(s < 0.0) or np.any(s > a):
        raise DomainError(f"iterate series needs 0 <= s <= 1 - Gamma = {a!r}")
    return s


def psi_tilde(s, gamma: GammaParam, tol: float = DEFAULT_TOL):
    """Sum of the iterates ``h^k(s)``, ``k >= 0``, for ``0 <= s <= 1 - Gamma``."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    s = _check_inner(s, gamma)
    total, _, _ = _series(np.atleast_1d(s), gamma, tol, 0)
    return _out(total.reshape(s.shape), s)


def psi_tilde_derivatives(s, gamma: GammaParam, tol: float = DEFAULT_TOL):
    """Return ``(psi~, psi~', psi~'')`` on ``[0, 1 - Gamma]``."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    s = _check_inner(s, gamma)
    total, t1, t2 = _series(np.atleast_1d(s), gamma, tol, 2)
    shape = s.shape
    return (
        _out(total.reshape(shape), s),
        _out(t1.reshape(shape), s),
        _out(t2.reshape(shape), s),
    )


def _inner_mask(s, gamma):
    # the split point itself belongs to the outer branch
    return s < gamma.one_minus_gamma


def _inner_values(s, gamma, order):
    s1 = np.atleast_1d(s)
    mask = _inner_mask(s1, gamma)
    out = np.zeros_like(s1)
    if np.any(mask):
        vals = _series(s1[mask], gamma, DEFAULT_TOL, order)[order]
        out[mask] = vals
    return mask, out


def psi(s, gamma: GammaParam):
    """Piecewise solution: iterate series below ``1 - Gamma``, identity above."""
    s = _unit_interval(s)
    if gamma.is_kurth:
        return _out(s.copy(), s)
    mask, vals = _inner_values(s, gamma, 0)
    s1 = np.atleast_1d(s)
    return _out(np.where(mask, vals, s1).reshape(s.shape), s)


def psi_prime(s, gamma: GammaParam):
    """psi'; at the split the right-hand value 1 is returned."""
    s = _unit_interval(s)
    if gamma.is_kurth:
        return _out(np.ones_like(s), s)
    mask, vals = _inner_values(s, gamma, 1)
    return _out(np.where(mask, vals, 1.0).reshape(s.shape), s)


def psi_second(s, gamma: GammaParam):
    """psi''; zero on the outer branch."""
    s = _unit_interval(s)
    if gamma.is_kurth:
        return _out(np.zeros_like(s), s)
    mask, vals = _inner_values(s, gamma, 2)
    return _out(np.where(mask, vals, 0.0).reshape(s.shape), s)
