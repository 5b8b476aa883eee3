"""Closed forms of the Kurth state and its self-similar time-periodic family."""

from __future__ import annotations

import math

import numpy as np

from .quadrature import gauss_legendre
from .reduction import PhasePoint, invariants

__all__ = [
    "KURTH_NORM",
    "RHO0",
    "f_kurth",
    "rho_kurth",
    "u_kurth",
    "grad_u_kurth",
    "scaled_density",
    "scaled_potential",
    "scaled_grad_potential",
    "shell_potential",
]

#: Prefactor ``3/(4 pi^3)`` of the Kurth distribution.
KURTH_NORM = 3.0 / (4.0 * math.pi**3)
#: Uniform density ``3/(4 pi)`` on the unit ball.
RHO0 = 3.0 / (4.0 * math.pi)


def _scalar(x, like):
    return float(x) if np.ndim(like) == 0 else x


def f_kurth(p: PhasePoint):
    """``(3/4pi^3) (1 - |x|^2 - |v|^2 + |x^v|^2)^{-1/2}`` on its support.

    Both conditions (positive radicand, ``|x ^ v| < 1``) are tested
    separately: the first does not imply the second.
    """
    energy, ell2 = invariants(p)
    arg = 1.0 - np.asarray(energy) + np.asarray(ell2)
    live = (arg > 0.0) & (np.asarray(ell2) < 1.0)
    val = np.where(live, KURTH_NORM / np.sqrt(np.where(live, arg, 1.0)), 0.0)
    return float(val) if p.shape == () else val


def _radius(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.sum(x * x, axis=-1))


def rho_kurth(x):
    r = _radius(x)
    return _scalar(np.where(r <= 1.0, RHO0, 0.0), r)


def u_kurth(x):
    """``|x|^2/2 - 3/2`` inside the unit ball, ``-1/|x|`` outside."""
    r = _radius(x)
    inside = r <= 1.0
    val = np.where(inside, 0.5 * r * r - 1.5, -1.0 / np.where(inside, 1.0, r))
    return _scalar(val, r)


def grad_u_kurth(x):
    """``x`` inside the unit ball, ``x/|x|^3`` outside."""
    x = np.asarray(x, dtype=float)
    r = _radius(x)[..., None]
    return np.where(r <= 1.0, x, x / np.where(r <= 1.0, 1.0, r) ** 3)


def _phi_of(orbit, t):
    if callable(orbit):
        return np.asarray(orbit(t), dtype=float)
    return np.asarray(orbit.phi_at(t), dtype=float)


def scaled_density(t, x, orbit):
    """``phi(t)^{-3} rho_K(x/phi(t))``; ``orbit`` supplies ``phi_at(t)``."""
    ph = _phi_of(orbit, t)
    x = np.asarray(x, dtype=float)
    return ph**-3 * np.asarray(rho_kurth(x / ph[..., None]))


def scaled_potential(t, x, orbit):
    """``phi(t)^{-1} U_K(x/phi(t))``."""
    ph = _phi_of(orbit, t)
    x = np.asarray(x, dtype=float)
    return np.asarray(u_kurth(x / ph[..., None])) / ph


def scaled_grad_potential(t, x, orbit):
    """Spatial gradient ``phi(t)^{-2} grad U_K(x/phi(t))``."""
    ph = np.asarray(_phi_of(orbit, t), dtype=float)
    x = np.asarray(x, dtype=float)
    return grad_u_kurth(x / ph[..., None]) / (ph[..., None] ** 2)


def shell_potential(rho, r, rmax: float = 1.0, n: int = 64, breaks=()):
    """Potential of a radial density by the shell formula.

    ``U(r) = -(1/r) int_0^r 4 pi s^2 rho ds - int_r^rmax 4 pi s rho ds`` with
    ``rho`` supported in ``[0, rmax]``. ``breaks`` are radii where ``rho``
    is non-smooth.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty(r.shape)
    for i, ri in enumerate(r):
        inner_hi = min(ri, rmax)
        total = 0.0
        for lo, hi in _split(0.0, inner_hi, breaks):
            s, w = gauss_legendre(lo, hi, n)
            total -= np.sum(w * 4.0 * np.pi * s * s * rho(s)) / ri
        for lo, hi in _split(inner_hi, rmax, breaks):
            s, w = gauss_legendre(lo, hi, n)
            total -= np.sum(w * 4.0 * np.pi * s * rho(s))
        out[i] = total
    return out if out.size > 1 else float(out[0])


def _split(lo, hi, breaks):
    if hi <= lo:
        return []
    edges = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    return list(zip(edges[:-1], edges[1:]))
