"""Radial oscillation ``phi'' = -1/phi^2 + 1/phi^3`` of the self-similar family.

The ODE route (:func:`integrate`) is the reference. The Kepler-anomaly route
(:func:`kepler_anomaly_phi`) is a fast path whose parameters are fixed by
matching the ODE energy ``E = -(1 - eps^2)/2`` with unit angular momentum:
eccentricity ``e = |eps|``, semi-major axis ``1/(1 - e^2)`` and mean motion
``(1 - e^2)^{3/2}``. Other published normalizations of this correspondence
are not self-consistent, so nothing else is assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, DomainError
from .io import write_csv
from .quadrature import sqrt_endpoint_rule

__all__ = [
    "OrbitState",
    "Trajectory",
    "PeriodicOrbit",
    "potential",
    "energy",
    "integrate",
    "period_closed_form",
    "period_quadrature",
    "solve_kepler",
    "kepler_anomaly_phi",
    "pericentre_time",
    "TRAJECTORY_HEADER",
]

DEFAULT_TOL = 1e-13
TRAJECTORY_HEADER = ("t", "phi", "phi_dot", "energy")


def potential(phi):
    """``V(phi) = -1/phi + 1/(2 phi^2)``."""
    phi = np.asarray(phi, dtype=float)
    return -1.0 / phi + 0.5 / (phi * phi)


def energy(phi, phi_dot):
    return 0.5 * np.asarray(phi_dot, dtype=float) ** 2 + potential(phi)


@dataclass(frozen=True)
class OrbitState:
    """A point ``(t, phi, phi_dot)`` of the radial motion."""

    t: float
    phi: float
    phi_dot: float

    def __post_init__(self):
        if not (math.isfinite(self.phi) and self.phi > 0.0):
            raise DomainError("phi must be positive and finite")
        if not (math.isfinite(self.t) and math.isfinite(self.phi_dot)):
            raise DomainError("t and phi_dot must be finite")

    @property
    def energy(self) -> float:
        return float(energy(self.phi, self.phi_dot))

    @classmethod
    def from_eps(cls, eps: float, t: float = 0.0) -> "OrbitState":
        """Initial data ``(phi, phi_dot) = (1, eps)``."""
        return cls(float(t), 1.0, float(eps))


def _rhs(t, y):
    phi, dphi = y
    return [dphi, -1.0 / phi**2 + 1.0 / phi**3]


def _collision(t, y):
    return y[0] - 1e-8


_collision.terminal = True
_collision.direction = -1


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Dense-output solution on ``[t0, t1]``."""

    t: np.ndarray
    phi: np.ndarray
    phi_dot: np.ndarray
    sol: object = field(repr=False)
    tol: float = DEFAULT_TOL

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t1(self) -> float:
        return float(self.t[-1])

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        span = max(abs(self.t0), abs(self.t1), 1.0) * 1e-12
        if np.any(t < self.t0 - span) or np.any(t > self.t1 + span):
            raise DomainError(
                f"time outside the integrated window [{self.t0}, {self.t1}]"
            )
        return np.clip(t, self.t0, self.t1)

    def state_at(self, t):
        """``(phi, phi_dot)`` at ``t`` from the dense output."""
        t = self._check(t)
        y = self.sol(np.atleast_1d(t))
        if np.ndim(t) == 0:
            return float(y[0, 0]), float(y[1, 0])
        return y[0].reshape(t.shape), y[1].reshape(t.shape)

    def phi_at(self, t):
        return self.state_at(t)[0]

    def phi_dot_at(self, t):
        return self.state_at(t)[1]

    def energies(self) -> np.ndarray:
        return energy(self.phi, self.phi_dot)

    def energy_drift(self) -> float:
        """``max |E(t) - E(t0)| / |E(t0)|`` over the stored steps."""
        e = self.energies()
        return float(np.max(np.abs(e - e[0])) / max(abs(e[0]), 1e-300))

    def rows(self):
        e = self.energies()
        for row in zip(self.t, self.phi, self.phi_dot, e):
            yield tuple(float(x) for x in row)

    def to_csv(self, path) -> None:
        write_csv(path, TRAJECTORY_HEADER, self.rows())


def integrate(
    ic: OrbitState, t_final: float, tol: float = DEFAULT_TOL, *, max_step: float = 0.05
) -> Trajectory:
    """Integrate from ``ic`` to ``t_final`` with DOP853 and dense output.

    ``tol`` is used as both relative and absolute tolerance; the result is
    checked for energy drift against ``max(1e3 tol, 1e-12)``. Approach to
    ``phi = 0`` (impossible for bound orbits) stops with an error.
    """
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    if t_final == ic.t:
        raise DomainError("empty integration window")
    sol = solve_ivp(
        _rhs,
        (ic.t, float(t_final)),
        [ic.phi, ic.phi_dot],
        method="DOP853",
        rtol=tol,
        atol=tol,
        dense_output=True,
        events=_collision,
        max_step=max_step,
    )
    if sol.status == 1:
        raise ConvergenceError("trajectory approached phi = 0")
    if not sol.success:
        raise ConvergenceError(f"integration failed: {sol.message}")
    traj = Trajectory(sol.t, sol.y[0], sol.y[1], sol.sol, tol)
    drift = traj.energy_drift()
    if drift > max(1e3 * tol, 1e-12):
        raise ConvergenceError(f"energy drift {drift:.3g} above tolerance")
    return traj


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not abs(eps) < 1.0:
        raise DomainError("|eps| >= 1 gives an unbounded orbit")
    return eps


def period_closed_form(eps: float) -> float:
    """``2 pi / (1 - eps^2)^{3/2}``."""
    eps = _check_eps(eps)
    return 2.0 * math.pi / (1.0 - eps * eps) ** 1.5


def period_quadrature(eps: float, n: int = 64) -> float:
    """``2 int dphi / sqrt(2 (E - V(phi)))`` between the turning points.

    Both turning points are inverse-root singularities of the integrand;
    the sin^2 substitution removes them.
    """
    eps = _check_eps(eps)
    lo, hi = 1.0 / (1.0 + abs(eps)), 1.0 / (1.0 - abs(eps))
    if hi == lo:
        return 2.0 * math.pi
    e0 = -0.5 * (1.0 - eps * eps)
    x, w = sqrt_endpoint_rule(lo, hi, n)
    kinetic = 2.0 * (e0 - potential(x))
    return float(2.0 * np.sum(w / np.sqrt(kinetic)))


@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    """Periodic solution with initial data ``(1, eps)``."""

    eps: float
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "eps", _check_eps(self.eps))

    @property
    def period(self) -> float:
        return period_closed_form(self.eps)

    @property
    def phi_min(self) -> float:
        return 1.0 / (1.0 + abs(self.eps))

    @property
    def phi_max(self) -> float:
        return 1.0 / (1.0 - abs(self.eps))

    @property
    def energy(self) -> float:
        return -0.5 * (1.0 - self.eps * self.eps)

    @property
    def initial(self) -> OrbitState:
        return OrbitState.from_eps(self.eps)

    def trajectory(self, periods: float = 1.0) -> Trajectory:
        return integrate(self.initial, periods * self.period, self.tol)

    @property
    def _one_period(self) -> Trajectory:
        cached = self.__dict__.get("_traj")
        if cached is None:
            cached = self.trajectory(1.0)
            self.__dict__["_traj"] = cached
        return cached

    def state_at(self, t):
        """``(phi, phi_dot)`` at any ``t`` by periodic extension."""
        if self.eps == 0.0:
            t = np.asarray(t, dtype=float)
            ones = np.ones(t.shape)
            return (1.0, 0.0) if t.ndim == 0 else (ones, 0.0 * ones)
        tm = np.mod(np.asarray(t, dtype=float), self.period)
        return self._one_period.state_at(tm)

    def phi_at(self, t):
        return self.state_at(t)[0]

    def phi_dot_at(self, t):
        return self.state_at(t)[1]

    def report(self, periods: int = 1) -> dict:
        """Turning points, period and return error from the ODE route."""
        traj = self.trajectory(periods)
        grid = np.linspace(0.0, periods * self.period, 4000 * max(1, periods) + 1)
        phi, _ = traj.state_at(grid)
        end = traj.state_at(periods * self.period)
        return {
            "eps": self.eps,
            "period": self.period,
            "period_quadrature": period_quadrature(self.eps),
            "phi_min": self.phi_min,
            "phi_max": self.phi_max,
            "phi_min_observed": _refine_extremum(traj, grid, phi, np.argmin),
            "phi_max_observed": _refine_extremum(traj, grid, phi, np.argmax),
            "return_error": float(
                math.hypot(end[0] - 1.0, end[1] - self.eps)
            ),
            "energy": self.energy,
            "energy_drift": traj.energy_drift(),
        }


def _refine_extremum(traj: Trajectory, grid, phi, pick) -> float:
    # phi_dot changes sign at a turning point: locate it on the dense output
    from scipy.optimize import brentq

    i = int(pick(phi))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    f_lo, f_hi = traj.phi_dot_at(lo), traj.phi_dot_at(hi)
    if f_lo * f_hi > 0.0:
        return float(phi[i])
    t_star = brentq(traj.phi_dot_at, lo, hi, xtol=1e-15)
    return float(traj.phi_at(t_star))


# ------------------------------------------------------------------ Kepler


def solve_kepler(mean_anomaly, e: float, tol: float = 1e-13, max_iter: int = 60):
    """Eccentric anomaly ``E`` with ``E - e sin E = M``, vectorized.

    Newton steps are kept inside a bracket ``[M - e, M + e]`` (after
    reducing M to ``[0, 2 pi)``); a step that leaves the bracket is replaced
    by bisection, so convergence is guaranteed for ``0 <= e < 1``.
    """
    if not 0.0 <= e < 1.0:
        raise DomainError("eccentricity must lie in [0, 1)")
    m_in = np.asarray(mean_anomaly, dtype=float)
    turns = np.floor(m_in / (2.0 * math.pi))
    m = m_in - 2.0 * math.pi * turns
    lo, hi = m - e, m + e
    x = np.where(e < 0.8, m, math.pi * np.ones_like(m))
    x = np.clip(x, lo, hi)
    for _ in range(max_iter):
        f = x - e * np.sin(x) - m
        if np.all(np.abs(f) <= tol):
            break
        lo = np.where(f < 0.0, x, lo)
        hi = np.where(f > 0.0, x, hi)
        step = x - f / (1.0 - e * np.cos(x))
        outside = (step <= lo) | (step >= hi)
        x = np.where(outside, 0.5 * (lo + hi), step)
    else:
        f = x - e * np.sin(x) - m
        if np.any(np.abs(f) > tol):
            raise ConvergenceError("Kepler iteration did not reach tolerance")
    out = x + 2.0 * math.pi * turns
    return float(out) if out.ndim == 0 else out


def pericentre_time(eps: float) -> float:
    """Time of the pericentre passage preceding the state ``(1, eps)`` at t=0."""
    eps = _check_eps(eps)
    e = abs(eps)
    if e == 0.0:
        return 0.0
    # r = 1 at cos E = e; outward motion (eps > 0) has E in (0, pi)
    e_anom = math.acos(e) * (1.0 if eps > 0.0 else -1.0)
    m0 = e_anom - e * math.sin(e_anom)
    return -m0 / (1.0 - e * e) ** 1.5


def kepler_anomaly_phi(t, e: float, t0: float = 0.0):
    """Radius ``a (1 - e cos E)`` with ``a = 1/(1 - e^2)`` at time ``t``.

    ``t0`` is the pericentre time; the mean anomaly is
    ``(1 - e^2)^{3/2} (t - t0)``.
    """
    if not 0.0 <= e < 1.0:
        raise DomainError("eccentricity must lie in [0, 1)")
    a = 1.0 / (1.0 - e * e)
    mean = (1.0 - e * e) ** 1.5 * (np.asarray(t, dtype=float) - t0)
    big_e = solve_kepler(mean, e)
    out = a * (1.0 - e * np.cos(big_e))
    return float(out) if np.ndim(out) == 0 else out
