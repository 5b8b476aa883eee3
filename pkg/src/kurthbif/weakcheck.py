"""Monte Carlo checks of the distributional (weak) Vlasov equation.

Static residual: ``A = int f (v . grad_x psi - grad U . grad_v psi) dx dv``
with ``grad U = x`` inside the unit ball for states of uniform density.
Dynamic residual for the transported state
``f_phi(t, x, v) = f(x/phi, phi v - phi' x)`` with the self-similar field
``grad U(t, x) = x / phi^3`` (inside radius ``phi``):
``int dt int f_phi (d_t psi + v . grad_x psi - grad U . grad_v psi)``.
Samples of ``f_phi(t)`` come from samples ``(y, w)`` of ``f`` through the
measure-preserving map ``x = phi y``, ``v = w/phi + phi' y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DomainError, SamplerError
from .kurth import grad_u_kurth
from .reduction import PhasePoint
from .sampling import StateSampler
from .steady import ConstantProfileState, SteadyState

__all__ = [
    "TestFunction",
    "ResidualReport",
    "flow_map",
    "gate_threshold",
    "static_residual",
    "dynamic_residual",
    "transport_l1_continuity",
    "transported_points",
    "residual_batch",
]

# the nominal 3-sigma two-sided level, split across a batch (Bonferroni)
NOMINAL_LEVEL = 2.0 * norm.sf(3.0)


def _bump(z):
    """``exp(-1/(1 - z))`` for ``z < 1`` and its derivative in z."""
    z = np.asarray(z, dtype=float)
    inside = z < 1.0
    gap = np.where(inside, 1.0 - z, 1.0)
    val = np.where(inside, np.exp(-1.0 / gap), 0.0)
    dval = np.where(inside, -val / (gap * gap), 0.0)
    return val, dval


@dataclass(frozen=True, eq=False)
class TestFunction:
    """``T(t) P(x, v) B(|x|^2/R^2) B(|v|^2/R^2)`` with exact derivatives.

    ``P = sum_k c_k prod_i (alpha_ki + beta_ki . z) + sum_j q_j (z . z)^j``
    with ``z = (x, v)``: a sum of products of affine forms (total degree
    ``<= 4`` for random functions) plus an optional polynomial in the flow
    invariant ``|x|^2 + |v|^2``. ``B`` is the standard bump, ``R = radius``,
    and ``T`` a bump on ``window`` (identically 1 without a window).
    """

    coeffs: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    radial: tuple = ()
    radius: float = 2.0
    window: tuple | None = None
    seed: int | None = None

    @classmethod
    def random(
        cls,
        seed: int,
        degree: int = 4,
        terms: int = 3,
        radius: float = 2.0,
        window: tuple | None = None,
    ) -> "TestFunction":
        if not 0 <= degree <= 4:
            raise DomainError("polynomial degree must lie in [0, 4]")
        rng = np.random.default_rng(seed)
        coeffs = rng.standard_normal(terms)
        alpha = rng.standard_normal((terms, degree))
        beta = rng.standard_normal((terms, degree, 6))
        return cls(coeffs, alpha, beta, (), float(radius), window, seed)

    @classmethod
    def of_invariants(cls, radial, radius: float = 2.0, seed=None) -> "TestFunction":
        """Polynomial in ``|x|^2 + |v|^2`` times the bumps (flow invariant)."""
        empty = np.zeros((0, 0))
        return cls(
            np.zeros(0), empty, np.zeros((0, 0, 6)), tuple(radial), float(radius), None, seed
        )

    def with_window(self, window) -> "TestFunction":
        return TestFunction(
            self.coeffs, self.alpha, self.beta, self.radial, self.radius, tuple(window), self.seed
        )

    def _time(self, t):
        t = np.asarray(t, dtype=float)
        if self.window is None:
            return np.ones(t.shape), np.zeros(t.shape)
        a, b = self.window
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        z = ((t - mid) / half) ** 2
        val, dval = _bump(z)
        return val, dval * 2.0 * (t - mid) / (half * half)

    def _poly(self, z):
        # z: (N, 6) -> value (N,), gradient (N, 6)
        val = np.zeros(len(z))
        grad = np.zeros(z.shape)
        for c, al, be in zip(self.coeffs, self.alpha, self.beta):
            forms = al[None, :] + z @ be.T  # (N, D)
            val += c * np.prod(forms, -1)
            for i in range(forms.shape[1]):
                rest = np.prod(np.delete(forms, i, axis=1), -1)
                grad += c * rest[:, None] * be[i][None, :]
        if self.radial:
            q = np.sum(z * z, -1)
            for j, c in enumerate(self.radial):
                val += c * q**j
                if j > 0:
                    grad += (c * j * q ** (j - 1))[:, None] * 2.0 * z
        return val, grad

    def evaluate(self, p: PhasePoint, t=None):
        """Value and partials ``(psi, d_t psi, grad_x psi, grad_v psi)``."""
        x = np.asarray(p.x, dtype=float).reshape(-1, 3)
        v = np.asarray(p.v, dtype=float).reshape(-1, 3)
        z = np.concatenate([x, v], axis=-1)
        pv, pg = self._poly(z)
        r2 = self.radius**2
        bx, dbx = _bump(np.sum(x * x, -1) / r2)
        bv, dbv = _bump(np.sum(v * v, -1) / r2)
        tt = np.zeros(len(x)) if t is None else np.broadcast_to(np.asarray(t, float), (len(x),))
        tv, dtv = self._time(tt)
        space = pv * bx * bv
        gx = (pg[:, :3] * (bx * bv)[:, None] + (pv * bv * dbx * 2.0 / r2)[:, None] * x)
        gv = (pg[:, 3:] * (bx * bv)[:, None] + (pv * bx * dbv * 2.0 / r2)[:, None] * v)
        return (
            tv * space,
            dtv * space,
            tv[:, None] * gx,
            tv[:, None] * gv,
        )


@dataclass(frozen=True)
class ResidualReport:
    """MC estimate of a residual with its standard error."""

    kind: str
    estimate: float
    mc_std_error: float
    samples: int
    gamma_or_eps: str = ""
    tf_seed: int | None = None
    threshold: float = 3.0

    @property
    def z_score(self) -> float:
        return abs(self.estimate) / self.mc_std_error if self.mc_std_error > 0 else math.inf

    @property
    def passed(self) -> bool:
        return self.z_score <= self.threshold

    def with_threshold(self, threshold: float) -> "ResidualReport":
        return ResidualReport(
            self.kind,
            self.estimate,
            self.mc_std_error,
            self.samples,
            self.gamma_or_eps,
            self.tf_seed,
            float(threshold),
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "gamma_or_eps": self.gamma_or_eps,
            "tf_seed": self.tf_seed,
            "estimate": self.estimate,
            "std_error": self.mc_std_error,
            "samples": self.samples,
            "threshold": self.threshold,
            "pass": self.passed,
        }


def gate_threshold(batch_size: int) -> float:
    """z-threshold of the 3-sigma gate with Bonferroni over ``batch_size``."""
    if batch_size < 1:
        raise DomainError("batch size must be positive")
    return float(norm.isf(0.5 * NOMINAL_LEVEL / batch_size))


def flow_map(t, p: PhasePoint) -> PhasePoint:
    """Harmonic flow ``(x cos t + v sin t, -x sin t + v cos t)``."""
    c = np.asarray(np.cos(t))[..., None]
    s = np.asarray(np.sin(t))[..., None]
    x, v = np.asarray(p.x), np.asarray(p.v)
    return PhasePoint(x * c + v * s, -x * s + v * c)


def _report(kind, values, mass, label, seed, n):
    values = np.asarray(values, dtype=float)
    est = mass * float(np.mean(values))
    err = mass * float(np.std(values, ddof=1)) / math.sqrt(n)
    if not err > 0.0:
        raise SamplerError("degenerate Monte Carlo sample (zero variance)")
    return ResidualReport(kind, est, err, n, label, seed)


def _field_for(state: SteadyState):
    if isinstance(state, ConstantProfileState):
        return state.grad_potential
    # uniform unit-ball density: grad U = x inside, x/|x|^3 outside
    return grad_u_kurth


def static_residual(
    state: SteadyState,
    tf: TestFunction,
    samples: int = 20000,
    seed: int = 0,
    *,
    sampler: StateSampler | None = None,
    label: str = "",
) -> ResidualReport:
    """Estimate ``int f (v . grad_x psi - grad U . grad_v psi)``.

    States of uniform unit-ball density use ``grad U = x``; the
    constant-profile control uses its own self-consistent field, so it is a
    genuine non-solution rather than an invariant of the harmonic flow.
    """
    sampler = sampler or StateSampler(state)
    rng = np.random.default_rng(seed)
    p = sampler.sample(samples, rng)
    _, _, gx, gv = tf.evaluate(p)
    field_ = np.asarray(_field_for(state)(p.x)).reshape(-1, 3)
    v = np.asarray(p.v).reshape(-1, 3)
    vals = np.sum(v * gx, -1) - np.sum(field_ * gv, -1)
    return _report("static", vals, sampler.mass, label, tf.seed, samples)


def transported_points(p: PhasePoint, phi, phi_dot) -> PhasePoint:
    """``x = phi y``, ``v = w/phi + phi' y`` (measure preserving)."""
    phi = np.asarray(phi, dtype=float)[..., None]
    phi_dot = np.asarray(phi_dot, dtype=float)[..., None]
    y, w = np.asarray(p.x), np.asarray(p.v)
    return PhasePoint(phi * y, w / phi + phi_dot * y)


def _pullback(p: PhasePoint, phi, phi_dot) -> PhasePoint:
    phi = np.asarray(phi, dtype=float)[..., None]
    phi_dot = np.asarray(phi_dot, dtype=float)[..., None]
    x, v = np.asarray(p.x), np.asarray(p.v)
    return PhasePoint(x / phi, phi * v - phi_dot * x)


def dynamic_residual(
    state: SteadyState,
    orbit,
    tf: TestFunction,
    samples: int = 20000,
    seed: int = 0,
    *,
    sampler: StateSampler | None = None,
    label: str = "",
) -> ResidualReport:
    """Spacetime residual of the transported state over ``tf.window``.

    ``orbit`` supplies ``state_at(t) -> (phi, phi_dot)``; time is sampled
    uniformly on the window, phase space from ``f`` and transported.
    """
    if tf.window is None:
        raise DomainError("dynamic residual needs a test function with a time window")
    a, b = tf.window
    if not b > a:
        raise DomainError("empty time window")
    sampler = sampler or StateSampler(state)
    rng = np.random.default_rng(seed)
    p = sampler.sample(samples, rng)
    t = a + (b - a) * rng.random(samples)
    phi, phi_dot = orbit.state_at(t)
    q = transported_points(p, phi, phi_dot)
    _, dt, gx, gv = tf.evaluate(q, t)
    x = np.asarray(q.x)
    field_ = np.asarray(grad_u_kurth(x / phi[:, None])) / (phi[:, None] ** 2)
    vals = dt + np.sum(np.asarray(q.v) * gx, -1) - np.sum(field_ * gv, -1)
    return _report("dynamic", (b - a) * vals, sampler.mass, label, tf.seed, samples)


def transport_l1_continuity(
    state: SteadyState,
    orbit,
    t0: float,
    dt: float,
    samples: int = 20000,
    seed: int = 0,
    *,
    sampler: StateSampler | None = None,
) -> ResidualReport:
    """MC estimate of ``||f_phi(t0 + dt) - f_phi(t0)||_1``.

    Points are drawn from the half-half mixture ``m`` of the two densities
    and ``2 |g1 - g0| / (g0 + g1)`` is averaged, a bounded integrand.
    """
    if dt == 0.0:
        return ResidualReport("transport_l1", 0.0, 0.0, 0, "dt=0")
    sampler = sampler or StateSampler(state)
    rng = np.random.default_rng(seed)
    p = sampler.sample(samples, rng)
    s0 = orbit.state_at(np.full(samples, t0))
    s1 = orbit.state_at(np.full(samples, t0 + dt))
    first = rng.random(samples) < 0.5
    phi = np.where(first, s0[0], s1[0])
    phi_dot = np.where(first, s0[1], s1[1])
    q = transported_points(p, phi, phi_dot)
    g0 = np.asarray(state.evaluate(_pullback(q, s0[0], s0[1])))
    g1 = np.asarray(state.evaluate(_pullback(q, s1[0], s1[1])))
    denom = g0 + g1
    ratio = np.where(denom > 0.0, 2.0 * np.abs(g1 - g0) / np.where(denom > 0, denom, 1.0), 0.0)
    est = sampler.mass * float(np.mean(ratio))
    err = sampler.mass * float(np.std(ratio, ddof=1)) / math.sqrt(samples)
    return ResidualReport("transport_l1", est, err, samples, f"dt={dt!r}")


def residual_batch(reports) -> dict:
    """Apply the Bonferroni-adjusted gate to a batch of reports."""
    reports = list(reports)
    thr = gate_threshold(len(reports))
    gated = [r.with_threshold(thr) for r in reports]
    return {
        "threshold": thr,
        "reports": gated,
        "passed": all(r.passed for r in gated),
        "max_z": max(r.z_score for r in gated),
    }
