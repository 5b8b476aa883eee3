"""The steady states f_Gamma, their density and mass, and the Gamma -> 1 limit.

Every state here is a function of the two harmonic-flow invariants
``E = |x|^2 + |v|^2`` and ``l^2 = |x ^ v|^2``::

    f(x, v) = F(u) 1{l^2 <= c},    u = l^2 - E  in  [-1, 0].

For f_Gamma, ``F(u) = (3/4pi) phi'(u + 1)`` and ``c = Gamma``. The measure
``dx dv`` pushes forward to ``2 pi^3 dE dl^2`` on ``{l <= E/2}``, i.e. to
``2 pi^3 du dl^2`` on ``{l^2 <= (1 - sqrt(1 + u))^2}``; mass and L1
distance are one-dimensional integrals in u on that image.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from . import abel, funceq
from .errors import AccuracyError, DomainError
from .kurth import KURTH_NORM, RHO0, f_kurth
from .params import GammaParam
from .quadrature import DEFAULT_SPEC, QuadratureSpec, gauss_legendre, sqrt_endpoint_rule
from .reduction import (
    PhasePoint,
    _sorted_pieces,
    _s_composite,
    invariants,
    reduced_integral,
    velocity_integral,
)

__all__ = [
    "SteadyState",
    "KurthState",
    "GammaState",
    "ConstantProfileState",
    "MixtureState",
    "PointClass",
    "SingularSets",
    "big_phi",
    "q_weight",
    "f_gamma",
    "rho_f_gamma",
    "rho_velocity",
    "total_mass",
    "l1_distance_to_kurth",
    "classify_point",
    "m1",
]

PUSHFORWARD = 2.0 * math.pi**3


def m1(u):
    """Largest admissible ``l^2`` at given u: ``(1 - sqrt(1 + u))^2``."""
    u = np.asarray(u, dtype=float)
    return (1.0 - np.sqrt(np.clip(1.0 + u, 0.0, None))) ** 2


def _u_crit(c: float) -> float:
    """u at which ``m1(u) = c``."""
    return (1.0 - math.sqrt(c)) ** 2 - 1.0


# ------------------------------------------------------------------ states


class SteadyState:
    """Base class: ``f = F(u) 1{l^2 <= cutoff}`` on ``-1 <= u <= 0``."""

    kind: str = "abstract"
    cutoff: float = 1.0

    def F(self, u):  # pragma: no cover - abstract
        raise NotImplementedError

    def F_s(self, s):
        """``F(s - 1)``; overridden where the shift would lose digits near s = 0."""
        return self.F(np.asarray(s) - 1.0)

    @property
    def u_breaks(self) -> tuple:
        """u-values where F is non-smooth (jumps or root singularities)."""
        return ()

    def components(self):
        return [(1.0, self)]

    def __call__(self, p: PhasePoint):
        return self.evaluate(p)

    def evaluate(self, p: PhasePoint):
        energy, ell2 = invariants(p)
        # s = 1 + u formed directly: u + 1 would lose digits near u = -1
        s = 1.0 - np.asarray(energy) + np.asarray(ell2)
        live = (s > 0.0) & (s <= 1.0) & (np.asarray(ell2) <= self.cutoff)
        ss = np.where(live, s, 0.5)
        val = np.where(live, self.F_s(ss), 0.0)
        return float(val) if p.shape == () else val

    def in_support(self, p: PhasePoint, tol: float = 0.0):
        energy, ell2 = invariants(p)
        w = np.asarray(energy) - np.asarray(ell2)
        return (w >= -tol) & (w <= 1.0 + tol) & (np.asarray(ell2) <= self.cutoff + tol)

    def mass(self) -> float:
        """Total mass through the invariant pushforward."""
        return _invariant_integral(self.F_s, self.cutoff, self.u_breaks)

    def rho(self, r):
        """Spatial density at radius ``r`` (closed form or quadrature)."""
        return _rho_generic(self, r)


@dataclass(frozen=True)
class KurthState(SteadyState):
    kind: str = "Kurth"
    cutoff: float = 1.0

    def F(self, u):
        return KURTH_NORM / np.sqrt(np.asarray(u) + 1.0)

    def F_s(self, s):
        return KURTH_NORM / np.sqrt(np.asarray(s))

    def evaluate(self, p):
        return f_kurth(p)

    def rho(self, r):
        r = np.asarray(r, dtype=float)
        val = np.where(r <= 1.0, RHO0, 0.0)
        return float(val) if val.ndim == 0 else val


@dataclass(frozen=True, eq=False)
class GammaState(SteadyState):
    """f_Gamma evaluated through the Chebyshev cache of phi'."""

    gamma: GammaParam = field(default_factory=GammaParam.kurth)
    order: int = abel.DEFAULT_ORDER
    kind: str = "Gamma"

    @property
    def cutoff(self) -> float:
        return self.gamma.gamma

    @property
    def u_breaks(self) -> tuple:
        # the jump at -Gamma plus geometric grading towards the 1/sqrt(1+u)
        # singularity, which sits only 1 - Gamma below the jump
        if self.gamma.is_kurth:
            return ()
        a = self.gamma.one_minus_gamma
        pts = [-self.gamma.gamma]
        step = 4.0 * a
        while step < 0.5:
            pts.append(-1.0 + step)
            step *= 4.0
        return tuple(pts)

    @cached_property
    def profile(self) -> abel.ChebProfile:
        return abel.cheb_profile(self.gamma, self.order)

    def F(self, u):
        return RHO0 * self.profile.phi_prime(np.asarray(u) + 1.0)

    def F_s(self, s):
        return RHO0 * self.profile.phi_prime(np.asarray(s))

    def rho(self, r, spec: QuadratureSpec | None = None):
        return rho_f_gamma(r, self.gamma, spec)


@dataclass(frozen=True)
class ConstantProfileState(SteadyState):
    """Deliberate non-solution: constant F on the support of f_Gamma, normalized to mass 1."""

    gamma: GammaParam = field(default_factory=GammaParam.kurth)
    kind: str = "Constant"

    @property
    def cutoff(self) -> float:
        return self.gamma.gamma

    @cached_property
    def level(self) -> float:
        return 1.0 / _invariant_integral(np.ones_like, self.cutoff, ())

    def F(self, u):
        return np.full(np.shape(u), self.level)

    @cached_property
    def _mass_profile(self):
        # enclosed mass on a graded radial grid for the self-consistent field
        edges = [0.0, math.sqrt(self.cutoff), 1.0]
        r_nodes, m_vals = [0.0], [0.0]
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi <= lo:
                continue
            t = np.linspace(0.0, 1.0, 121)[1:]
            pts = lo + (hi - lo) * np.sin(0.5 * np.pi * t) ** 2
            prev = lo
            for pt in pts:
                nodes, w = gauss_legendre(prev, pt, 8)
                rho = np.array([self.rho(x) for x in nodes])
                m_vals.append(m_vals[-1] + float(np.sum(w * 4 * np.pi * nodes**2 * rho)))
                r_nodes.append(pt)
                prev = pt
        return PchipInterpolator(np.array(r_nodes), np.array(m_vals))

    def grad_potential(self, x):
        """``M(r)/r^2 x/r`` from the state's own density."""
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        rc = np.clip(r, 0.0, 1.0)
        mass = self._mass_profile(rc)
        safe = np.where(r > 0.0, r, 1.0)
        return np.where((r > 0.0)[..., None], (mass / safe**3)[..., None] * x, 0.0)


@dataclass(frozen=True, eq=False)
class MixtureState(SteadyState):
    """Convex combination of steady states."""

    parts: tuple = ()
    kind: str = "Mixture"

    def __post_init__(self):
        if not self.parts:
            raise DomainError("a mixture needs at least one component")
        weights = np.array([w for w, _ in self.parts], dtype=float)
        if np.any(weights < 0.0) or np.any(weights > 1.0):
            raise DomainError("mixture weights must lie in [0, 1]")
        if abs(float(np.sum(weights)) - 1.0) > 1e-12:
            raise DomainError("mixture weights must sum to 1")

    def components(self):
        out = []
        for w, st in self.parts:
            out.extend((w * w2, s2) for w2, s2 in st.components())
        return out

    @property
    def cutoff(self) -> float:
        return max(st.cutoff for _, st in self.parts)

    def evaluate(self, p):
        return sum(w * np.asarray(st.evaluate(p)) for w, st in self.parts)

    def F(self, u):
        # only meaningful on l^2 below every cutoff
        return sum(w * np.asarray(st.F(u)) for w, st in self.parts)

    def F_s(self, s):
        return sum(w * np.asarray(st.F_s(s)) for w, st in self.parts)

    def mass(self) -> float:
        return float(sum(w * st.mass() for w, st in self.parts))

    def rho(self, r, spec: QuadratureSpec | None = None):
        vals = []
        for w, st in self.parts:
            if isinstance(st, (GammaState, MixtureState)):
                vals.append(w * np.asarray(st.rho(r, spec)))
            else:
                vals.append(w * np.asarray(st.rho(r)))
        total = sum(vals)
        return float(total) if np.ndim(total) == 0 else total


# -------------------------------------------------------- profile values


def big_phi(u, gamma: GammaParam):
    """``Phi(u) = phi(u + 1)`` on ``[-1, 0]``, zero outside."""
    u = np.asarray(u, dtype=float)
    live = (u >= -1.0) & (u <= 0.0)
    val = np.zeros(u.shape)
    if np.any(live):
        val[live] = abel.cheb_profile(gamma).phi(u[live] + 1.0)
    return float(val) if val.ndim == 0 else val


def q_weight(u, gamma: GammaParam):
    """``Q(u) = (3/4pi) Phi'(u)`` on ``(-1, 0]``, zero elsewhere."""
    u = np.asarray(u, dtype=float)
    live = (u > -1.0) & (u <= 0.0)
    val = np.zeros(u.shape)
    if np.any(live):
        val[live] = RHO0 * abel.cheb_profile(gamma).phi_prime(u[live] + 1.0)
    return float(val) if val.ndim == 0 else val


def f_gamma(p: PhasePoint, gamma: GammaParam):
    """``(3/4pi) Phi'(l^2 - |x|^2 - |v|^2) 1{l^2 <= Gamma}``.

    On the jump set ``l^2 - |x|^2 - |v|^2 = -Gamma`` the limit from the
    side ``|x|^2 + |v|^2 - l^2 > Gamma`` is returned.
    """
    return GammaState(gamma).evaluate(p)


# ----------------------------------------------------------------- density


def _abel_phi(s, gamma, spec):
    order = spec.u_nodes
    bps = () if gamma.is_kurth else (gamma.one_minus_gamma,)
    return np.asarray(
        abel.abel_apply(
            lambda x: abel.phi(x, gamma, abel.DEFAULT_ORDER),
            s,
            spec,
            breakpoints=bps,
            order=order,
        )
    )


def rho_f_gamma(r, gamma: GammaParam, spec: QuadratureSpec | None = None):
    """Density of f_Gamma from the two-branch Abel identity.

    With ``s = 1 - r^2``::

        rho = (3/4pi) (pi/s) [(I^{1/2} phi)(s) - (I^{1/2} phi)(h(s))]

    where the shifted term vanishes for ``r^2 <= Gamma`` (``h = 0`` there).
    At ``r = 1`` the limit ``s -> 0`` is evaluated from the leading
    ``sqrt(s)`` coefficient of phi.
    """
    spec = spec or DEFAULT_SPEC
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise DomainError("r must be non-negative")
    flat = r.reshape(-1)
    out = np.zeros(flat.shape)
    inside = flat < 1.0
    if np.any(inside):
        s = 1.0 - flat[inside] ** 2
        hs = np.asarray(funceq.h(s, gamma))
        here = _abel_phi(s, gamma, spec)
        shifted = np.where(hs > 0.0, _abel_phi(hs, gamma, spec), 0.0)
        out[inside] = RHO0 * math.pi * (here - shifted) / s
    edge = flat == 1.0
    if np.any(edge):
        tiny = 1e-200
        coef = float(abel.phi(tiny, gamma)) / math.sqrt(tiny)
        out[edge] = RHO0 * 0.5 * math.pi**2 * coef * gamma.gamma
    out = out.reshape(r.shape)
    return float(out) if out.ndim == 0 else out


def rho_velocity(r: float, state: SteadyState | GammaParam, spec=None) -> float:
    """Independent density route: velocity quadrature of the raw state at ``r e3``."""
    if isinstance(state, GammaParam):
        state = GammaState(state)
    spec = spec or DEFAULT_SPEC
    r = float(r)
    if not 0.0 < r < 1.0:
        raise DomainError("rho_velocity needs 0 < r < 1")
    r2 = r * r
    c = state.cutoff
    x = np.array([0.0, 0.0, r])
    levels = sorted({-1.0, *state.u_breaks})

    def g(v):
        xb = np.broadcast_to(x, v.shape)
        return state.evaluate(PhasePoint(xb, v))

    pr_breaks = [math.sqrt(1.0 - r2)]
    if r2 > c:
        # the cutoff meets the top l^2 = r^2 (1 - p^2) of the velocity ball
        pr_breaks.append(math.sqrt(1.0 - c / r2))
    for b in levels:
        if -b - r2 > 0.0:
            pr_breaks.append(math.sqrt(-b - r2))
        # where the level line meets the top of the velocity ball
        if 0.0 < 1.0 + b < r2:
            pr_breaks.append(math.sqrt((1.0 + b) / r2))
        # where the level line meets the cutoff l^2 = c
        cross = -b - r2 - c * (1.0 - r2) / r2
        if cross > 0.0:
            pr_breaks.append(math.sqrt(cross))

    def ell2_breaks(p):
        cols = [-(b + r2 + p * p) * r2 / (1.0 - r2) for b in levels]
        cols.append(np.full(p.shape, c))
        return np.stack(cols, -1)

    # the state depends on v only through invariants independent of theta
    def focus(p):
        # l^2 at u = -1, where F may carry 1/sqrt(1 + u)
        return (1.0 - r2 - p * p) * r2 / (1.0 - r2)

    return velocity_integral(
        g,
        r,
        spec,
        pr_breaks=pr_breaks,
        ell2_breaks=ell2_breaks,
        ell2_focus=focus,
        theta_nodes=2,
    )


def _rho_generic(state: SteadyState, r):
    """Density by p_r quadrature of the u-antiderivative (generic F)."""
    r = float(r)
    if r >= 1.0:
        return 0.0
    if r == 0.0:
        r = 1e-12
    r2 = r * r
    c = state.cutoff
    pmax = math.sqrt(1.0 - r2)
    breaks = {0.0, pmax}
    gbar = r2 + c * (1.0 - r2) / r2
    if r2 > c:
        breaks.add(math.sqrt(max(0.0, 1.0 - gbar)))
    for b in state.u_breaks:
        if -b - r2 > 0.0:
            breaks.add(math.sqrt(-b - r2))
    edges = np.array(sorted(breaks))
    p, wp = sqrt_endpoint_rule(edges[:-1], edges[1:], 24)
    p, wp = p.ravel(), wp.ravel()
    u_hi = -r2 - p * p
    u_lo = np.maximum(-1.0, -gbar - p * p) if r2 > c else np.full(p.shape, -1.0)
    u_lo = np.minimum(u_lo, u_hi)
    u_edges = _sorted_pieces(u_lo, u_hi, list(state.u_breaks))
    s, wu = _s_composite(u_edges, 24)
    inner = np.sum(wu * state.F_s(s), axis=-1)
    return math.pi / (1.0 - r2) * 2.0 * float(np.sum(wp * inner))


def _u_integral(F, lo, hi, breaks, n=24):
    if hi <= lo:
        return 0.0
    edges = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        u, w = sqrt_endpoint_rule(a, b, n)
        total += float(np.sum(w * F(u)))
    return total


# ------------------------------------------------------------ mass, L1


def _invariant_integral(F_s, c, breaks, n=40, extra=()):
    """``2 pi^3 int_{-1}^0 F(u) min(c, m1(u)) du`` with break handling.

    ``F_s`` takes ``s = 1 + u``; ``breaks`` and ``extra`` are u-values.
    """
    edges = {-1.0, 0.0, _u_crit(c), *[b for b in breaks if -1.0 < b < 0.0]}
    edges |= {b for b in extra if -1.0 < b < 0.0}
    edges = np.array(sorted(edges))

    def run(m):
        s, w = _s_composite(edges, m)
        cap = np.minimum(c, (1.0 - np.sqrt(s)) ** 2)
        return PUSHFORWARD * float(np.sum(w * F_s(s) * cap))

    value = run(n)
    gap = abs(value - run((2 * n) // 3))
    if gap > 1e-9 * max(1.0, abs(value)):
        raise AccuracyError(f"invariant quadrature gap {gap:.3g}", gap)
    return value


def _radial_mass(gamma, spec):
    edges = sorted({0.0, 1.0, *([math.sqrt(gamma.gamma)] if gamma.gamma < 1 else [])})
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        r, w = sqrt_endpoint_rule(lo, hi, spec.radial_nodes)
        total += float(np.sum(w * 4.0 * math.pi * r * r * rho_f_gamma(r, gamma, spec)))
    return total


def total_mass(
    gamma: GammaParam, spec: QuadratureSpec | None = None, route: str = "reduced"
) -> float:
    """Mass of f_Gamma.

    Routes: ``"reduced"`` integrates the profile weight over the support in ``(r, p_r, u)``;
    ``"invariant"`` uses the one-dimensional pushforward; ``"radial"``
    integrates ``4 pi r^2 rho`` from the Abel density identity.
    """
    spec = spec or DEFAULT_SPEC
    state = GammaState(gamma)
    if route == "reduced":
        return reduced_integral(
            lambda r, p, u: state.F(np.clip(u, -1.0, 0.0))
            * (u > -1.0),
            None,
            spec,
            gamma,
            u_breaks=state.u_breaks,
            pr_even=True,
        )
    if route == "invariant":
        return state.mass()
    if route == "radial":
        return _radial_mass(gamma, spec)
    raise DomainError(f"unknown mass route {route!r}")


def mass_upper_bound(gamma: GammaParam) -> float:
    """``24 pi^2 ||Q||_1 int_0^1 r^2/sqrt(1-r^2) dr`` with ``||Q||_1 = (3/4pi) phi(1)``."""
    q_l1 = RHO0 * float(abel.cheb_profile(gamma).phi(1.0))
    return 24.0 * math.pi**2 * q_l1 * (math.pi / 4.0)


def _sign_roots(fn, lo, hi, count=400):
    """Sign changes of ``fn`` on ``[lo, hi]`` located by bracketing + brentq."""
    u = lo + (hi - lo) * np.sin(0.5 * np.pi * np.linspace(0.0, 1.0, count + 1)) ** 2
    u = u[1:-1]
    vals = fn(u)
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(brentq(lambda t: float(fn(np.array([t]))[0]), u[i], u[i + 1],
                            xtol=1e-15, rtol=1e-15))
    return roots


def l1_distance_to_kurth(gamma: GammaParam, spec: QuadratureSpec | None = None) -> float:
    """``||f_Gamma - f_Kurth||_{L1}`` via the invariant pushforward.

    ``2 pi^3 int [ |F_Gamma - F_K| min(Gamma, m1) + F_K (m1 - Gamma)_+ ] du``;
    sign changes of ``F_Gamma - F_K`` are located and used as break points.
    """
    if gamma.is_kurth:
        return 0.0
    g = gamma.gamma
    state = GammaState(gamma)
    kurth = KurthState()

    def diff(s):
        return state.F_s(s) - kurth.F_s(s)

    roots = []
    for lo, hi in ((0.0, gamma.one_minus_gamma), (gamma.one_minus_gamma, 1.0)):
        roots += [s - 1.0 for s in _sign_roots(diff, lo, hi)]
    first = _invariant_integral(
        lambda s: np.abs(diff(s)), g, state.u_breaks, extra=roots
    )
    # Kurth mass above the cutoff, l^2 in (Gamma, m1(u)] for u < uc; in
    # t = sqrt(1 + u) it is 2 pi^3 * 2 K int_0^tc ((1 - t)^2 - Gamma) dt
    a = gamma.one_minus_gamma
    tc = a / (1.0 + math.sqrt(g))
    second = PUSHFORWARD * 2.0 * KURTH_NORM * (a * tc - tc * tc + tc**3 / 3.0)
    return first + second


# --------------------------------------------------------- classification


class PointClass(enum.Enum):
    OUTSIDE = "Outside"
    INTERIOR = "Interior"
    NEAR_M = "NearM"
    NEAR_N_ABOVE = "NearN_above"
    NEAR_N_BELOW = "NearN_below"


def classify_point(p: PhasePoint, gamma: GammaParam, tol: float) -> PointClass:
    """Locate a point relative to the support and the two singular sets.

    Uses ``w = |x|^2 + |v|^2 - l^2``: ``w = 1`` is the blow-up set and
    ``w = Gamma`` the jump set, both inside ``l^2 <= Gamma``.
    """
    energy, ell2 = invariants(p)
    w = float(energy) - float(ell2)
    if float(ell2) > gamma.gamma or w < -tol or w > 1.0 + tol:
        return PointClass.OUTSIDE
    d_m = abs(w - 1.0)
    d_n = abs(w - gamma.gamma)
    if min(d_m, d_n) <= tol:
        if d_m < d_n or gamma.is_kurth:
            return PointClass.NEAR_M
        return PointClass.NEAR_N_ABOVE if w >= gamma.gamma else PointClass.NEAR_N_BELOW
    return PointClass.INTERIOR


class SingularSetKind(enum.Enum):
    M_GAMMA = "M_gamma"
    N_GAMMA = "N_gamma"


@dataclass(frozen=True)
class SingularSets:
    """One of the two singular 5-manifolds, with a level-set distance."""

    which: SingularSetKind
    gamma: GammaParam

    @property
    def level(self) -> float:
        return 1.0 if self.which is SingularSetKind.M_GAMMA else self.gamma.gamma

    def distance(self, p: PhasePoint):
        """``|w - level|`` on ``l^2 <= Gamma``; ``inf`` off the gate."""
        energy, ell2 = invariants(p)
        w = np.asarray(energy) - np.asarray(ell2)
        d = np.where(np.asarray(ell2) <= self.gamma.gamma, np.abs(w - self.level), np.inf)
        return float(d) if d.ndim == 0 else d
