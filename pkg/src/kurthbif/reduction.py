"""Reduced coordinates ``(r, p_r, l^2, u)``, support geometry, and SO(3)-reduced
integration.

For a spherically symmetric phase-space function the Lebesgue measure
pushes forward as ``dx dv = dr dp_r (l dl) dR`` with ``dR`` the Haar
measure of total mass ``8 pi^2``. Trading ``l^2`` for
``u = l^2 (1 - 1/r^2) - r^2 - p_r^2`` at fixed ``(r, p_r)`` gives
``l dl = (1/2) r^2/(1 - r^2) du``, which is the form integrated here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, ChartSingularityError, DomainError
from .params import GammaParam
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    gauss_legendre,
    sqrt_endpoint_rule,
)

__all__ = [
    "PhasePoint",
    "ReducedCoords",
    "QuadratureSpec",
    "RegionCase",
    "SupportRegion",
    "to_reduced",
    "ell2_from",
    "gamma_bar",
    "support_region",
    "in_support",
    "invariants",
    "reduced_integral",
    "velocity_integral",
    "euler_rule",
    "HAAR_VOLUME",
]

HAAR_VOLUME = 8.0 * math.pi**2


def _vec3(a, name):
    a = np.asarray(a, dtype=float)
    if a.shape[-1:] != (3,):
        raise DomainError(f"{name} must have trailing dimension 3")
    return a


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """Position and velocity; batched when the arrays carry leading axes."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = _vec3(self.x, "x")
        v = _vec3(self.v, "v")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise DomainError("phase point components must be finite")
        x, v = np.broadcast_arrays(x, v)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def shape(self) -> tuple:
        return self.x.shape[:-1]


@dataclass(frozen=True, eq=False)
class ReducedCoords:
    r: np.ndarray | float
    p_r: np.ndarray | float
    ell2: np.ndarray | float
    u: np.ndarray | float


def _out(x, like_shape):
    return float(x) if like_shape == () else x


def invariants(p: PhasePoint):
    """Return ``(|x|^2 + |v|^2, |x ^ v|^2)``."""
    energy = np.sum(p.x * p.x, axis=-1) + np.sum(p.v * p.v, axis=-1)
    ell2 = np.sum(np.cross(p.x, p.v) ** 2, axis=-1)
    return _out(energy, p.shape), _out(ell2, p.shape)


def to_reduced(p: PhasePoint) -> ReducedCoords:
    """Map ``(x, v)`` to ``(r, p_r, l^2, u)``; undefined at ``r = 0``."""
    r2 = np.sum(p.x * p.x, axis=-1)
    if np.any(r2 == 0.0):
        raise ChartSingularityError("reduced coordinates are undefined at r = 0")
    r = np.sqrt(r2)
    p_r = np.sum(p.x * p.v, axis=-1) / r
    ell2 = np.sum(np.cross(p.x, p.v) ** 2, axis=-1)
    u = ell2 * (1.0 - 1.0 / r2) - r2 - p_r * p_r
    shape = p.shape
    return ReducedCoords(
        _out(r, shape), _out(p_r, shape), _out(ell2, shape), _out(u, shape)
    )


def ell2_from(r, p_r, u):
    """``l^2 = -(u + r^2 + p_r^2) r^2 / (1 - r^2)`` for ``0 < r < 1``.

    A negative result means ``(r, p_r, u)`` lies outside the chart image;
    it is returned unchanged so the caller can decide.
    """
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0.0)) or np.any(~(r < 1.0)):
        raise DomainError("ell2_from needs 0 < r < 1")
    r2 = r * r
    val = -(np.asarray(u) + r2 + np.asarray(p_r) ** 2) * r2 / (1.0 - r2)
    return float(val) if np.ndim(val) == 0 else val


def gamma_bar(r, gamma: GammaParam):
    """``r^2 + Gamma (1 - r^2)/r^2``; at most 1 exactly when ``r^2 >= Gamma``."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0.0)) or np.any(r > 1.0):
        raise DomainError("gamma_bar needs 0 < r <= 1")
    r2 = r * r
    val = r2 + gamma.gamma * (1.0 - r2) / r2
    return float(val) if np.ndim(val) == 0 else val


class RegionCase(enum.Enum):
    EMPTY = "Empty"
    INNER = "Inner"
    OUTER = "Outer"


@dataclass(frozen=True)
class SupportRegion:
    """Admissible ``(p_r, u)`` at fixed ``r``.

    Inner (``r^2 <= Gamma``): ``-1 <= u <= -r^2 - p_r^2`` with
    ``|p_r| <= sqrt(1 - r^2)``. Outer (``Gamma < r^2 <= 1``): the lower
    bound becomes ``max(-1, -gamma - p_r^2)``, which switches branch at
    ``|p_r| = sqrt(1 - gamma)``.
    """

    case: RegionCase
    r: float
    gamma: GammaParam
    gbar: float | None = None

    @property
    def pr_max(self) -> float:
        if self.case is RegionCase.EMPTY:
            return 0.0
        return math.sqrt(max(0.0, 1.0 - self.r * self.r))

    @property
    def pr_switch(self) -> float | None:
        """``sqrt(1 - gamma)`` separating the two outer sub-bands."""
        if self.case is not RegionCase.OUTER:
            return None
        return math.sqrt(max(0.0, 1.0 - self.gbar))

    def pr_bands(self) -> list[tuple[float, float]]:
        if self.case is RegionCase.EMPTY:
            return []
        if self.case is RegionCase.INNER:
            return [(0.0, self.pr_max)]
        return [(0.0, self.pr_switch), (self.pr_switch, self.pr_max)]

    def u_upper(self, p_r):
        p_r = np.asarray(p_r, dtype=float)
        return -self.r * self.r - p_r * p_r

    def u_lower(self, p_r):
        p_r = np.asarray(p_r, dtype=float)
        if self.case is RegionCase.OUTER:
            return np.maximum(-1.0, -self.gbar - p_r * p_r)
        return np.full(p_r.shape, -1.0)

    def contains(self, p_r, u, tol: float = 0.0):
        """Membership of ``(p_r, u)``; ``tol`` widens every inequality."""
        p_r = np.asarray(p_r, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.case is RegionCase.EMPTY:
            return np.zeros(np.broadcast(p_r, u).shape, dtype=bool)
        ok = np.abs(p_r) <= self.pr_max + tol
        ok &= u <= self.u_upper(p_r) + tol
        ok &= u >= self.u_lower(p_r) - tol
        return ok


def support_region(r: float, gamma: GammaParam) -> SupportRegion:
    r = float(r)
    if not r >= 0.0:
        raise DomainError("r must be non-negative")
    if r > 1.0:
        return SupportRegion(RegionCase.EMPTY, r, gamma)
    if r * r <= gamma.gamma:
        return SupportRegion(RegionCase.INNER, r, gamma)
    return SupportRegion(RegionCase.OUTER, r, gamma, float(gamma_bar(r, gamma)))


def in_support(p: PhasePoint, gamma: GammaParam, tol: float = 0.0):
    """``-1 <= l^2 - |x|^2 - |v|^2 <= 0`` and ``l^2 <= Gamma``."""
    energy, ell2 = invariants(p)
    w = np.asarray(energy) - np.asarray(ell2)
    ok = (w >= -tol) & (w <= 1.0 + tol) & (np.asarray(ell2) <= gamma.gamma + tol)
    return bool(ok) if p.shape == () else ok


# -------------------------------------------------------------- quadrature


def euler_rule(n: int):
    """Product rule on SO(3) in z-y-z Euler angles, total weight ``8 pi^2``.

    Returns rotation matrices ``(m, 3, 3)`` and weights ``(m,)``. The two
    azimuthal angles use ``2n``-point trapezoid rules (exact for
    trigonometric polynomials), the polar angle Gauss-Legendre in
    ``cos(beta)``.
    """
    k = 2 * n
    az = 2.0 * np.pi * (np.arange(k) + 0.5) / k
    c, wc = gauss_legendre(-1.0, 1.0, n)
    beta = np.arccos(c)
    A, B, G = np.meshgrid(az, beta, az, indexing="ij")
    W = (2.0 * np.pi / k) ** 2 * np.broadcast_to(wc[None, :, None], A.shape)

    def rz(t):
        ct, st = np.cos(t), np.sin(t)
        z, o = np.zeros_like(t), np.ones_like(t)
        return np.stack(
            [np.stack([ct, -st, z], -1), np.stack([st, ct, z], -1), np.stack([z, z, o], -1)],
            -2,
        )

    def ry(t):
        ct, st = np.cos(t), np.sin(t)
        z, o = np.zeros_like(t), np.ones_like(t)
        return np.stack(
            [np.stack([ct, z, st], -1), np.stack([z, o, z], -1), np.stack([-st, z, ct], -1)],
            -2,
        )

    R = rz(A.ravel()) @ ry(B.ravel()) @ rz(G.ravel())
    return R, W.ravel()


def _sorted_pieces(lo, hi, candidates):
    """Clip break candidates into ``[lo, hi]`` and return sorted edges."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    cols = [lo[..., None]]
    for c in candidates:
        c = np.broadcast_to(np.asarray(c, dtype=float), lo.shape)
        cols.append(np.clip(np.where(np.isfinite(c), c, lo), lo, hi)[..., None])
    cols.append(hi[..., None])
    return np.sort(np.concatenate(cols, axis=-1), axis=-1)


def _composite(edges, n):
    """sin^2 rules on consecutive edges; nodes/weights shape ``S + (k n,)``."""
    nodes, weights = sqrt_endpoint_rule(edges[..., :-1], edges[..., 1:], n)
    shape = edges.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def _s_composite(edges, n):
    """Composite rule in ``t = sqrt(1 + u)`` on u-edges inside ``[-1, 0]``.

    Returns nodes ``s = 1 + u = t^2`` (formed without cancellation) and
    u-weights. A factor ``1/sqrt(1 + u)`` becomes analytic in t, also when
    it sits just outside a piece; root behaviour at interior edges stays at
    a piece endpoint, where the sin^2 map absorbs it.
    """
    t_edges = np.sqrt(np.clip(1.0 + edges, 0.0, None))
    t, wt = _composite(t_edges, n)
    return t * t, 2.0 * t * wt


def _reduced_pass(weight, rotation_factor, gamma, spec, u_breaks, pr_even, r_range):
    g = gamma.gamma
    r_cand = [math.sqrt(g)] + [math.sqrt(-b) for b in u_breaks if -1.0 < b < 0.0]
    lo_r, hi_r = r_range
    r_edges = np.array(
        sorted({lo_r, hi_r, *[c for c in r_cand if lo_r < c < hi_r]}), dtype=float
    )
    r, wr = _composite(r_edges, spec.radial_nodes)  # (Nr,)
    r2 = r * r
    outer = r2 > g
    gbar = np.where(outer, r2 + g * (1.0 - r2) / r2, 1.0)
    pmax = np.sqrt(np.maximum(0.0, 1.0 - r2))
    p_cand = [np.where(outer, np.sqrt(np.maximum(0.0, 1.0 - gbar)), 0.0)]
    for b in u_breaks:
        p_cand.append(np.sqrt(np.maximum(0.0, -b - r2)))
    p_edges = _sorted_pieces(np.zeros_like(r), pmax, p_cand)
    p, wp = _composite(p_edges, spec.pr_nodes)  # (Nr, Np)
    if not pr_even:
        p = np.concatenate([p, -p], axis=-1)
        wp = np.concatenate([wp, wp], axis=-1)
    else:
        wp = 2.0 * wp
    rr = r[:, None]
    u_hi = -rr * rr - p * p
    u_lo = np.where(outer[:, None], np.maximum(-1.0, -gbar[:, None] - p * p), -1.0)
    u_lo = np.minimum(u_lo, u_hi)
    u_edges = _sorted_pieces(u_lo, u_hi, list(u_breaks))
    s, wu = _s_composite(u_edges, spec.u_nodes)  # (Nr, Np, Nu)
    u = np.maximum(s - 1.0, -1.0 + 2.0**-53)
    R3 = rr[..., None]
    P3 = p[..., None]
    vals = np.asarray(weight(R3, P3, u), dtype=float)
    vals = np.broadcast_to(vals, u.shape)
    if rotation_factor is None:
        rot = HAAR_VOLUME
        inner = np.sum(wu * vals, axis=-1) * rot
    else:
        ell2 = np.maximum(0.0, -(u + R3 * R3 + P3 * P3) * R3 * R3 / (1.0 - R3 * R3))
        ell = np.sqrt(ell2)
        rad = np.broadcast_to(R3, u.shape)
        x0 = np.stack([np.zeros_like(u), np.zeros_like(u), rad], -1)
        v0 = np.stack(
            [ell / rad, np.zeros_like(u), np.broadcast_to(P3, u.shape)], -1
        )
        mats, wts = euler_rule(spec.euler_nodes)
        acc = np.zeros(u.shape)
        for M, wt in zip(mats, wts):
            acc += wt * np.asarray(rotation_factor(x0 @ M.T, v0 @ M.T), dtype=float)
        inner = np.sum(wu * vals * acc, axis=-1)
    jac = 0.5 * r2 / (1.0 - r2)
    return float(np.sum(wr * jac * np.sum(wp * inner, axis=-1)))


def reduced_integral(
    weight,
    rotation_factor=None,
    spec: QuadratureSpec | None = None,
    gamma: GammaParam | None = None,
    *,
    u_breaks=(),
    pr_even: bool = False,
    r_range=(0.0, 1.0),
    check: bool = True,
) -> float:
    """Integral over the support of f_Gamma of ``weight(r, p_r, u) * I_g``.

    ``I_g`` is ``8 pi^2`` without a rotation factor, otherwise the Euler
    product quadrature of ``rotation_factor(x, v)`` over SO(3) at the
    canonical point ``x = r e3``, ``v = (l/r, 0, p_r)``. ``u_breaks`` lists
    u-values where ``weight`` has a jump or root singularity; every
    integration piece is mapped with ``sin^2`` so root endpoint behaviour
    (also at ``r = 1``) is absorbed. ``pr_even`` halves the work for weights
    even in ``p_r``. ``gamma`` defaults to 1 (the Kurth support).

    The result is compared with a pass at reduced orders; a relative gap
    above ``spec.tol`` raises :class:`AccuracyError`.
    """
    spec = spec or DEFAULT_SPEC
    gamma = gamma or GammaParam.kurth()
    u_breaks = tuple(sorted(float(b) for b in u_breaks))
    value = _reduced_pass(
        weight, rotation_factor, gamma, spec, u_breaks, pr_even, r_range
    )
    if check:
        coarse = _reduced_pass(
            weight, rotation_factor, gamma, spec.lower(), u_breaks, pr_even, r_range
        )
        gap = abs(value - coarse) / max(1.0, abs(value))
        if not gap <= spec.tol:
            raise AccuracyError(f"reduced quadrature gap {gap:.3g} above tol", gap)
    return value


def velocity_integral(
    g,
    r: float,
    spec: QuadratureSpec | None = None,
    *,
    vmax: float = 1.0,
    pr_breaks=(),
    ell2_breaks=None,
    theta_nodes: int | None = None,
    ell2_focus=None,
    check: bool = True,
) -> float:
    """``(1/(2 r^2)) int dp_r int dl^2 int dtheta g(v)`` over ``|v| <= vmax``.

    The velocity is ``v = (l/r cos(theta), l/r sin(theta), p_r)``.
    ``pr_breaks`` are extra ``p_r`` break points (mirrored to negative
    ``p_r``); ``ell2_breaks(p_r)`` may return an array of ``l^2`` break
    points per ``p_r`` node. ``g`` maps ``(..., 3)`` velocities to values.
    """
    spec = spec or DEFAULT_SPEC
    if not r > 0.0:
        raise ChartSingularityError("velocity_integral needs r > 0")

    def run(sp):
        edges = np.array(
            sorted({0.0, vmax, *[abs(b) for b in pr_breaks if 0.0 < abs(b) < vmax]})
        )
        ph, wph = _composite(edges, sp.pr_nodes)
        p = np.concatenate([ph, -ph])
        wp = np.concatenate([wph, wph])
        top = r * r * np.maximum(0.0, vmax * vmax - p * p)
        cands = []
        if ell2_breaks is not None:
            b = np.asarray(ell2_breaks(p), dtype=float).reshape(p.shape + (-1,))
            cands = [b[..., j] for j in range(b.shape[-1])]
        e_edges = _sorted_pieces(np.zeros_like(p), top, cands)
        l2, wl = _composite(e_edges, sp.u_nodes)  # (Np, Nl)
        if ell2_focus is not None:
            focus = np.asarray(ell2_focus(p), dtype=float).reshape(p.shape)[:, None]
            # only pieces that stop short of the focus: an edge at the focus
            # is handled by the sin^2 map, and tau -> 0 would lose digits
            apart = e_edges[:, 1:] < focus
            tau_edges = np.sqrt(np.clip(focus - e_edges, 0.0, None))
            tn, tw = sqrt_endpoint_rule(tau_edges[:, 1:], tau_edges[:, :-1], sp.u_nodes)
            mask = np.repeat(apart, sp.u_nodes, axis=-1)
            l2_t = np.maximum(focus[..., None] - tn * tn, 0.0).reshape(l2.shape)
            l2 = np.where(mask, l2_t, l2)
            wl = np.where(mask, (2.0 * tn * tw).reshape(wl.shape), wl)
        m = theta_nodes or max(8, 2 * sp.euler_nodes)
        theta = 2.0 * np.pi * (np.arange(m) + 0.5) / m
        ell = np.sqrt(l2)[..., None] / r
        v = np.stack(
            [
                ell * np.cos(theta),
                ell * np.sin(theta),
                np.broadcast_to(p[:, None, None], ell.shape[:-1] + (m,)),
            ],
            -1,
        )
        vals = np.asarray(g(v), dtype=float)
        ang = np.mean(vals, axis=-1) * 2.0 * np.pi
        return float(np.sum(wp * np.sum(wl * ang, axis=-1))) / (2.0 * r * r)

    value = run(spec)
    if check:
        coarse = run(spec.lower())
        gap = abs(value - coarse) / max(1.0, abs(value))
        if not gap <= spec.tol:
            raise AccuracyError(f"velocity quadrature gap {gap:.3g} above tol", gap)
    return value
