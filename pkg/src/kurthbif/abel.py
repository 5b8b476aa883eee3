"""Half-order Abel operators and the profile phi with ``pi I^{1/2} phi = psi``.

The profile is never obtained by differentiating an Abel integral
numerically. Both branches are evaluated from integrals of psi~' and psi~''
against ``1/sqrt(s - sigma)``, which only involve the inner branch of psi::

    pi^2 phi(s)  = int_0^min(s,a) psi~'(sigma)/sqrt(s-sigma) dsigma + 2 sqrt((s-a)+)
    pi^2 phi'(s) = 1/(Gamma sqrt s) + int_0^min(s,a) psi~''(sigma)/sqrt(s-sigma) dsigma
                   + [s > a] (a/Gamma^2)/sqrt(s-a)

with ``a = 1 - Gamma``. At ``s = a`` the derivative takes its limit from
below (the jump term is excluded).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import funceq
from .errors import AccuracyError, BuildError, DomainError
from .params import GammaParam
from .quadrature import DEFAULT_SPEC, QuadratureSpec, abel_rule, sqrt_endpoint_rule

__all__ = [
    "abel_apply",
    "k_gamma_apply",
    "phi",
    "phi_prime",
    "l_gamma",
    "phi_derivative_form",
    "ProfileTable",
    "build_profile",
    "abel_residual",
    "functional_residual",
    "phi_prime_brackets",
    "w11_norm",
    "w11_envelope_bound",
    "deviation_envelope",
    "deviation_constant",
    "pointwise_deviation",
    "volterra_profile",
    "ChebProfile",
    "cheb_profile",
]

PI2 = math.pi**2
SCHEMA_VERSION = 1
DEFAULT_ORDER = 16


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _unit(s, name="s"):
    s = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s < 0.0) or np.any(s > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return s


# ---------------------------------------------------------------- operators


def _abel_pieces(g, s, breakpoints, n):
    s = np.asarray(s, dtype=float)
    edges = [0.0] + sorted(float(b) for b in breakpoints) + [None]
    total = np.zeros(s.shape)
    for lo, hi in zip(edges[:-1], edges[1:]):
        lo_arr = np.minimum(lo, s)
        hi_arr = s if hi is None else np.minimum(hi, s)
        nodes, weights = abel_rule(s, lo_arr, hi_arr, n)
        live = weights != 0.0
        vals = np.zeros(nodes.shape)
        if np.any(live):
            vals[live] = np.asarray(g(nodes[live]), dtype=float)
        total = total + np.sum(weights * vals, axis=-1)
    return total


def abel_apply(
    g,
    s,
    spec: QuadratureSpec | None = None,
    *,
    breakpoints=(),
    order: int | None = None,
):
    """``(I^{1/2} g)(s) = int_0^s g(sigma)/sqrt(s - sigma) dsigma``.

    ``g`` is a vectorized callable. It may have square-root behaviour at 0
    and at each entry of ``breakpoints`` (approached from the right) and
    must be smooth elsewhere. The rule is compared with a lower-order
    companion; a gap above ``spec.tol`` (relative to ``max(1, |value|)``)
    raises :class:`AccuracyError`.
    """
    spec = spec or DEFAULT_SPEC
    s = _unit(s)
    n = order or spec.u_nodes
    value = _abel_pieces(g, s, breakpoints, n)
    coarse = _abel_pieces(g, s, breakpoints, max(2, (2 * n) // 3))
    gap = np.abs(value - coarse) / np.maximum(1.0, np.abs(value))
    worst = float(np.max(gap)) if gap.size else 0.0
    if not worst <= spec.tol:
        raise AccuracyError(f"Abel quadrature gap {worst:.3g} above tol", worst)
    return _out(value, s)


def k_gamma_apply(g, s, gamma: GammaParam, spec: QuadratureSpec | None = None, **kw):
    """Shifted operator ``(I^{1/2} g)(s - chi(s)) = (I^{1/2} g)(h(s))``."""
    return abel_apply(g, funceq.h(s, gamma), spec, **kw)


# ------------------------------------------------------------------ profile


def _dpsi(sigma, gamma, order):
    # quadrature nodes may overshoot the split by one ulp
    sig = np.clip(np.asarray(sigma, dtype=float), 0.0, gamma.one_minus_gamma)
    flat = sig.reshape(-1)
    vals = funceq._series(flat, gamma, funceq.DEFAULT_TOL, order)[order]
    return vals.reshape(sig.shape)


_CHUNK = 2048


def _chunked(fn, s):
    flat = s.reshape(-1)
    out = np.empty(flat.shape)
    for i in range(0, flat.size, _CHUNK):
        out[i : i + _CHUNK] = fn(flat[i : i + _CHUNK])
    return out.reshape(s.shape)


def phi(s, gamma: GammaParam, order: int = DEFAULT_ORDER):
    """The profile phi on ``[0, 1]`` from its branch integral formula."""
    s = _unit(s)
    if gamma.is_kurth:
        return _out(2.0 * np.sqrt(s) / PI2, s)
    a = gamma.one_minus_gamma

    def block(x):
        nodes, weights = abel_rule(x, 0.0, np.minimum(x, a), order)
        inner = np.sum(weights * _dpsi(nodes, gamma, 1), axis=-1)
        return (inner + 2.0 * np.sqrt(np.maximum(x - a, 0.0))) / PI2

    return _out(_chunked(block, s), s)


def phi_prime(s, gamma: GammaParam, order: int = DEFAULT_ORDER):
    """phi' on ``(0, 1]``; at the split the limit from below is returned."""
    s = _unit(s)
    if np.any(s <= 0.0):
        raise DomainError("phi' is singular at s = 0")
    if gamma.is_kurth:
        return _out(1.0 / (PI2 * np.sqrt(s)), s)
    g, a = gamma.gamma, gamma.one_minus_gamma

    def block(x):
        nodes, weights = abel_rule(x, 0.0, np.minimum(x, a), order)
        inner = np.sum(weights * _dpsi(nodes, gamma, 2), axis=-1)
        gap = x - a
        jump = np.where(
            gap > 0.0, (a / g**2) / np.sqrt(np.where(gap > 0.0, gap, 1.0)), 0.0
        )
        return (1.0 / (g * np.sqrt(x)) + inner + jump) / PI2

    return _out(_chunked(block, s), s)


def l_gamma(gamma: GammaParam, order: int = DEFAULT_ORDER) -> float:
    """Limit of phi'(s) as s increases to the split ``1 - Gamma``."""
    if gamma.is_kurth:
        raise DomainError("the split limit is undefined for Gamma = 1")
    return float(phi_prime(gamma.one_minus_gamma, gamma, order))


def phi_derivative_form(s, gamma: GammaParam, step: float | None = None):
    """Verification variant: ``(1/pi^2) d/ds I^{1/2} psi`` by central difference.

    Ill-conditioned by design; kept only to cross-check the production
    formulas away from 0, the split and 1.
    """
    s = _unit(s)
    step = step if step is not None else 1e-5 * max(gamma.one_minus_gamma, 1e-3)
    if np.any(s - step < 0.0) or np.any(s + step > 1.0):
        raise DomainError("difference stencil leaves [0, 1]")
    spec = DEFAULT_SPEC.with_(u_nodes=40, tol=1e-6)

    def psi_fn(x):
        return funceq.psi(x, gamma)

    bps = () if gamma.is_kurth else (gamma.one_minus_gamma,)
    up = abel_apply(psi_fn, s + step, spec, breakpoints=bps)
    down = abel_apply(psi_fn, s - step, spec, breakpoints=bps)
    return _out((np.asarray(up) - np.asarray(down)) / (2.0 * step) / PI2, s)


# -------------------------------------------------------------- residuals


def _abel_of_phi(s, gamma, order, spec):
    bps = () if gamma.is_kurth else (gamma.one_minus_gamma,)
    return abel_apply(
        lambda x: phi(x, gamma, order), s, spec, breakpoints=bps, order=order
    )


def abel_residual(s, gamma: GammaParam, order: int = DEFAULT_ORDER, spec=None):
    """``pi (I^{1/2} phi)(s) - psi(s)``."""
    s = _unit(s)
    spec = spec or DEFAULT_SPEC
    lhs = math.pi * np.asarray(_abel_of_phi(s, gamma, order, spec))
    return _out(lhs - np.asarray(funceq.psi(s, gamma)), s)


def functional_residual(s, gamma: GammaParam, order: int = DEFAULT_ORDER, spec=None):
    """``(I^{1/2} phi)(s) - (I^{1/2} phi)(h(s)) - s/pi``."""
    s = _unit(s)
    spec = spec or DEFAULT_SPEC
    here = np.asarray(_abel_of_phi(s, gamma, order, spec))
    shifted = np.asarray(_abel_of_phi(funceq.h(s, gamma), gamma, order, spec))
    return _out(here - shifted - s / math.pi, s)


def check_nodes(gamma: GammaParam, count: int = 256) -> np.ndarray:
    """Residual sample points: half graded on each branch, split included."""
    a = gamma.one_minus_gamma
    half = count // 2
    if gamma.is_kurth:
        return np.linspace(0.0, 1.0, count)
    inner = a * np.sin(0.5 * np.pi * np.arange(half) / half) ** 2
    outer = a + (1.0 - a) * (np.arange(1, count - half + 1) / (count - half)) ** 2
    return np.concatenate([inner, outer])


def _table_nodes(gamma: GammaParam, count: int):
    a = gamma.one_minus_gamma
    j = np.arange(1, count + 1)
    if gamma.is_kurth:
        return np.empty(0), (j / count) ** 2
    inner = a * np.sin(0.5 * np.pi * j / (count + 1)) ** 2
    outer = a + (1.0 - a) * (j / count) ** 2
    return inner, outer


# ------------------------------------------------------------ table


@dataclass(frozen=True, eq=False)
class ProfileTable:
    """Tabulated phi and phi' on both branches plus build metadata.

    Evaluation methods call the branch formulas at the recorded order, so a
    table restored from JSON evaluates bit-identically to the original.
    The tabulated arrays are the cache exported for plotting and audit.
    """

    gamma: GammaParam
    inner_s: np.ndarray
    inner_phi: np.ndarray
    inner_phi_prime: np.ndarray
    outer_s: np.ndarray
    outer_phi: np.ndarray
    outer_phi_prime: np.ndarray
    build_spec: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    node_scheme: str = "sin2-graded inner, quadratic-graded outer"

    @property
    def order(self) -> int:
        return int(self.build_spec.get("order", DEFAULT_ORDER))

    def phi(self, s):
        return phi(s, self.gamma, self.order)

    def phi_prime(self, s):
        return phi_prime(s, self.gamma, self.order)

    def l_gamma(self) -> float:
        return l_gamma(self.gamma, self.order)

    def to_dict(self) -> dict:
        def rows(s, p, dp):
            return [
                {"s": float(a), "phi": float(b), "phi_prime": float(c)}
                for a, b, c in zip(s, p, dp)
            ]

        return {
            "schema_version": SCHEMA_VERSION,
            "gamma": self.gamma.gamma,
            "one_minus_gamma": self.gamma.one_minus_gamma,
            "gamma_exponent": self.gamma.exponent,
            "node_scheme": self.node_scheme,
            "branch": {
                "inner": rows(self.inner_s, self.inner_phi, self.inner_phi_prime),
                "outer": rows(self.outer_s, self.outer_phi, self.outer_phi_prime),
            },
            "build_spec": dict(self.build_spec),
            "residuals": dict(self.residuals),
        }

    def to_json(self) -> str:
        from .io import dumps

        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> ProfileTable:
        if data.get("schema_version") != SCHEMA_VERSION:
            raise DomainError(
                f"unsupported profile schema {data.get('schema_version')!r}"
            )
        gamma = GammaParam(
            float(data["gamma"]),
            float(data["one_minus_gamma"]),
            data.get("gamma_exponent"),
        )

        def cols(name):
            items = data["branch"][name]
            return tuple(
                np.array([float(it[key]) for it in items], dtype=float)
                for key in ("s", "phi", "phi_prime")
            )

        inner = cols("inner")
        outer = cols("outer")
        return cls(
            gamma,
            *inner,
            *outer,
            build_spec=dict(data.get("build_spec", {})),
            residuals=dict(data.get("residuals", {})),
            node_scheme=data.get("node_scheme", cls.node_scheme),
        )

    @classmethod
    def from_json(cls, text: str) -> ProfileTable:
        from .io import loads

        return cls.from_dict(loads(text))


def build_profile(
    gamma: GammaParam,
    spec: QuadratureSpec | None = None,
    *,
    table_nodes: int = 64,
    residual_nodes: int = 256,
    residual_tol: float = 1e-8,
) -> ProfileTable:
    """Tabulate phi, phi' and verify the Abel and target-equation residuals.

    Raises :class:`BuildError` (carrying the residual profile) when either
    residual exceeds ``residual_tol`` or when phi' fails to be positive at a
    tabulated node.
    """
    spec = spec or DEFAULT_SPEC
    order = spec.u_nodes
    inner_s, outer_s = _table_nodes(gamma, table_nodes)
    inner_phi = np.asarray(phi(inner_s, gamma, order)) if inner_s.size else inner_s
    inner_dphi = (
        np.asarray(phi_prime(inner_s, gamma, order)) if inner_s.size else inner_s
    )
    outer_phi = np.asarray(phi(outer_s, gamma, order))
    outer_dphi = np.asarray(phi_prime(outer_s, gamma, order))

    check = check_nodes(gamma, residual_nodes)
    res_spec = spec.with_(tol=max(spec.tol, residual_tol * 1e-2))
    abel_res = np.asarray(abel_residual(check, gamma, order, res_spec))
    func_res = np.asarray(functional_residual(check, gamma, order, res_spec))
    residuals = {
        "abel": float(np.max(np.abs(abel_res))),
        "functional": float(np.max(np.abs(func_res))),
        "nodes": int(check.size),
    }
    profile = {
        "s": check.tolist(),
        "abel": abel_res.tolist(),
        "functional": func_res.tolist(),
    }
    worst = max(residuals["abel"], residuals["functional"])
    if not worst <= residual_tol:
        raise BuildError(
            f"profile residual {worst:.3g} exceeds {residual_tol:g}", worst, profile
        )
    dphi_all = np.concatenate([inner_dphi, outer_dphi])
    if not np.all(dphi_all > 0.0):
        raise BuildError("phi' is not positive on the table", 0.0, profile)
    build_spec = {
        "order": order,
        "table_nodes": table_nodes,
        "residual_tol": residual_tol,
        "quadrature": spec.to_dict(),
    }
    return ProfileTable(
        gamma,
        inner_s,
        inner_phi,
        inner_dphi,
        outer_s,
        outer_phi,
        outer_dphi,
        build_spec=build_spec,
        residuals=residuals,
    )


# ------------------------------------------------------------------ bounds


def phi_prime_brackets(s, gamma: GammaParam, order: int = DEFAULT_ORDER) -> dict:
    """Branch-wise lower/upper envelopes for phi' together with phi'(s).

    Inner branch ``0 < s < a``::

        1/(2 Gamma pi^2 sqrt s) <= phi' <= 1/(Gamma pi^2 sqrt s) + 128 a^{-1/3} sqrt(s)/pi^2

    Outer branch ``a < s <= 1``::

        (a/Gamma^2)/(pi^2 sqrt(s-a)) <= phi'
            <= (2 + 128 a^{2/3})/(pi^2 sqrt s) + (a/Gamma^2)/(pi^2 sqrt(s-a))
    """
    s = _unit(s)
    g, a = gamma.gamma, gamma.one_minus_gamma
    if gamma.is_kurth:
        raise DomainError("brackets are stated for Gamma < 1")
    if np.any(s <= 0.0) or np.any(s == a):
        raise DomainError("s must avoid 0 and the split 1 - Gamma")
    value = np.asarray(phi_prime(s, gamma, order))
    inner = s < a
    root = np.sqrt(s)
    gap = np.sqrt(np.where(inner, 1.0, s - a))
    lower = np.where(
        inner, 1.0 / (2.0 * g * PI2 * root), (a / g**2) / (PI2 * gap)
    )
    upper = np.where(
        inner,
        1.0 / (g * PI2 * root) + 128.0 * a ** (-1.0 / 3.0) * root / PI2,
        (2.0 + 128.0 * a ** (2.0 / 3.0)) / (PI2 * root) + (a / g**2) / (PI2 * gap),
    )
    return {
        "lower": _out(lower, s),
        "upper": _out(upper, s),
        "value": _out(value, s),
        "branch": _out(np.where(inner, "inner", "outer"), s)
        if np.ndim(s)
        else ("inner" if inner else "outer"),
    }


def w11_norm(gamma_or_table, order: int | None = None, n: int = 48) -> float:
    """``int_0^1 |phi'|`` by branch-wise square-root-endpoint quadrature."""
    if isinstance(gamma_or_table, ProfileTable):
        gamma = gamma_or_table.gamma
        order = order or gamma_or_table.order
    else:
        gamma = gamma_or_table
    order = order or DEFAULT_ORDER
    if gamma.is_kurth:
        return 2.0 / PI2
    a = gamma.one_minus_gamma

    # 1/sqrt(s) is nearly singular just above the split: grade geometrically
    edges = [0.0, a]
    while edges[-1] + 4.0 * (edges[-1] - edges[-2] if len(edges) > 2 else a) < 1.0:
        step = edges[-1] - edges[-2] if len(edges) > 2 else a
        edges.append(edges[-1] + 4.0 * step)
    edges.append(1.0)

    def run(m):
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            nodes, weights = sqrt_endpoint_rule(lo, hi, m)
            total += float(np.sum(weights * np.abs(phi_prime(nodes, gamma, order))))
        return total

    value = run(n)
    gap = abs(value - run(max(2, (2 * n) // 3)))
    if gap > 1e-8 * max(1.0, value):
        raise AccuracyError(f"W11 quadrature gap {gap:.3g}", gap)
    return value


def w11_envelope_bound(gamma: GammaParam) -> float:
    """Exact integral over ``[0, 1]`` of the upper bracket envelopes."""
    g, a = gamma.gamma, gamma.one_minus_gamma
    if gamma.is_kurth:
        return 2.0 * 2.0 / PI2
    inner = 2.0 * math.sqrt(a) / g + 128.0 * a ** (-1.0 / 3.0) * (2.0 / 3.0) * a**1.5
    outer = (2.0 + 128.0 * a ** (2.0 / 3.0)) * 2.0 * (1.0 - math.sqrt(a)) + (
        a / g**2
    ) * 2.0 * math.sqrt(1.0 - a)
    return (inner + outer) / PI2


def deviation_envelope(s, gamma: GammaParam):
    """Shape ``a^{1/6} + a/sqrt(s) [s<a] + a/sqrt(s-a) [s>a]`` of the deviation bound."""
    s = _unit(s)
    a = gamma.one_minus_gamma
    inner = s < a
    gap = np.where(inner, 1.0, s - a)
    gap = np.where(gap > 0.0, gap, 1.0)
    base = np.where(inner, a / np.sqrt(np.where(s > 0, s, 1.0)), a / np.sqrt(gap))
    return _out(a ** (1.0 / 6.0) + base, s)


_REFERENCE_EXPONENTS = tuple(range(12, 21))


@lru_cache(maxsize=None)
def deviation_constant(order: int = DEFAULT_ORDER) -> float:
    """Largest observed ``deviation / envelope`` over the reference sweep.

    The sweep covers ``Gamma = 1 - 2^-k`` for ``k = 12..20`` on graded
    points on both sides of the split.
    """
    worst = 0.0
    for k in _REFERENCE_EXPONENTS:
        gamma = GammaParam.from_exponent(k)
        a = gamma.one_minus_gamma
        t = np.linspace(0.02, 0.98, 49)
        s = np.concatenate([a * t, a + (1.0 - a) * t**2, [1.0]])
        dev = np.abs(np.asarray(phi_prime(s, gamma, order)) - 1.0 / (PI2 * np.sqrt(s)))
        worst = max(worst, float(np.max(dev / deviation_envelope(s, gamma))))
    return worst


def pointwise_deviation(
    s, gamma: GammaParam, constant: float | None = None, order: int = DEFAULT_ORDER
) -> dict:
    """``|phi'(s) - 1/(pi^2 sqrt s)|`` with the calibrated envelope bound."""
    s = _unit(s)
    if np.any(s <= 0.0) or (not gamma.is_kurth and np.any(s == gamma.one_minus_gamma)):
        raise DomainError("s must avoid 0 and the split 1 - Gamma")
    c = deviation_constant(order) if constant is None else float(constant)
    dev = np.abs(np.asarray(phi_prime(s, gamma, order)) - 1.0 / (PI2 * np.sqrt(s)))
    env = np.asarray(deviation_envelope(s, gamma))
    return {
        "deviation": _out(dev, s),
        "envelope": _out(env, s),
        "bound": _out(c * env, s),
        "constant": c,
    }


# ------------------------------------------------------------------ oracle


def volterra_mesh(gamma: GammaParam, n: int) -> np.ndarray:
    """Graded mesh: cosine clustering on ``[0, a]``, quadratic grading above."""
    t = np.linspace(0.0, 1.0, n + 1)
    if gamma.is_kurth:
        return t**2
    a = gamma.one_minus_gamma
    inner = 0.5 * a * (1.0 - np.cos(np.pi * t))
    outer = a + (1.0 - a) * t**2
    return np.unique(np.concatenate([inner, outer]))


def volterra_profile(gamma: GammaParam, n: int = 800, mesh=None):
    """Independent oracle: solve ``I^{1/2} phi = psi/pi`` by product integration.

    phi is taken piecewise linear on the mesh with ``phi(0) = 0``; the hat
    function weights against ``1/sqrt(s_i - sigma)`` are integrated exactly
    and the lower-triangular system is solved by forward substitution.
    Returns ``(mesh, phi_values)``.
    """
    nodes = volterra_mesh(gamma, n) if mesh is None else np.asarray(mesh, float)
    if nodes[0] != 0.0:
        raise DomainError("mesh must start at 0")
    rhs = np.asarray(funceq.psi(nodes, gamma)) / math.pi
    vals = np.zeros(nodes.size)
    for i in range(1, nodes.size):
        si = nodes[i]
        lo, hi = nodes[:i], nodes[1 : i + 1]
        root_lo = np.sqrt(si - lo)
        root_hi = np.sqrt(si - hi)
        width = hi - lo
        # moments of 1/sqrt(si - sigma) against (sigma - lo) and (hi - sigma)
        m0 = 2.0 * (root_lo - root_hi)
        m1 = (2.0 / 3.0) * (root_lo**3 - root_hi**3)  # int (si - sigma)^{1/2}
        # (sigma - lo) = (si - lo) - (si - sigma)
        up = ((si - lo) * m0 - m1) / width
        down = ((hi - si) * m0 + m1) / width
        acc = np.dot(down, vals[:i]) + np.dot(up[:-1], vals[1:i])
        vals[i] = (rhs[i] - acc) / up[-1]
    return nodes, vals


# ------------------------------------------------------------ fast cache


def _cheb_fit(f, tol=1e-15, degrees=(16, 24, 32, 48, 64, 96)):
    from numpy.polynomial import chebyshev as C

    for deg in degrees:
        c = C.chebinterpolate(f, deg)
        scale = max(float(np.max(np.abs(c))), np.finfo(float).tiny)
        if float(np.max(np.abs(c[-4:]))) <= tol * scale:
            break
    return np.trim_zeros(c, "b") if np.any(c) else c


@dataclass(frozen=True, eq=False)
class ChebProfile:
    """Piecewise Chebyshev cache of phi and phi' for bulk evaluation.

    Only smooth remainders are interpolated; the root singularities are
    reinstated exactly::

        inner:  phi = sqrt(s) A(s)/pi^2,
                phi' = (1/(Gamma sqrt s) + sqrt(s) B(s))/pi^2
        outer:  phi = (F(s) + 2 sqrt(s-a))/pi^2,
                phi' = (1/(Gamma sqrt s) + G(s) + (a/Gamma^2)/sqrt(s-a))/pi^2

    A and B are analytic on ``[0, a]``. F and G carry a ``sqrt(s - a)``
    branch and are fitted in ``sqrt(s - a)`` on the first outer piece and
    on geometrically growing pieces beyond.
    """

    gamma: GammaParam
    order: int
    inner: tuple
    edges: np.ndarray
    outer_phi: tuple
    outer_dphi: tuple

    @classmethod
    def build(cls, gamma: GammaParam, order: int = DEFAULT_ORDER) -> ChebProfile:
        if gamma.is_kurth:
            return cls(gamma, order, (), np.zeros(0), (), ())
        a = gamma.one_minus_gamma

        def inner_fn(k):
            def f(x):
                s = a * (x + 1.0) / 2.0
                s = np.where(s > 0.0, s, a * 1e-300 if a > 0 else 0.0)
                nodes, w = abel_rule(s, 0.0, s, order)
                return np.sum(w * _dpsi(nodes, gamma, k), axis=-1) / np.sqrt(s)

            return f

        inner = (_cheb_fit(inner_fn(1)), _cheb_fit(inner_fn(2)))
        # outer pieces in y = s - a: [0, a] (fitted in sqrt y), then doubling
        span = 1.0 - a
        edges = [0.0, min(a, span)]
        while edges[-1] < span:
            edges.append(min(2.0 * edges[-1], span))
        edges = np.array(edges)

        def outer_fn(k, lo, hi, first):
            def f(x):
                if first:
                    y = (np.sqrt(hi) * (x + 1.0) / 2.0) ** 2
                else:
                    y = lo + (hi - lo) * (x + 1.0) / 2.0
                s = a + y
                nodes, w = abel_rule(s, 0.0, np.full_like(s, a), order)
                return np.sum(w * _dpsi(nodes, gamma, k), axis=-1)

            return f

        phis, dphis = [], []
        for j, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
            phis.append(_cheb_fit(outer_fn(1, lo, hi, j == 0)))
            dphis.append(_cheb_fit(outer_fn(2, lo, hi, j == 0)))
        return cls(gamma, order, inner, edges, tuple(phis), tuple(dphis))

    def _outer_eval(self, y, coeffs):
        from numpy.polynomial import chebyshev as C

        out = np.empty(y.shape)
        idx = np.clip(np.searchsorted(self.edges, y, side="right") - 1, 0,
                      len(coeffs) - 1)
        for j in np.unique(idx):
            m = idx == j
            lo, hi = self.edges[j], self.edges[j + 1]
            if j == 0:
                x = 2.0 * np.sqrt(y[m]) / np.sqrt(hi) - 1.0
            else:
                x = 2.0 * (y[m] - lo) / (hi - lo) - 1.0
            out[m] = C.chebval(np.clip(x, -1.0, 1.0), coeffs[j])
        return out

    def _inner_eval(self, s, c):
        from numpy.polynomial import chebyshev as C

        x = 2.0 * s / self.gamma.one_minus_gamma - 1.0
        return C.chebval(np.clip(x, -1.0, 1.0), c)

    def phi(self, s):
        s = _unit(s)
        if self.gamma.is_kurth:
            return _out(2.0 * np.sqrt(s) / PI2, s)
        a = self.gamma.one_minus_gamma
        s1 = np.atleast_1d(s)
        out = np.empty(s1.shape)
        inner = s1 <= a
        if np.any(inner):
            si = s1[inner]
            out[inner] = np.sqrt(si) * self._inner_eval(si, self.inner[0]) / PI2
        if np.any(~inner):
            y = s1[~inner] - a
            out[~inner] = (self._outer_eval(y, self.outer_phi) + 2.0 * np.sqrt(y)) / PI2
        return _out(out.reshape(s.shape), s)

    def phi_prime(self, s):
        s = _unit(s)
        if np.any(s <= 0.0):
            raise DomainError("phi' is singular at s = 0")
        if self.gamma.is_kurth:
            return _out(1.0 / (PI2 * np.sqrt(s)), s)
        g, a = self.gamma.gamma, self.gamma.one_minus_gamma
        s1 = np.atleast_1d(s)
        out = np.empty(s1.shape)
        inner = s1 <= a
        base = 1.0 / (g * np.sqrt(s1))
        if np.any(inner):
            si = s1[inner]
            out[inner] = base[inner] + np.sqrt(si) * self._inner_eval(si, self.inner[1])
        if np.any(~inner):
            y = s1[~inner] - a
            out[~inner] = (
                base[~inner]
                + self._outer_eval(y, self.outer_dphi)
                + (a / g**2) / np.sqrt(y)
            )
        return _out(out.reshape(s.shape) / PI2, s)

    def max_relative_error(self, count: int = 2000, seed: int = 0) -> float:
        """Largest relative gap to the direct formulas on random graded points."""
        if self.gamma.is_kurth:
            return 0.0
        rng = np.random.default_rng(seed)
        a = self.gamma.one_minus_gamma
        s = np.concatenate([
            a * rng.random(count // 2),
            a + (1.0 - a) * rng.random(count // 2) ** 4,
        ])
        s = s[s > 0.0]
        errs = []
        for fast, slow in (
            (self.phi(s), phi(s, self.gamma, self.order)),
            (self.phi_prime(s), phi_prime(s, self.gamma, self.order)),
        ):
            errs.append(np.max(np.abs(fast - slow) / np.abs(slow)))
        return float(max(errs))


@lru_cache(maxsize=64)
def cheb_profile(gamma: GammaParam, order: int = DEFAULT_ORDER) -> ChebProfile:
    """Cached :class:`ChebProfile` per (Gamma, order)."""
    return ChebProfile.build(gamma, order)
