"""Phase-space sampling of steady states ``f = F(u) 1{l^2 <= c}``.

Under ``(x, v) -> (u, l^2)`` Lebesgue measure on the support pushes forward
to ``2 pi^3 du dl^2`` on ``l^2 <= m1(u)``. A sample is drawn as

* ``u`` by inverse CDF against ``F(u) min(c, m1(u))``,
* ``l^2`` uniform on ``[0, min(c, m1(u))]``,
* a point on the invariant torus: phase uniform on the ellipse with
  semi-axes ``alpha >= beta`` (``alpha^2 + beta^2 = -u + l^2``,
  ``alpha beta = l``), then a Haar-random rotation.

The u-CDF is tabulated in ``t = sqrt(1 + u)`` where ``F(u) du`` stays
integrable with at most inverse-root endpoint behaviour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.spatial.transform import Rotation

from .errors import SamplerError
from .quadrature import sqrt_endpoint_rule
from .reduction import PhasePoint
from .steady import PUSHFORWARD, MixtureState, SteadyState, _u_crit

__all__ = ["InverseCDF", "StateSampler", "sample_state", "torus_points"]


@dataclass(frozen=True, eq=False)
class InverseCDF:
    """Monotone tabulation of ``t -> P(T <= t)`` and its inverse."""

    t: np.ndarray
    cdf: np.ndarray
    total: float
    _inverse: object = field(repr=False)

    @classmethod
    def build(cls, density_t, edges, panels: int = 48, nodes: int = 8):
        """Tabulate ``int density_t`` on pieces ``edges`` (in t).

        Each piece is split into sin^2-graded panels; every panel uses a
        sin^2 rule, which absorbs root behaviour at the piece ends.
        """
        pts = [float(edges[0])]
        acc = [0.0]
        grade = np.sin(0.5 * np.pi * np.linspace(0.0, 1.0, panels + 1)) ** 2
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi <= lo:
                continue
            knots = lo + (hi - lo) * grade
            knots[-1] = hi
            t, w = sqrt_endpoint_rule(knots[:-1], knots[1:], nodes)
            mass = np.sum(w * density_t(t), axis=-1)
            acc.extend(acc[-1] + np.cumsum(mass))
            pts.extend(knots[1:])
        t = np.array(pts)
        cum = np.array(acc)
        total = float(cum[-1])
        if not total > 0.0:
            raise SamplerError("sampling density has zero mass")
        cdf = cum / total
        # drop flat stretches so the inverse is a function
        keep = np.concatenate([[True], np.diff(cdf) > 0.0])
        inverse = PchipInterpolator(cdf[keep], t[keep])
        return cls(t, cdf, total, inverse)

    def sample(self, q):
        return self._inverse(np.clip(q, 0.0, 1.0))


def torus_points(w, ell2, phase, rotation: Rotation) -> PhasePoint:
    """Phase points with ``|x|^2 + |v|^2 = w`` and ``|x ^ v|^2 = ell2``."""
    w = np.asarray(w, dtype=float)
    ell2 = np.asarray(ell2, dtype=float)
    disc = np.sqrt(np.maximum(w * w - 4.0 * ell2, 0.0))
    alpha = np.sqrt(0.5 * (w + disc))
    beta = np.sqrt(np.maximum(0.5 * (w - disc), 0.0))
    c, s = np.cos(phase), np.sin(phase)
    zero = np.zeros_like(w)
    x = np.stack([alpha * c, beta * s, zero], -1)
    v = np.stack([-alpha * s, beta * c, zero], -1)
    return PhasePoint(rotation.apply(x), rotation.apply(v))


@dataclass(frozen=True, eq=False)
class StateSampler:
    """Exact-measure sampler for a steady state (mixtures by component)."""

    state: SteadyState
    panels: int = 48

    @property
    def _tables(self):
        cached = self.__dict__.get("_cache")
        if cached is None:
            cached = [(w, st, _u_table(st, self.panels)) for w, st in _parts(self.state)]
            self.__dict__["_cache"] = cached
        return cached

    @property
    def mass(self) -> float:
        return float(sum(w * PUSHFORWARD * tab.total for w, _, tab in self._tables))

    def sample(self, n: int, rng: np.random.Generator) -> PhasePoint:
        """``n`` independent points distributed as ``f / mass``."""
        if n <= 0:
            raise SamplerError("sample size must be positive")
        tables = self._tables
        probs = np.array([w * tab.total for w, _, tab in tables])
        probs = probs / probs.sum()
        which = rng.choice(len(tables), size=n, p=probs)
        q = rng.random(n)
        q2 = rng.random(n)
        phase = 2.0 * np.pi * rng.random(n)
        rot = Rotation.random(n, random_state=rng)
        t = np.empty(n)
        cap = np.empty(n)
        for k, (_, st, tab) in enumerate(tables):
            sel = which == k
            t[sel] = tab.sample(q[sel])
            cap[sel] = np.minimum(st.cutoff, (1.0 - t[sel]) ** 2)
        ell2 = q2 * cap
        # w = |x|^2 + |v|^2 = l^2 - u = l^2 + 1 - t^2
        w = ell2 + (1.0 - t) * (1.0 + t)
        return torus_points(w, ell2, phase, rot)


def _parts(state: SteadyState):
    if isinstance(state, MixtureState):
        return state.components()
    return [(1.0, state)]


def _u_table(state: SteadyState, panels: int) -> InverseCDF:
    c = state.cutoff
    u_edges = sorted({-1.0, 0.0, _u_crit(c), *[b for b in state.u_breaks if -1.0 < b < 0.0]})
    t_edges = np.sqrt(np.clip(1.0 + np.array(u_edges), 0.0, None))

    def density_t(t):
        # F(u) du = F_s(t^2) 2 t dt
        cap = np.minimum(c, (1.0 - t) ** 2)
        return 2.0 * t * np.asarray(state.F_s(t * t)) * cap

    return InverseCDF.build(density_t, t_edges, panels)


def sample_state(state: SteadyState, n: int, seed: int = 0) -> PhasePoint:
    """Convenience wrapper with a seeded generator."""
    return StateSampler(state).sample(n, np.random.default_rng(seed))
