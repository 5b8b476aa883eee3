"""Convex combinations of the family and a finite linear-independence witness.

Each ``f_Gamma`` blows up like ``(w' - Gamma)^{-1/2}`` as
``w' = |x|^2 + |v|^2 - l^2`` increases to ``Gamma`` from below, while every
other member stays bounded there. Evaluating the family at probes
approaching the jump sets therefore gives a matrix whose diagonal grows
without bound, which is a finite witness of linear independence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import PIPELINE_MIN_EXPONENT, GammaParam
from .reduction import PhasePoint
from .steady import GammaState, MixtureState

__all__ = ["mix", "probe_point", "WitnessRow", "independence_witness", "witness_header"]


def _as_gamma(g) -> GammaParam:
    if isinstance(g, GammaParam):
        return g
    return GammaParam.from_exponent(int(g))


def mix(components) -> MixtureState:
    """Mixture of ``f_Gamma_i`` with weights ``lambda_i``.

    ``components`` is a sequence of ``(gamma, weight)`` where ``gamma`` is a
    :class:`GammaParam` or an exponent K. The Gamma values must be distinct
    and pipeline-valid; weights must lie in ``[0, 1]`` and sum to 1.
    """
    comps = [(_as_gamma(g), float(w)) for g, w in components]
    if not comps:
        raise DomainError("a mixture needs at least one component")
    gammas = [g for g, _ in comps]
    for g in gammas:
        if not g.is_kurth and (g.exponent is None or g.exponent < PIPELINE_MIN_EXPONENT):
            raise DomainError(f"Gamma = {g} is outside the pipeline range")
    if len({g.one_minus_gamma for g in gammas}) != len(gammas):
        raise DomainError("mixture Gamma values must be distinct")
    return MixtureState(tuple((w, GammaState(g)) for g, w in comps))


def probe_point(gamma: GammaParam, delta: float) -> PhasePoint:
    """Point with ``l = 0`` and ``|x|^2 + |v|^2 = Gamma - delta``.

    This lies just below the jump set of ``f_Gamma``, where ``f_Gamma``
    carries its inverse-root blow-up.
    """
    if not 0.0 < delta < gamma.gamma:
        raise DomainError("probe distance must lie in (0, Gamma)")
    w = gamma.gamma - delta
    # radial configuration x || v splits w evenly and keeps |x| < 1
    c = math.sqrt(0.5 * w)
    return PhasePoint(np.array([0.0, 0.0, c]), np.array([0.0, 0.0, c]))


@dataclass(frozen=True)
class WitnessRow:
    """Singular-value diagnostics of ``[f_Gamma_j(p_i)]`` at one distance."""

    delta: float
    singular_values: tuple
    condition: float
    diagonal_dominance: float

    @property
    def rank(self) -> int:
        s = np.array(self.singular_values)
        return int(np.sum(s > s[0] * len(s) * np.finfo(float).eps))

    def csv_row(self):
        return (self.delta, *self.singular_values, self.condition, self.diagonal_dominance)


def witness_header(n: int):
    return ("delta", *[f"sv_{i + 1}" for i in range(n)], "condition", "diagonal_dominance")


def independence_witness(gammas, deltas) -> list[WitnessRow]:
    """Evaluation-matrix diagnostics as the probes approach the jump sets.

    Row i of the matrix holds ``f_Gamma_j`` at the probe for ``Gamma_i`` at
    relative distance ``delta * (1 - Gamma_i)``. ``diagonal_dominance`` is
    ``min_i |M_ii| / sum_{j != i} |M_ij|``.
    """
    params = [_as_gamma(g) for g in gammas]
    if len({g.one_minus_gamma for g in params}) != len(params):
        raise DomainError("witness Gamma values must be distinct")
    states = [GammaState(g) for g in params]
    rows = []
    for d in deltas:
        d = float(d)
        if not 0.0 < d < 1.0:
            raise DomainError("relative probe distances must lie in (0, 1)")
        probes = [probe_point(g, d * g.one_minus_gamma) for g in params]
        mat = np.array([[float(st.evaluate(p)) for st in states] for p in probes])
        sv = np.linalg.svd(mat, compute_uv=False)
        diag = np.abs(np.diag(mat))
        off = np.sum(np.abs(mat), axis=1) - diag
        ratio = np.where(off > 0.0, diag / np.where(off > 0.0, off, 1.0), np.inf)
        dom = float(np.min(ratio))
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0.0 else math.inf
        rows.append(WitnessRow(d, tuple(float(s) for s in sv), cond, dom))
    return rows
