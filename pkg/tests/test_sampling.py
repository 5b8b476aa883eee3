from __future__ import annotations

import numpy as np
import pytest
from scipy.spatial.transform import Rotation
from scipy.stats import kstest

from kurthbif.errors import SamplerError
from kurthbif.params import GammaParam
from kurthbif.reduction import invariants
from kurthbif.sampling import InverseCDF, StateSampler, sample_state, torus_points
from kurthbif.steady import ConstantProfileState, GammaState, KurthState, MixtureState

G12 = GammaParam.from_exponent(12)


def test_inverse_cdf_of_known_density():
    # density 3 t^2 on [0, 1]: CDF t^3
    inv = InverseCDF.build(lambda t: 3.0 * t * t, [0.0, 1.0], panels=8)
    q = np.linspace(0.0, 1.0, 11)
    # the sin^2 panel rule is spectral, not polynomial-exact
    assert inv.total == pytest.approx(1.0, rel=1e-8)
    assert np.max(np.abs(inv.sample(q) - np.cbrt(q))) <= 2e-3
    with pytest.raises(SamplerError):
        InverseCDF.build(lambda t: 0.0 * t, [0.0, 1.0])


def test_torus_points_hit_requested_invariants():
    rng = np.random.default_rng(0)
    w = rng.uniform(0.1, 1.0, 200)
    ell2 = rng.uniform(0.0, 1.0, 200) * w * w / 4.0
    p = torus_points(w, ell2, rng.uniform(0, 6.3, 200), Rotation.random(200, random_state=rng))
    energy, l2 = invariants(p)
    assert np.allclose(energy, w, atol=1e-14)
    assert np.allclose(l2, ell2, atol=1e-14)


@pytest.mark.parametrize("state", [KurthState(), GammaState(G12)])
def test_uniform_density_states_give_uniform_radii(state):
    p = sample_state(state, 20000, seed=11)
    r = np.linalg.norm(p.x, axis=-1)
    # uniform in the unit ball: r^3 is uniform on [0, 1]
    assert kstest(r**3, "uniform").pvalue > 1e-3
    assert np.all(state.in_support(p, tol=1e-12))


def test_control_state_radii_not_uniform():
    p = sample_state(ConstantProfileState(G12), 20000, seed=11)
    r = np.linalg.norm(p.x, axis=-1)
    assert kstest(r**3, "uniform").pvalue < 1e-6


def test_sampler_mass_and_determinism():
    s = StateSampler(GammaState(G12))
    assert s.mass == pytest.approx(1.0, abs=1e-9)
    a = s.sample(100, np.random.default_rng(4))
    b = s.sample(100, np.random.default_rng(4))
    assert np.array_equal(a.x, b.x) and np.array_equal(a.v, b.v)
    with pytest.raises(SamplerError):
        s.sample(0, np.random.default_rng(0))


def test_mixture_sampling_matches_pushforward_mass():
    from scipy.integrate import quad

    g14 = GammaParam.from_exponent(14)
    parts = ((0.6, GammaState(G12)), (0.4, GammaState(g14)))
    mixed = MixtureState(parts)
    n = 40000
    p = sample_state(mixed, n, seed=2)
    energy, ell2 = invariants(p)
    s = 1.0 - energy + ell2
    a12, a14 = G12.one_minus_gamma, g14.one_minus_gamma
    edges = [0.0, a14, a12, 4.0 * a12, 0.05, 1.0]

    def mass(lo, hi):
        total = 0.0
        for w, st in parts:
            c = st.cutoff

            def dens(x):
                return float(st.F_s(np.array([x]))[0]) * min(c, (1.0 - np.sqrt(x)) ** 2)

            total += w * 2.0 * np.pi**3 * quad(dens, lo, hi, limit=200)[0]
        return total

    for lo, hi in zip(edges[:-1], edges[1:]):
        prob = mass(lo, hi)
        count = int(np.sum((s >= lo) & (s < hi)))
        sigma = np.sqrt(n * prob * (1.0 - prob))
        assert abs(count - n * prob) <= 4.0 * sigma + 1.0
    assert np.all(ell2 <= g14.gamma)
    assert np.all(mixed.in_support(p, tol=1e-12))
    assert StateSampler(mixed).mass == pytest.approx(1.0, abs=1e-9)
