from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from kurthbif import abel
from kurthbif.errors import DomainError
from kurthbif.kurth import KURTH_NORM, RHO0, f_kurth
from kurthbif.params import GammaParam
from kurthbif.reduction import PhasePoint
from kurthbif.sampling import sample_state
from kurthbif.steady import (
    PUSHFORWARD,
    ConstantProfileState,
    GammaState,
    KurthState,
    MixtureState,
    PointClass,
    SingularSetKind,
    SingularSets,
    big_phi,
    classify_point,
    f_gamma,
    l1_distance_to_kurth,
    m1,
    mass_upper_bound,
    q_weight,
    rho_f_gamma,
    rho_velocity,
    total_mass,
)

G12 = GammaParam.from_exponent(12)
G16 = GammaParam.from_exponent(16)


def _point(w, ell2=0.0):
    """Phase point with |x|^2 + |v|^2 - l^2 = w and |x ^ v|^2 = ell2."""
    energy = w + ell2
    # x = (a, 0, 0), v = (0, b, 0): energy a^2 + b^2, l = a b
    disc = math.sqrt(energy * energy - 4.0 * ell2)
    a = math.sqrt(0.5 * (energy + disc))
    b = math.sqrt(max(0.5 * (energy - disc), 0.0))
    return PhasePoint(np.array([a, 0.0, 0.0]), np.array([0.0, b, 0.0]))


def test_cap_function():
    u = np.array([-1.0, -0.75, 0.0])
    assert_allclose(m1(u), (1.0 - np.sqrt(1.0 + u)) ** 2)


def test_profile_values_match_direct_formulas():
    u = np.array([-0.99999, -1.0 + 0.5 * G12.one_minus_gamma, -0.5, 0.0, 0.5])
    live = u <= 0.0
    direct = np.zeros_like(u)
    direct[live] = abel.phi(u[live] + 1.0, G12)
    assert_allclose(big_phi(u, G12), direct, rtol=1e-12)
    direct_q = np.zeros_like(u)
    direct_q[live] = RHO0 * np.asarray(abel.phi_prime(u[live] + 1.0, G12))
    assert_allclose(q_weight(u, G12), direct_q, rtol=1e-12)
    assert q_weight(-1.0, G12) == 0.0


def test_evaluate_against_uncached_profile():
    p = sample_state(GammaState(G12), 2000, seed=3)
    energy = np.sum(p.x**2, -1) + np.sum(p.v**2, -1)
    ell2 = np.sum(np.cross(p.x, p.v) ** 2, -1)
    ref = RHO0 * np.asarray(abel.phi_prime(1.0 - energy + ell2, G12))
    assert_allclose(f_gamma(p, G12), ref, rtol=1e-11)


def test_jump_and_blow_up_sides():
    g = G12
    st = GammaState(g)
    a = g.one_minus_gamma
    # on the jump set the value from the side w > Gamma is the split limit
    assert st.F_s(a) == pytest.approx(RHO0 * abel.l_gamma(g), rel=1e-12)
    above = float(f_gamma(_point(g.gamma + 1e-3 * a), g))
    assert above == pytest.approx(RHO0 * abel.l_gamma(g), rel=1e-2)
    # below the jump: inverse-root growth with coefficient (a / Gamma^2) / pi^2
    gap = 1e-10 * a
    below = float(f_gamma(_point(g.gamma - gap), g))
    coef = (below / RHO0 - abel.l_gamma(g)) * math.sqrt(gap)
    assert coef == pytest.approx(a / g.gamma**2 / math.pi**2, rel=2e-2)
    # zero beyond the angular momentum cutoff
    assert float(f_gamma(_point(1.0 - 1e-10, ell2=g.gamma + 1e-6), g)) == 0.0
    assert float(f_gamma(_point(1.0 - 1e-10, ell2=g.gamma - 1e-6), g)) > 0.0


def test_kurth_state_consistency():
    k = KurthState()
    p = sample_state(k, 500, seed=1)
    assert_allclose(k.evaluate(p), f_kurth(p))
    assert k.F_s(0.25) == pytest.approx(KURTH_NORM / 0.5)
    assert k.mass() == pytest.approx(1.0, abs=1e-13)
    assert rho_velocity(0.6, k) == pytest.approx(RHO0, rel=1e-9)


def test_mass_routes_agree():
    routes = [total_mass(G16, route=r) for r in ("invariant", "radial")]
    assert_allclose(routes, 1.0, atol=1e-9)
    assert mass_upper_bound(G16) >= 1.0
    with pytest.raises(DomainError):
        total_mass(G16, route="bogus")


def test_density_limits():
    assert rho_f_gamma(1.0, G12) == pytest.approx(RHO0, rel=1e-6)
    assert rho_f_gamma(0.0, G12) == pytest.approx(RHO0, rel=1e-9)
    assert rho_f_gamma(1.3, G12) == 0.0
    with pytest.raises(DomainError):
        rho_f_gamma(-0.1, G12)


def test_mixture_density_and_mass():
    mixed = MixtureState(((0.25, GammaState(G12)), (0.75, GammaState(G16))))
    assert mixed.mass() == pytest.approx(1.0, abs=1e-12)
    assert_allclose(mixed.rho(np.array([0.2, 0.99995])), RHO0, rtol=1e-8)
    assert mixed.cutoff == G16.gamma
    with pytest.raises(DomainError):
        MixtureState(((0.5, GammaState(G12)), (0.6, GammaState(G16))))
    with pytest.raises(DomainError):
        MixtureState(())


def test_constant_control_is_not_uniform():
    ctl = ConstantProfileState(G12)
    assert ctl.mass() == pytest.approx(1.0, abs=1e-12)
    rho = np.array([ctl.rho(r) for r in (0.1, 0.5, 0.9)])
    assert np.ptp(rho / RHO0) > 0.1
    # field of the enclosed mass is x M(1) at the unit sphere
    assert ctl.grad_potential(np.array([0.0, 0.0, 1.0]))[2] == pytest.approx(1.0, rel=1e-6)


def test_l1_distance_against_adaptive_quadrature():
    g = G12
    a = g.one_minus_gamma
    st, k = GammaState(g), KurthState()

    def first(s):
        cap = min(g.gamma, (1.0 - math.sqrt(s)) ** 2)
        return abs(float(st.F_s(np.array([s]))[0]) - float(k.F_s(np.array([s]))[0])) * cap

    def second(s):
        return float(k.F_s(np.array([s]))[0]) * max(0.0, (1.0 - math.sqrt(s)) ** 2 - g.gamma)

    t_c = (a / (1.0 + math.sqrt(g.gamma))) ** 2
    pts = sorted({a, t_c, 4 * a, 16 * a})
    one = sum(
        quad(first, lo, hi, limit=400, epsabs=1e-16, epsrel=1e-11)[0]
        for lo, hi in zip([0.0] + pts, pts + [1.0])
    )
    two = quad(second, 0.0, t_c, epsabs=1e-18, epsrel=1e-11)[0]
    oracle = PUSHFORWARD * (one + two)
    assert l1_distance_to_kurth(g) == pytest.approx(oracle, rel=1e-6)
    assert l1_distance_to_kurth(GammaParam.kurth()) == 0.0


def test_classification_cases():
    g = G12
    assert classify_point(_point(0.5), g, 1e-9) is PointClass.INTERIOR
    assert classify_point(_point(1.0 - 1e-12), g, 1e-9) is PointClass.NEAR_M
    assert classify_point(_point(g.gamma - 1e-11), g, 1e-9) is PointClass.NEAR_N_BELOW
    assert classify_point(_point(g.gamma + 1e-11), g, 1e-9) is PointClass.NEAR_N_ABOVE
    assert classify_point(_point(1.0 - 1e-9, ell2=0.9999), g, 1e-9) is PointClass.OUTSIDE
    assert classify_point(_point(1.1), g, 1e-9) is PointClass.OUTSIDE


def test_singular_set_distance():
    g = G12
    n_set = SingularSets(SingularSetKind.N_GAMMA, g)
    m_set = SingularSets(SingularSetKind.M_GAMMA, g)
    assert n_set.level == g.gamma and m_set.level == 1.0
    p = _point(0.7, ell2=0.1)
    assert n_set.distance(p) == pytest.approx(g.gamma - 0.7, abs=1e-12)
    assert m_set.distance(p) == pytest.approx(0.3, abs=1e-12)
    assert math.isinf(n_set.distance(_point(1.0 - 1e-9, ell2=0.9999)))
