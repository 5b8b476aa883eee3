from __future__ import annotations

import math

import numpy as np
import pytest

from kurthbif import weakcheck as wc
from kurthbif.errors import DomainError
from kurthbif.orbit import PeriodicOrbit
from kurthbif.params import GammaParam
from kurthbif.reduction import PhasePoint, invariants
from kurthbif.sampling import StateSampler
from kurthbif.steady import ConstantProfileState, GammaState, KurthState

G12 = GammaParam.from_exponent(12)


def test_gate_threshold():
    assert wc.gate_threshold(1) == pytest.approx(3.0, rel=1e-12)
    assert wc.gate_threshold(20) == pytest.approx(3.8166, abs=1e-3)
    with pytest.raises(DomainError):
        wc.gate_threshold(0)


def test_test_function_gradients_by_differences():
    tf = wc.TestFunction.random(3, window=(0.5, 4.0))
    rng = np.random.default_rng(0)
    x, v, t = rng.uniform(-0.8, 0.8, 3), rng.uniform(-0.8, 0.8, 3), 1.7
    _, dt, gx, gv = tf.evaluate(PhasePoint(x, v), t)
    h = 1e-6

    def val(x_, v_, t_):
        return tf.evaluate(PhasePoint(x_, v_), t_)[0][0]

    assert dt[0] == pytest.approx((val(x, v, t + h) - val(x, v, t - h)) / (2 * h), rel=1e-6)
    for i in range(3):
        e = np.eye(3)[i] * h
        assert gx[0, i] == pytest.approx((val(x + e, v, t) - val(x - e, v, t)) / (2 * h), rel=1e-5, abs=1e-9)
        assert gv[0, i] == pytest.approx((val(x, v + e, t) - val(x, v - e, t)) / (2 * h), rel=1e-5, abs=1e-9)


def test_test_function_support_and_window():
    tf = wc.TestFunction.random(1, radius=1.5, window=(0.0, 1.0))
    far = PhasePoint(np.array([1.6, 0.0, 0.0]), np.zeros(3))
    assert tf.evaluate(far, 0.5)[0][0] == 0.0
    near = PhasePoint(np.array([0.1, 0.0, 0.0]), np.zeros(3))
    assert tf.evaluate(near, 1.5)[0][0] == 0.0
    with pytest.raises(DomainError):
        wc.TestFunction.random(0, degree=5)


def test_flow_map_preserves_invariants_and_composes():
    rng = np.random.default_rng(1)
    p = PhasePoint(rng.standard_normal((50, 3)), rng.standard_normal((50, 3)))
    q = wc.flow_map(0.7, wc.flow_map(0.4, p))
    r = wc.flow_map(1.1, p)
    assert np.allclose(q.x, r.x) and np.allclose(q.v, r.v)
    assert np.allclose(invariants(p)[0], invariants(r)[0])
    assert np.allclose(invariants(p)[1], invariants(r)[1])


def test_static_residuals_of_solutions_pass_and_control_fails():
    reports = [
        wc.static_residual(KurthState(), wc.TestFunction.random(s), 20000, s + 7)
        for s in range(5)
    ]
    batch = wc.residual_batch(reports)
    assert batch["passed"], batch["max_z"]
    ctl = ConstantProfileState(G12)
    sampler = StateSampler(ctl)
    bad = [
        wc.static_residual(ctl, wc.TestFunction.random(s), 20000, s + 7, sampler=sampler)
        for s in range(5)
    ]
    assert not wc.residual_batch(bad)["passed"]


class _WrongOrbit:
    """A breathing law that does not solve the radial equation."""

    def state_at(self, t):
        t = np.asarray(t, dtype=float)
        return 1.0 + 0.3 * np.sin(t), 0.3 * np.cos(t)


def test_dynamic_residual_detects_wrong_breathing():
    state = GammaState(G12)
    sampler = StateSampler(state)
    good, bad = [], []
    for s in range(4):
        tf = wc.TestFunction.random(s, window=(0.5, 4.0))
        good.append(wc.dynamic_residual(state, PeriodicOrbit(0.3), tf, 20000, s, sampler=sampler))
        bad.append(wc.dynamic_residual(state, _WrongOrbit(), tf, 20000, s, sampler=sampler))
    assert wc.residual_batch(good)["passed"]
    assert not wc.residual_batch(bad)["passed"]
    with pytest.raises(DomainError):
        wc.dynamic_residual(state, PeriodicOrbit(0.3), wc.TestFunction.random(0), sampler=sampler)


def test_transport_continuity_in_time():
    state = KurthState()
    orbit = PeriodicOrbit(0.5)
    sampler = StateSampler(state)
    dists = [
        wc.transport_l1_continuity(state, orbit, 1.0, dt, 20000, 0, sampler=sampler).estimate
        for dt in (1e-1, 1e-2, 1e-3)
    ]
    assert dists[0] > dists[1] > dists[2] > 0.0
    zero = wc.transport_l1_continuity(state, orbit, 1.0, 0.0)
    assert zero.estimate == 0.0
    # one full period brings the state back
    back = wc.transport_l1_continuity(state, orbit, 1.0, orbit.period, 20000, 0, sampler=sampler)
    assert back.estimate <= 1e-6


def test_report_serialization():
    rep = wc.ResidualReport("static", 0.3, 0.1, 100, "x", 5)
    assert rep.z_score == pytest.approx(3.0)
    assert rep.passed
    assert not rep.with_threshold(2.0).passed
    d = rep.to_dict()
    assert d["pass"] is True and d["tf_seed"] == 5 and d["std_error"] == 0.1
    assert math.isinf(wc.ResidualReport("s", 1.0, 0.0, 1).z_score)
