import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from elmpc.errors import DomainError, InvalidInputError, InvalidPerturbationError
from elmpc.vehicle import (
    GRAVITY,
    Perturbation,
    VehicleParams,
    VehicleState,
    dynamics_rhs,
    integrate,
    linear_tire_force,
    perturb_params,
    rhs_array,
    saturating_tire_lateral_force,
    slip_quantities,
    step,
)

NOMINAL = VehicleParams()
SAT = VehicleParams(tire_model="saturating")


def _sympy_eq2():
    """Equations of motion re-derived symbolically, term by term."""
    X, Y, phi, xd, yd, phid, dlt = sp.symbols("X Y phi xd yd phid delta")
    m, Iz, a, b, Ccf, Ccr, Clf, Clr = sp.symbols("m Iz a b Ccf Ccr Clf Clr")
    sf = sr = 0
    front = Ccf * (dlt - (yd + a * phid) / xd)
    rear = Ccr * (b * phid - yd) / xd
    ydd = (-m * xd * phid + 2 * (front + rear)) / m
    xdd = (m * yd * phid + 2 * (Clf * sf + front * dlt + Clr * sr)) / m
    phidd = 2 * (a * front - b * rear) / Iz
    Ydot = xd * sp.sin(phi) + yd * sp.cos(phi)
    Xdot = xd * sp.cos(phi) - yd * sp.sin(phi)
    args = (X, Y, phi, xd, yd, phid, dlt, m, Iz, a, b, Ccf, Ccr, Clf, Clr)
    return sp.lambdify(args, [Xdot, Ydot, phid, xdd, ydd, phidd], "math")


def test_linear_tire_force():
    assert linear_tire_force(80000.0, 0.0) == 0.0
    assert linear_tire_force(80000.0, 0.01) == pytest.approx(800.0, rel=1e-15)
    with pytest.raises(InvalidInputError):
        linear_tire_force(80000.0, float("nan"))
    with pytest.raises(InvalidInputError):
        linear_tire_force(-1.0, 0.1)


def test_saturating_tire_zero_and_odd():
    assert saturating_tire_lateral_force(SAT, "front", 0.0) == 0.0
    fp = saturating_tire_lateral_force(SAT, "front", 0.5)
    fm = saturating_tire_lateral_force(SAT, "front", -0.5)
    assert fp == -fm
    assert abs(fp) <= SAT.mu * SAT.fz_front


@pytest.mark.parametrize("axle,stiff", [("front", SAT.Ccf), ("rear", SAT.Ccr)])
def test_saturating_tire_slope_matches_stiffness(axle, stiff):
    h = 1e-7
    slope = (saturating_tire_lateral_force(SAT, axle, h) - saturating_tire_lateral_force(SAT, axle, -h)) / (2 * h)
    assert slope == pytest.approx(stiff, rel=1e-6)


@given(st.floats(-20.0, 20.0))
def test_saturating_tire_bounded(alpha):
    for axle, fz in (("front", SAT.fz_front), ("rear", SAT.fz_rear)):
        assert abs(saturating_tire_lateral_force(SAT, axle, alpha)) <= SAT.mu * fz * (1 + 1e-12)


def test_params_axle_loads_sum_to_weight():
    p = VehicleParams(m=1723.0, a=1.05, b=1.61)
    assert p.fz_front + p.fz_rear == pytest.approx(p.m * GRAVITY, rel=1e-9)


@pytest.mark.parametrize("kw", [{"m": 0.0}, {"a": -1.0}, {"Ccf": 0.0}, {"mu": 1.6}, {"mu": 0.0},
                                {"tire_model": "pacejka"}, {"Iz": float("inf")}])
def test_params_invariants(kw):
    with pytest.raises(InvalidInputError):
        VehicleParams(**kw)


def test_slip_quantities():
    assert slip_quantities(VehicleState(vx=20.0), 0.0, NOMINAL) == slip_quantities(VehicleState(vx=5.0), 0.0, NOMINAL)
    s = slip_quantities(VehicleState(vx=20.0), 0.0, NOMINAL)
    assert (s.alpha_f, s.alpha_r, s.s_f, s.s_r) == (0.0, 0.0, 0.0, 0.0)
    s = slip_quantities(VehicleState(vx=20.0), 0.1, NOMINAL)
    assert (s.alpha_f, s.alpha_r) == (0.1, 0.0)
    p = VehicleParams(a=1.2, b=1.3)
    s = slip_quantities(VehicleState(vx=20.0, vy=0.5, r=0.1), 0.05, p)
    # 0.05 - (0.5 + 0.12)/20 and (0.13 - 0.5)/20
    assert s.alpha_f == pytest.approx(0.019, abs=1e-15)
    assert s.alpha_r == pytest.approx(-0.0185, abs=1e-15)
    with pytest.raises(DomainError):
        slip_quantities(VehicleState(vx=0.0), 0.0, NOMINAL)


def test_rhs_straight_running():
    d = dynamics_rhs(VehicleState(vx=20.0), 0.0, NOMINAL)
    assert d.dX == 20.0
    assert d.dY == 0 and d.dphi == 0 and d.dvx == 0 and d.dvy == 0 and d.dr == 0


def test_rhs_rotated_kinematics():
    d = dynamics_rhs(VehicleState(phi=math.pi / 2, vx=10.0), 0.0, NOMINAL)
    assert d.dY == pytest.approx(10.0, abs=1e-14)
    assert d.dX == pytest.approx(0.0, abs=1e-14)


def test_rhs_matches_symbolic_rederivation():
    oracle = _sympy_eq2()
    rng = np.random.default_rng(11)
    p = NOMINAL
    worst = 0.0
    for _ in range(1000):
        x = np.array([rng.uniform(-50, 50), rng.uniform(-5, 5), rng.uniform(-np.pi, np.pi),
                      rng.uniform(2, 40), rng.uniform(-2, 2), rng.uniform(-1, 1)])
        delta = rng.uniform(-0.4, 0.4)
        ref = oracle(*x, delta, p.m, p.Iz, p.a, p.b, p.Ccf, p.Ccr, p.Clf, p.Clr)
        worst = max(worst, np.max(np.abs(rhs_array(x, delta, p) - np.array(ref))))
    assert worst <= 1e-12


@pytest.mark.parametrize("params", [NOMINAL, SAT])
def test_mirror_symmetry(params):
    rng = np.random.default_rng(3)
    for _ in range(100):
        X, Y, phi, vx, vy, r = rng.uniform(-1, 1, 6) * [30, 3, 0.5, 0, 1, 0.5] + [0, 0, 0, 20, 0, 0]
        delta = rng.uniform(-0.2, 0.2)
        d = rhs_array(np.array([X, Y, phi, vx, vy, r]), delta, params)
        dm = rhs_array(np.array([X, -Y, -phi, vx, -vy, -r]), -delta, params)
        np.testing.assert_allclose(dm[[1, 2, 4, 5]], -d[[1, 2, 4, 5]], rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(dm[[0, 3]], d[[0, 3]], rtol=1e-13, atol=1e-13)


def test_rhs_domain_error():
    with pytest.raises(DomainError):
        dynamics_rhs(VehicleState(vx=-1.0), 0.0, NOMINAL)


@pytest.mark.parametrize("method", ["euler", "rk4"])
def test_step_identity_and_straight_flow(method):
    s = VehicleState(X=1.0, Y=0.2, phi=0.1, vx=15.0, vy=0.1, r=0.05)
    assert step(s, 0.03, NOMINAL, 0.0, method) == s
    straight = VehicleState(X=3.0, vx=20.0)
    out = step(straight, 0.0, NOMINAL, 0.05, method)
    assert out.X == 3.0 + 20.0 * 0.05
    assert (out.Y, out.phi, out.vx, out.vy, out.r) == (0.0, 0.0, 20.0, 0.0, 0.0)


def _maneuver(dt, method, params=SAT):
    # constant steer from a non-equilibrium start; a sampled input would add first-order error
    x = VehicleState(vx=20.0, vy=0.4, r=-0.1).as_array()
    for _ in range(int(round(1.0 / dt))):
        x = integrate(x, 0.06, params, dt, method)
    return x


def test_rk4_empirical_order():
    ref = _maneuver(1e-5, "rk4")
    e1 = np.max(np.abs(_maneuver(0.02, "rk4") - ref))
    e2 = np.max(np.abs(_maneuver(0.01, "rk4") - ref))
    assert math.log2(e1 / e2) >= 3.8


def test_rk4_close_to_euler_for_one_small_step():
    x = VehicleState(vx=20.0, vy=0.3, r=0.2, phi=0.1).as_array()
    for dt in (1e-2, 1e-3):
        diff = np.max(np.abs(integrate(x, 0.05, SAT, dt, "rk4") - integrate(x, 0.05, SAT, dt, "euler")))
        assert diff <= 50.0 * dt * dt


def test_step_rejects_bad_method():
    with pytest.raises(InvalidInputError):
        step(VehicleState(), 0.0, NOMINAL, 0.01, "midpoint")


def test_perturb_identity():
    assert perturb_params(NOMINAL, Perturbation()) == NOMINAL


def test_perturb_cg_shift_keeps_wheelbase():
    p = perturb_params(NOMINAL, Perturbation(cg_shift=0.1))
    assert p.a - NOMINAL.a == pytest.approx(0.1, abs=1e-15)
    assert p.a + p.b == pytest.approx(NOMINAL.a + NOMINAL.b, abs=1e-15)
    assert p.fz_front + p.fz_rear == pytest.approx(p.m * GRAVITY, rel=1e-12)


def test_perturb_scales_and_overrides():
    p = perturb_params(NOMINAL, Perturbation(mass_scale=1.1, stiffness_scale=0.9, tire_model_override="saturating"))
    assert p.m == pytest.approx(1650.0)
    assert p.Ccf == pytest.approx(63000.0)
    assert p.Clr == pytest.approx(72000.0)
    assert p.tire_model == "saturating"


def test_perturb_rejects_invalid():
    with pytest.raises(InvalidPerturbationError):
        perturb_params(NOMINAL, Perturbation(cg_shift=-1.3))
