import math

import numpy as np
import pytest
from hypothesis import given
from scipy.integrate import trapezoid
from hypothesis import strategies as st

from pvmppt import cuk_converter as ck
from pvmppt import pv_panel as pv
from pvmppt.pv_panel import EnvCondition, YL150P_17B

SPEC = YL150P_17B
STC = EnvCondition(1000.0, 25.0)
DESIGN = ck.BENCH_DESIGN


def rk4_oracle(design, s, d, vin, r, dt):
    """Plain scalar RK4 on the averaged equations."""
    def f(x):
        i1, i2, v1, v2 = x
        return np.array([
            (vin - (1 - d) * v1) / design.l1,
            (d * v1 - v2) / design.l2,
            ((1 - d) * i1 - d * i2) / design.c1,
            (i2 - v2 / r) / design.c2,
        ])
    k1 = f(s)
    k2 = f(s + dt / 2 * k1)
    k3 = f(s + dt / 2 * k2)
    k4 = f(s + dt * k3)
    return s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


# static relations


def test_nominal_duty():
    assert ck.duty_from_gain(18.5, 38.729) == pytest.approx(0.6768, abs=5e-4)
    assert DESIGN.nominal_duty == pytest.approx(38.729 / 57.229, rel=1e-15)


def test_gain_trivia():
    assert ck.duty_from_gain(12.0, 12.0) == 0.5
    assert ck.duty_from_gain(12.0, 0.0) == 0.0


@pytest.mark.parametrize("args", [(0.0, 1.0), (-1.0, 1.0), (5.0, -1.0)])
def test_gain_domain(args):
    with pytest.raises(ck.DomainError):
        ck.duty_from_gain(*args)


@given(st.floats(0.0501, 0.9499), st.floats(0.1, 100.0))
def test_gain_round_trip(d, v):
    assert ck.duty_from_gain(v, v * d / (1 - d)) == pytest.approx(d, abs=1e-12)


def test_duty_for_mpp_examples():
    assert math.sqrt(150.22 * 10) == pytest.approx(38.76, abs=0.01)
    assert ck.duty_for_mpp(18.5, 150.2, 10.0) == pytest.approx(0.677, abs=1e-3)
    assert ck.duty_for_mpp(18.5, 150.2, 1e-9) == ck.D_MIN
    assert ck.duty_for_mpp(0.1, 1000.0, 1e6) == ck.D_MAX


@given(st.floats(1, 30), st.floats(1, 300), st.floats(0.5, 50))
def test_duty_for_mpp_rescaling(v, p, r):
    assert ck.duty_for_mpp(v, 4 * p, r / 4) == pytest.approx(ck.duty_for_mpp(v, p, r), rel=1e-14)


@pytest.mark.parametrize("args", [(0, 1, 1), (1, 0, 1), (1, 1, -1)])
def test_duty_for_mpp_domain(args):
    with pytest.raises(ck.DomainError):
        ck.duty_for_mpp(*args)


def test_input_resistance_examples():
    assert ck.input_resistance(0.5, 10.0) == 10.0
    assert ck.input_resistance(0.6768, 10.0) == pytest.approx(2.28, abs=0.01)
    assert ck.input_resistance(1 - 1e-9, 10.0) < 1e-15
    for d in (0.0, 1.0):
        with pytest.raises(ck.DomainError):
            ck.input_resistance(d, 10.0)


@given(st.floats(0.01, 0.99), st.floats(0.5, 50))
def test_input_resistance_inverse(d, r):
    assert ck.duty_for_input_resistance(ck.input_resistance(d, r), r) == pytest.approx(d, rel=1e-12)


# operating point


def test_load_matched_duty_reaches_mpp():
    d = ck.duty_for_input_resistance(18.5 / 8.12, 10.0)
    p = ck.operating_point(SPEC, STC, d, 10.0)[2]
    assert abs(p - pv.mpp_solve(SPEC, STC)[2]) / pv.mpp_solve(SPEC, STC)[2] < 0.01


def test_floor_duty_near_open_circuit():
    v, _, p = ck.operating_point(SPEC, STC, ck.D_MIN, 10.0)
    assert v > 0.95 * 22.9
    assert p < 0.2 * pv.mpp_solve(SPEC, STC)[2]


def test_dark_operating_point():
    assert ck.operating_point(SPEC, EnvCondition(0.0, 25.0), 0.5, 10.0) == (0.0, 0.0, 0.0)


@given(st.floats(100, 1000), st.floats(5, 61), st.floats(0.05, 0.95), st.floats(1, 19))
def test_operating_point_on_both_curves(g, t, d, r):
    env = EnvCondition(g, t)
    v, i, p = ck.operating_point(SPEC, env, d, r, tol=1e-9)
    r_in = ck.input_resistance(d, r)
    assert i == pytest.approx(pv.iv_current(SPEC, env, v), rel=1e-12)
    assert abs(i - v / r_in) <= 1e-6 * max(1.0, 1.0 / r_in)
    assert p <= pv.mpp_solve(SPEC, env)[2] + 1e-6


@given(st.floats(100, 1000), st.floats(5, 61), st.sampled_from([1.0, 5.0, 10.0, 19.0]))
def test_power_unimodal_in_duty(g, t, r):
    env = EnvCondition(g, t)
    duties = np.linspace(0.05, 0.95, 181)
    p = np.array([ck.operating_point(SPEC, env, d, r, tol=1e-12)[2] for d in duties])
    slope = np.diff(p)
    signs = np.sign(slope[np.abs(slope) > 1e-9])
    assert np.count_nonzero(np.diff(signs) != 0) <= 1


# averaged model


def test_equilibrium_is_fixed_point():
    d = 0.6768
    eq = ck.equilibrium(d, 18.5, 10.0)
    assert eq[3] == pytest.approx(18.5 * d / (1 - d), rel=1e-14)
    traj = ck.averaged_run(DESIGN, eq, d, 18.5, 10.0, ck.default_dt(DESIGN), 1000)
    np.testing.assert_allclose(traj, np.broadcast_to(eq, traj.shape), rtol=1e-4)


def test_step_matches_scalar_rk4():
    s = np.array([1.0, 0.5, 20.0, 10.0])
    dt = ck.default_dt(DESIGN)
    got = ck.averaged_step(DESIGN, s, 0.6, 18.5, 10.0, dt)
    np.testing.assert_allclose(got, rk4_oracle(DESIGN, s, 0.6, 18.5, 10.0, dt), rtol=1e-13, atol=1e-13)


def test_settles_to_rated_output():
    d = ck.duty_from_gain(18.5, 38.729)
    dt = ck.default_dt(DESIGN)
    traj = ck.averaged_run(DESIGN, np.zeros(4), d, 18.5, 10.0, dt, int(0.05 / dt))
    assert abs(traj[-1, 3] - 38.73) / 38.73 < 0.02
    np.testing.assert_allclose(traj[-1], [8.1078, 3.8729, 57.229, 38.729], rtol=1e-3)


@pytest.mark.parametrize("d", [0.2, 0.35, 0.5, 0.65, 0.8])
def test_static_gain_reproduced(d):
    dt = ck.default_dt(DESIGN)
    # light damping at low duty: D = 0.2 takes about 0.22 s to enter the 2% band
    traj = ck.averaged_run(DESIGN, np.zeros(4), d, 18.5, 10.0, dt, int(0.3 / dt))
    assert traj[-1, 3] == pytest.approx(18.5 * ck.static_gain(d), rel=0.02)


def test_energy_balance_over_transient():
    d, vin, r = 0.6768, 18.5, 10.0
    dt = ck.default_dt(DESIGN)
    traj = ck.averaged_run(DESIGN, np.zeros(4), d, vin, r, dt, int(0.01 / dt))
    p_in = vin * traj[:, 0]
    p_out = traj[:, 3] ** 2 / r
    e_in = trapezoid(p_in, dx=dt)
    e_out = trapezoid(p_out, dx=dt)
    drift = ck.stored_energy(DESIGN, traj[-1])[0] - ck.stored_energy(DESIGN, traj[0])[0]
    assert abs(e_in - (e_out + drift)) <= 0.01 * e_in


def test_divergence_names_dt():
    with pytest.raises(ck.DivergenceError, match="dt=0.0001"):
        ck.averaged_run(DESIGN, np.zeros(4), 0.6768, 18.5, 10.0, 1e-4, 2000)


def test_bad_duty():
    with pytest.raises(ck.DomainError):
        ck.averaged_step(DESIGN, np.zeros(4), 1.0, 18.5, 10.0, 1e-6)


def test_design_validation_and_file(tmp_path):
    with pytest.raises(ValueError):
        ck.CukDesign(e2=5.0)
    with pytest.raises(ValueError):
        ck.CukDesign(l1=0.0)
    path = tmp_path / "cuk.txt"
    path.write_text("e1 = 18.5\ne2 = -38.729\nf_sw = 100000\nl1 = 0.000308\n")
    assert ck.CukDesign.from_file(path) == DESIGN
    path.write_text("L1 = 1\n")
    with pytest.raises(ValueError, match="L1"):
        ck.CukDesign.from_file(path)
