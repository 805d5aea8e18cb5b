import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pvmppt import pv_panel as pv
from pvmppt.pv_panel import EnvCondition, YL150P_17B

SPEC = YL150P_17B
STC = EnvCondition(1000.0, 25.0)
VT_25 = 1.380649e-23 * 298.15 / 1.602176634e-19  # 0.0256926 V

envs = st.builds(EnvCondition, st.floats(200.0, 1000.0), st.floats(5.0, 61.0))


def test_stc_reproduces_datasheet():
    v, i, p = pv.mpp_estimate(SPEC, STC)
    assert v == 18.5 and i == 8.12
    assert p == pytest.approx(150.22, abs=1e-9)
    assert abs(p - 150.0) / 150.0 < 0.02


def test_half_irradiance():
    v, i, p = pv.mpp_estimate(SPEC, EnvCondition(500.0, 25.0))
    assert i == pytest.approx(4.06, abs=1e-12)
    assert VT_25 == pytest.approx(0.0257, abs=1e-4)
    assert v == pytest.approx(18.5 + 36 * VT_25 * math.log(0.5), abs=1e-12)
    assert v == pytest.approx(17.858885, abs=1e-6)


def test_hot_voltage():
    v, _, _ = pv.mpp_estimate(SPEC, EnvCondition(1000.0, 35.0))
    assert v == pytest.approx(17.8155, abs=1e-9)


def test_zero_irradiance_convention():
    v, i, p = pv.mpp_estimate(SPEC, EnvCondition(0.0, 25.0))
    assert (v, i, p) == (pytest.approx(0.05 * 18.5), 0.0, 0.0)


def test_voltage_floor_at_tiny_irradiance():
    v, _, _ = pv.mpp_estimate(SPEC, EnvCondition(1e-300, 25.0))
    assert v == pytest.approx(0.05 * 18.5)


def test_thermal_voltage():
    assert pv.thermal_voltage(25.0) == pytest.approx(VT_25, rel=1e-15)


def test_curve_constants_pin_datasheet_points():
    # hand values: C2 = (18.5/22.9 - 1)/ln(1 - 8.12/8.61), C1 = (0.49/8.61) exp(-18.5/(C2 22.9))
    c2 = (18.5 / 22.9 - 1) / math.log(1 - 8.12 / 8.61)
    assert SPEC.c2 == pytest.approx(c2, rel=1e-14)
    assert SPEC.c2 == pytest.approx(0.06703, abs=1e-5)
    assert SPEC.c1 == pytest.approx((0.49 / 8.61) * math.exp(-18.5 / (c2 * 22.9)), rel=1e-12)


def test_iv_examples():
    assert pv.iv_current(SPEC, STC, 0.0) == 8.61
    assert pv.iv_current(SPEC, STC, 18.5) == pytest.approx(8.12, rel=0.005)
    _, voc = pv.corrected_sc_oc(SPEC, STC)
    assert voc == 22.9
    assert pv.iv_current(SPEC, STC, voc) <= 0.02 * 8.61


def test_iv_vectorized_and_clamped():
    v = np.linspace(0, 1.2 * 22.9, 50)
    i = pv.iv_current(SPEC, STC, v)
    assert i.shape == v.shape
    assert np.all(i >= 0)
    assert i[-1] == 0.0
    assert i[10] == pv.iv_current(SPEC, STC, float(v[10]))


@given(envs)
def test_iv_monotone(env):
    _, voc = pv.corrected_sc_oc(SPEC, env)
    i = pv.iv_current(SPEC, env, np.linspace(0, 1.2 * voc, 1000))
    assert np.all(np.diff(i) <= 0)


def test_mpp_solve_stc():
    v, i, p = pv.mpp_solve(SPEC, STC)
    assert abs(p - 150.2) / 150.2 < 0.01
    assert v == pytest.approx(18.924, abs=1e-9)
    assert p == pytest.approx(v * i, rel=1e-12)


def test_mpp_solve_stc_voltage_near_datasheet():
    # The explicit curve peaks at 18.924 V, 2.29% above the datasheet Vmp.
    v, _, _ = pv.mpp_solve(SPEC, STC)
    assert abs(v - 18.5) / 18.5 < 0.02


def test_mpp_solve_dark():
    assert pv.mpp_solve(SPEC, EnvCondition(0.0, 30.0)) == (0.0, 0.0, 0.0)


@given(envs)
def test_mpp_solve_is_argmax(env):
    v, _, p = pv.mpp_solve(SPEC, env)
    _, voc = pv.corrected_sc_oc(SPEC, env)
    grid = np.arange(int(voc / 1e-3) + 1) * 1e-3
    assert p >= np.max(grid * pv.iv_current(SPEC, env, grid)) - 1e-12
    lower = grid[grid < v - 5e-4]
    if lower.size:
        assert np.all(lower * pv.iv_current(SPEC, env, lower) < p)


@given(envs)
def test_estimate_and_solve_agree(env):
    p_est = pv.mpp_estimate(SPEC, env)[2]
    p_opt = pv.mpp_solve(SPEC, env)[2]
    assert abs(p_est - p_opt) / p_opt < 0.05


@given(st.floats(5, 61), st.floats(100, 999), st.floats(1, 100))
def test_power_increases_with_irradiance(t, g1, dg):
    g2 = min(g1 + dg, 1000.0)
    if g2 <= g1:
        return
    assert pv.mpp_estimate(SPEC, EnvCondition(g2, t))[2] > pv.mpp_estimate(SPEC, EnvCondition(g1, t))[2]
    assert pv.mpp_solve(SPEC, EnvCondition(g2, t))[2] > pv.mpp_solve(SPEC, EnvCondition(g1, t))[2]


@given(st.floats(100, 1000), st.floats(5, 60), st.floats(0.1, 20))
def test_temperature_coefficient_signs(g, t, dt):
    v1, i1, _ = pv.mpp_estimate(SPEC, EnvCondition(g, t))
    v2, i2, _ = pv.mpp_estimate(SPEC, EnvCondition(g, t + dt))
    assert v2 < v1 and i2 > i1


@pytest.mark.parametrize(
    "kwargs", [{"v_mpp": 23.0}, {"i_mpp": 9.0}, {"p_max": 100.0}, {"beta_voc": 0.001}, {"alpha_isc": -0.001}]
)
def test_spec_invariants(kwargs):
    with pytest.raises(ValueError):
        pv.PanelSpec(**kwargs)


@pytest.mark.parametrize("args", [(-1.0, 25.0), (500.0, -41.0), (500.0, 101.0)])
def test_env_invariants(args):
    with pytest.raises(ValueError):
        EnvCondition(*args)


def test_spec_from_file(tmp_path):
    path = tmp_path / "panel.txt"
    path.write_text("# YL150P-17B\np_max = 150\nv_mpp = 18.5\nn_cells = 36\n")
    assert pv.PanelSpec.from_file(path) == SPEC
    path.write_text("v_mp = 18.5\n")
    with pytest.raises(ValueError, match="v_mp"):
        pv.PanelSpec.from_file(path)
