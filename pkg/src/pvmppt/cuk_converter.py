"""Cuk converter: static gain, reflected load, and averaged dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend, kvfile
from .pv_panel import EnvCondition, PanelSpec, corrected_sc_oc, iv_current

D_MIN = 0.05
D_MAX = 0.95


class DomainError(ValueError):
    pass


class DivergenceError(FloatingPointError):
    pass


@dataclass(frozen=True)
class CukDesign:
    e1: float = 18.5
    e2: float = -38.729
    p_s: float = 150.0
    p_o: float = 150.0
    f_sw: float = 100e3
    l1: float = 308e-6
    l2: float = 3232e-6
    c1: float = 5e-6
    c2: float = 25e-9

    def __post_init__(self):
        if not self.e1 > 0 > self.e2:
            raise ValueError("need e1 > 0 > e2")
        for name in ("f_sw", "l1", "l2", "c1", "c2", "p_s", "p_o"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_file(cls, path) -> "CukDesign":
        return kvfile.load_dataclass(cls, path)

    @property
    def nominal_duty(self) -> float:
        return duty_from_gain(self.e1, -self.e2)


BENCH_DESIGN = CukDesign()


def duty_from_gain(v_in: float, v_out_mag: float) -> float:
    """Duty giving |Vo/Vin| = D / (1 - D)."""
    if not v_in > 0:
        raise DomainError(f"v_in must be positive, got {v_in}")
    if v_out_mag < 0:
        raise DomainError(f"v_out_mag must be >= 0, got {v_out_mag}")
    return v_out_mag / (v_in + v_out_mag)


def static_gain(duty: float) -> float:
    return duty / (1.0 - duty)


def duty_for_mpp(v_mpp: float, p_mpp: float, r_load: float) -> float:
    """Label duty placing a lossless converter's load at the panel MPP."""
    if not (v_mpp > 0 and p_mpp > 0 and r_load > 0):
        raise DomainError(f"inputs must be positive, got ({v_mpp}, {p_mpp}, {r_load})")
    v_out = math.sqrt(p_mpp * r_load)
    return min(max(duty_from_gain(v_mpp, v_out), D_MIN), D_MAX)


def input_resistance(duty: float, r_load: float) -> float:
    if not 0 < duty < 1:
        raise DomainError(f"duty {duty} outside (0, 1)")
    if not r_load > 0:
        raise DomainError("r_load must be positive")
    ratio = (1.0 - duty) / duty
    return r_load * ratio * ratio


def duty_for_input_resistance(r_in: float, r_load: float) -> float:
    """Inverse of :func:`input_resistance`."""
    return 1.0 / (1.0 + math.sqrt(r_in / r_load))


def operating_point(spec: PanelSpec, env: EnvCondition, duty: float, r_load: float, tol: float = 1e-3):
    """Panel ``(v, i, p)`` where the reflected load line crosses the I-V curve."""
    r_in = input_resistance(duty, r_load)
    if env.irradiance == 0:
        return 0.0, 0.0, 0.0
    isc, voc = corrected_sc_oc(spec, env)
    v = _backend.kernels.load_line_voltage(isc, voc, spec.c1, spec.c2, r_in, tol)
    i = iv_current(spec, env, v)
    return v, i, v * i


def equilibrium(duty: float, v_in: float, r_load: float):
    """Steady state ``(i_l1, i_l2, v_c1, v_c2)`` of the averaged model."""
    v1 = v_in / (1.0 - duty)
    v2 = duty * v1
    i2 = v2 / r_load
    i1 = duty / (1.0 - duty) * i2
    return np.array([i1, i2, v1, v2])


DIVERGENCE_LIMIT = 1e6


def averaged_step(design: CukDesign, state, duty, v_in, r_load, dt):
    """One RK4 step of the state-space averaged model.

    State is ``(i_l1, i_l2, v_c1, v_c2)`` with ``v_c2`` the magnitude of
    the inverted output.
    """
    return averaged_run(design, state, duty, v_in, r_load, dt, 1)[-1]


def averaged_run(design: CukDesign, state, duty, v_in, r_load, dt, n_steps: int):
    """``n_steps`` RK4 steps; returns an ``(n_steps + 1, 4)`` trajectory."""
    if not 0 < duty < 1:
        raise DomainError(f"duty {duty} outside (0, 1)")
    out = np.empty((int(n_steps) + 1, 4))
    bad = _backend.kernels.cuk_run(
        np.ascontiguousarray(state, dtype=float),
        design.l1, design.l2, design.c1, design.c2,
        float(duty), float(v_in), float(r_load), float(dt), out, DIVERGENCE_LIMIT,
    )
    if bad >= 0:
        raise DivergenceError(f"averaged model diverged at step {bad} with dt={dt:g} s")
    return out


def default_dt(design: CukDesign) -> float:
    return 1.0 / (20.0 * design.f_sw)


def stored_energy(design: CukDesign, states) -> np.ndarray:
    s = np.atleast_2d(states)
    return 0.5 * (
        design.l1 * s[:, 0] ** 2 + design.l2 * s[:, 1] ** 2 + design.c1 * s[:, 2] ** 2 + design.c2 * s[:, 3] ** 2
    )
