"""YL150P-17B panel model: datasheet MPP correction and an explicit I-V curve."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kvfile

BOLTZMANN = 1.380649e-23
ELEMENTARY_CHARGE = 1.602176634e-19


@dataclass(frozen=True)
class PanelSpec:
    p_max: float = 150.0
    efficiency: float = 0.15
    v_mpp: float = 18.5
    i_mpp: float = 8.12
    v_oc: float = 22.9
    i_sc: float = 8.61
    beta_voc: float = -0.0037
    alpha_isc: float = 0.0006
    n_cells: int = 36
    g_stc: float = 1000.0
    t_stc: float = 25.0

    def __post_init__(self):
        if not 0 < self.v_mpp < self.v_oc:
            raise ValueError("need 0 < v_mpp < v_oc")
        if not 0 < self.i_mpp < self.i_sc:
            raise ValueError("need 0 < i_mpp < i_sc")
        if abs(self.v_mpp * self.i_mpp - self.p_max) / self.p_max >= 0.02:
            raise ValueError("v_mpp * i_mpp differs from p_max by 2% or more")
        if not self.beta_voc < 0 < self.alpha_isc:
            raise ValueError("expected beta_voc < 0 < alpha_isc")

    @classmethod
    def from_file(cls, path) -> "PanelSpec":
        return kvfile.load_dataclass(cls, path)

    @property
    def c2(self) -> float:
        return (self.v_mpp / self.v_oc - 1.0) / math.log(1.0 - self.i_mpp / self.i_sc)

    @property
    def c1(self) -> float:
        return (1.0 - self.i_mpp / self.i_sc) * math.exp(-self.v_mpp / (self.c2 * self.v_oc))


@dataclass(frozen=True)
class EnvCondition:
    irradiance: float
    temperature: float

    def __post_init__(self):
        if not self.irradiance >= 0:
            raise ValueError(f"irradiance {self.irradiance} must be >= 0")
        if not -40 <= self.temperature <= 100:
            raise ValueError(f"temperature {self.temperature} outside [-40, 100] degC")


YL150P_17B = PanelSpec()


def thermal_voltage(temperature_c: float) -> float:
    return BOLTZMANN * (temperature_c + 273.15) / ELEMENTARY_CHARGE


def _log_irradiance_term(spec: PanelSpec, env: EnvCondition) -> float:
    return spec.n_cells * thermal_voltage(env.temperature) * math.log(env.irradiance / spec.g_stc)


def mpp_estimate(spec: PanelSpec, env: EnvCondition) -> tuple[float, float, float]:
    """Datasheet-corrected maximum power point ``(v, i, p)``.

    Current scales linearly with irradiance, voltage logarithmically; both
    carry the datasheet temperature coefficients. At zero irradiance the
    voltage sits on its floor of ``0.05 * v_mpp`` and current/power are 0.
    """
    dt = env.temperature - spec.t_stc
    floor = 0.05 * spec.v_mpp
    if env.irradiance == 0:
        return floor, 0.0, 0.0
    i = spec.i_mpp * (env.irradiance / spec.g_stc) * (1.0 + spec.alpha_isc * dt)
    v = spec.v_mpp * (1.0 + spec.beta_voc * dt) + _log_irradiance_term(spec, env)
    v = max(v, floor)
    return v, i, v * i


def corrected_sc_oc(spec: PanelSpec, env: EnvCondition) -> tuple[float, float]:
    """Short-circuit current and open-circuit voltage at ``env``."""
    dt = env.temperature - spec.t_stc
    isc = spec.i_sc * (env.irradiance / spec.g_stc) * (1.0 + spec.alpha_isc * dt)
    voc = spec.v_oc * (1.0 + spec.beta_voc * dt)
    if env.irradiance > 0:
        voc += _log_irradiance_term(spec, env)
    return isc, max(voc, 0.05 * spec.v_oc)


def iv_current(spec: PanelSpec, env: EnvCondition, v):
    """Panel current at terminal voltage ``v`` (scalar or array)."""
    isc, voc = corrected_sc_oc(spec, env)
    v = np.asarray(v, dtype=float)
    i = isc * (1.0 - spec.c1 * np.expm1(v / (spec.c2 * voc)))
    i = np.maximum(i, 0.0)
    return float(i) if i.ndim == 0 else i


def mpp_solve(spec: PanelSpec, env: EnvCondition, resolution: float = 1e-3) -> tuple[float, float, float]:
    """Brute-force MPP: scan the I-V curve at ``resolution`` volts."""
    if env.irradiance == 0:
        return 0.0, 0.0, 0.0
    _, voc = corrected_sc_oc(spec, env)
    volts = np.arange(int(voc / resolution) + 1) * resolution
    power = volts * iv_current(spec, env, volts)
    k = int(np.argmax(power))  # first maximum, i.e. lowest voltage on ties
    v = float(volts[k])
    return v, iv_current(spec, env, v), float(power[k])
