"""P&O and ANN duty-cycle controllers and the closed-loop day simulation."""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import kvfile
from .cuk_converter import D_MAX, D_MIN, CukDesign, operating_point
from .pv_panel import EnvCondition, PanelSpec, mpp_solve


class AlignmentError(ValueError):
    pass


class EnvelopeWarning(UserWarning):
    pass


def clamp_duty(d: float) -> float:
    return min(max(d, D_MIN), D_MAX)


@dataclass(frozen=True)
class PoState:
    duty: float = 0.5
    step: float = 0.005
    last_power: float = 0.0
    last_direction: int = 1

    def __post_init__(self):
        if not D_MIN <= self.duty <= D_MAX:
            raise ValueError(f"duty {self.duty} outside [{D_MIN}, {D_MAX}]")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.last_direction not in (-1, 1):
            raise ValueError("last_direction must be +1 or -1")


def po_step(state: PoState, measured_power: float) -> PoState:
    """Fixed-step hill climb: keep direction unless power dropped.

    A step that runs into the duty limits is clamped and the stored
    direction flips inward, so the controller cannot park on a rail.
    """
    direction = state.last_direction if measured_power >= state.last_power else -state.last_direction
    target = state.duty + direction * state.step
    duty = clamp_duty(target)
    if duty != target:
        direction = -direction
    return replace(state, duty=duty, last_power=measured_power, last_direction=direction)


@dataclass
class AnnController:
    """Normalize (G, T, R), run the network, map back to a clamped duty."""

    network: object
    norm: object
    envelope_margin: float = 1.5

    def __call__(self, irradiance: float, temperature: float, r_load: float) -> float:
        duty, _ = self.predict(irradiance, temperature, r_load)
        return duty

    def predict(self, irradiance, temperature, r_load) -> tuple[float, bool]:
        """Duty and an out-of-envelope flag (also raised as a warning)."""
        x = np.array([irradiance, temperature, r_load], dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("controller inputs must be finite")
        xn = self.norm.normalize_inputs(x)
        outside = bool(np.any(np.abs(xn) > self.envelope_margin))
        if outside:
            warnings.warn(
                f"inputs (G={irradiance}, T={temperature}, R={r_load}) outside "
                f"{self.envelope_margin}x the training envelope",
                EnvelopeWarning,
                stacklevel=2,
            )
        y = self.network.predict(xn[None, :])[0, 0]
        return clamp_duty(float(self.norm.denormalize_target(y))), outside


def ann_duty(controller: AnnController, irradiance, temperature, r_load) -> float:
    return controller(irradiance, temperature, r_load)


@dataclass
class DayProfile:
    time_h: np.ndarray
    irradiance: np.ndarray
    temperature: np.ndarray
    load: np.ndarray

    def __post_init__(self):
        self.time_h = np.asarray(self.time_h, dtype=float)
        n = len(self.time_h)
        self.irradiance = np.asarray(self.irradiance, dtype=float)
        self.temperature = np.asarray(self.temperature, dtype=float)
        self.load = np.broadcast_to(np.asarray(self.load, dtype=float), (n,)).copy()
        if n < 1:
            raise ValueError("profile needs at least one sample")
        if np.any(np.diff(self.time_h) <= 0):
            raise ValueError("profile times must be strictly increasing")
        if not (len(self.irradiance) == len(self.temperature) == n):
            raise ValueError("profile columns differ in length")
        if np.any(self.irradiance < 0) or np.any(np.abs(self.temperature) > 100) or np.any(self.load <= 0):
            raise ValueError("profile values outside panel-model sanity bands")

    @classmethod
    def from_clear_sky(cls, profile, r_load: float = 10.0, t_ambient: float = 25.0, noct: float = 45.0):
        """Attach a cell temperature from the NOCT rule T = Ta + G (NOCT - 20) / 800."""
        profile = np.asarray(profile, dtype=float)
        g = profile[:, 1]
        return cls(profile[:, 0], g, t_ambient + g * (noct - 20.0) / 800.0, r_load)

    def sample(self, t_h: float):
        """Zero-order hold lookup at clock time ``t_h``."""
        k = max(int(np.searchsorted(self.time_h, t_h, side="right")) - 1, 0)
        return float(self.irradiance[k]), float(self.temperature[k]), float(self.load[k])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time_h,irradiance_wm2,temperature_c,load_ohm\n")
        for row in zip(self.time_h, self.irradiance, self.temperature, self.load):
            buf.write(",".join(f"{x:.9g}" for x in row) + "\n")
        return buf.getvalue()

    @classmethod
    def read_csv(cls, path, r_load: float = 10.0) -> "DayProfile":
        with open(path) as fh:
            header = [h.strip() for h in fh.readline().strip().split(",")]
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if header[:3] != ["time_h", "irradiance_wm2", "temperature_c"]:
            raise ValueError(f"{path}: unexpected header {header}")
        load = data[:, 3] if len(header) > 3 and header[3] == "load_ohm" else r_load
        return cls(data[:, 0], data[:, 1], data[:, 2], load)


@dataclass
class RunReport:
    controller: str
    time_h: np.ndarray
    duty: np.ndarray
    v: np.ndarray
    i: np.ndarray
    p: np.ndarray
    p_mpp: np.ndarray
    metrics: dict = field(default_factory=dict)

    SERIES = ("duty", "v", "i", "p")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time_h,duty,v,i,p,p_mpp\n")
        for row in zip(self.time_h, self.duty, self.v, self.i, self.p, self.p_mpp):
            buf.write(",".join(f"{x:.9g}" for x in row) + "\n")
        return buf.getvalue()

    def metrics_text(self) -> str:
        return kvfile.dump({"controller": self.controller, **self.metrics})


def _metrics(duty, p, p_mpp, dt_s):
    avail = float(np.sum(p_mpp) * dt_s)
    return {
        "tracking_efficiency": float(np.sum(p) * dt_s / avail) if avail > 0 else 1.0,
        "duty_stddev": float(np.std(duty)),
        "power_stddev": float(np.std(p)),
        "energy_wh": float(np.sum(p) * dt_s / 3600.0),
        "available_energy_wh": avail / 3600.0,
    }


def simulate_day(
    profile: DayProfile,
    spec: PanelSpec,
    design: CukDesign,
    controller: str,
    control_period: float = 0.1,
    *,
    ann: AnnController | None = None,
    po_step_size: float = 0.005,
    po_initial_duty: float = 0.5,
    end_h: float | None = None,
) -> RunReport:
    """Quasi-static closed loop from the first profile time to ``end_h``.

    Every tick the plant is evaluated at the commanded duty. The P&O
    controller then sees that power and picks the next duty; the ANN
    controller maps the held (G, T, R) sample straight to a duty.
    ``design`` is accepted for interface parity; converter dynamics settle
    in milliseconds, far inside one control period, so the plant is static.
    """
    if controller not in ("po", "ann"):
        raise ValueError(f"unknown controller {controller!r}")
    if controller == "ann" and ann is None:
        raise ValueError("ann controller requires a loaded network")
    start = float(profile.time_h[0])
    stop = float(profile.time_h[-1] if end_h is None else end_h)
    dt_h = control_period / 3600.0
    n = max(int(math.floor((stop - start) / dt_h + 1e-9)), 1)
    times = start + dt_h * np.arange(n)

    duty = np.empty(n)
    v = np.empty(n)
    i = np.empty(n)
    p = np.empty(n)
    p_mpp = np.empty(n)
    mpp_cache: dict = {}
    ann_cache: dict = {}
    po = PoState(duty=po_initial_duty, step=po_step_size)
    for k, t in enumerate(times):
        g, temp, r = profile.sample(t)
        env = EnvCondition(g, temp)
        if controller == "ann":
            key = (g, temp, r)
            if key not in ann_cache:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", EnvelopeWarning)
                    ann_cache[key] = ann(g, temp, r)
            d = ann_cache[key]
        else:
            d = po.duty
        vk, ik, pk = operating_point(spec, env, d, r)
        if controller == "po":
            po = po_step(po, pk)
        if (g, temp) not in mpp_cache:
            mpp_cache[(g, temp)] = mpp_solve(spec, env)[2]
        duty[k], v[k], i[k], p[k], p_mpp[k] = d, vk, ik, pk, mpp_cache[(g, temp)]
    report = RunReport(controller, times, duty, v, i, p, p_mpp)
    report.metrics = _metrics(duty, p, p_mpp, control_period)
    return report


@dataclass
class Comparison:
    name_a: str
    name_b: str
    metrics_a: dict
    metrics_b: dict
    winners: dict
    differences: dict

    def to_text(self) -> str:
        lines = ["format = pvmppt-compare-1", f"a = {self.name_a}", f"b = {self.name_b}"]
        for key in self.winners:
            lines.append(f"{key}.a = {self.metrics_a[key]!r}")
            lines.append(f"{key}.b = {self.metrics_b[key]!r}")
            side = self.winners[key]
            name = {"a": self.name_a, "b": self.name_b}.get(side, "tie")
            lines.append(f"{key}.winner = {side} ({name})")
        return "\n".join(lines) + "\n"

    def differences_csv(self) -> str:
        names = list(self.differences)
        rows = zip(*(self.differences[n] for n in names))
        body = "\n".join(",".join(f"{x:.9g}" for x in row) for row in rows)
        return ",".join(f"d_{n}" for n in names) + "\n" + body + ("\n" if body else "")


# metric -> True when larger is better
_METRIC_SENSE = {"tracking_efficiency": True, "duty_stddev": False, "power_stddev": False}


def compare(a: RunReport, b: RunReport) -> Comparison:
    """Side-by-side metrics and a-minus-b difference series per quantity."""
    if len(a.time_h) != len(b.time_h) or not np.allclose(a.time_h, b.time_h, rtol=0, atol=1e-12):
        raise AlignmentError("reports are not time-aligned")
    winners = {}
    for key, larger_better in _METRIC_SENSE.items():
        x, y = a.metrics[key], b.metrics[key]
        if x == y:
            winners[key] = "tie"
        else:
            winners[key] = "a" if (x > y) == larger_better else "b"
    diffs = {name: getattr(a, name) - getattr(b, name) for name in RunReport.SERIES}
    return Comparison(a.controller, b.controller, dict(a.metrics), dict(b.metrics), winners, diffs)
