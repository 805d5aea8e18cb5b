"""Clear-sky irradiance estimate and pyranometer calibration.

Solar position follows the usual PVEducation chain: declination from the day
of year, equation of time, time correction for the site's offset from its
local standard meridian, then the hour angle.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    pass


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class SiteConfig:
    latitude: float
    longitude: float
    timezone: float
    day_of_year: int

    def __post_init__(self):
        if not -90 <= self.latitude <= 90:
            raise DomainError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180 <= self.longitude <= 180:
            raise DomainError(f"longitude {self.longitude} outside [-180, 180]")
        if not -12 <= self.timezone <= 14:
            raise DomainError(f"timezone {self.timezone} outside [-12, 14]")
        if not 1 <= self.day_of_year <= 366:
            raise DomainError(f"day_of_year {self.day_of_year} outside [1, 366]")


@dataclass(frozen=True)
class SolarConstants:
    sun_surface_irradiance: float = 62.3e6
    sun_radius: float = 695e6
    earth_sun_distance: float = 149.5e9
    atmospheric_loss_fraction: float = 0.30

    def __post_init__(self):
        for name in ("sun_surface_irradiance", "sun_radius", "earth_sun_distance"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not 0 <= self.atmospheric_loss_fraction <= 1:
            raise DomainError("atmospheric_loss_fraction outside [0, 1]")

    @property
    def direct_fraction(self) -> float:
        return 1.0 - self.atmospheric_loss_fraction


@dataclass(frozen=True)
class SensorCalibration:
    gain: float
    offset: float
    fit_residual_rms: float
    n_pairs: int = 0

    def irradiance(self, volts):
        return self.gain * np.asarray(volts) + self.offset


# Joinville (SC, Brazil) site used for the bench experiment.
REFERENCE_SITE = SiteConfig(latitude=-26.2348783, longitude=-48.886931, timezone=-3, day_of_year=91)


def extraterrestrial_irradiance(constants: SolarConstants) -> float:
    ratio = constants.sun_radius / constants.earth_sun_distance
    return constants.sun_surface_irradiance * ratio * ratio


def declination(day_of_year: int) -> float:
    """Solar declination in degrees (Cooper's formula)."""
    return 23.45 * math.sin(math.radians(360.0 / 365.0 * (284 + day_of_year)))


def equation_of_time(day_of_year: int) -> float:
    """Equation of time in minutes."""
    b = math.radians(360.0 / 365.0 * (day_of_year - 81))
    return 9.87 * math.sin(2 * b) - 7.53 * math.cos(b) - 1.5 * math.sin(b)


def time_correction(site: SiteConfig) -> float:
    """Minutes to add to clock time to obtain local solar time."""
    lstm = 15.0 * site.timezone
    return 4.0 * (site.longitude - lstm) + equation_of_time(site.day_of_year)


def solar_noon(site: SiteConfig) -> float:
    """Clock time (hours) at which local solar time reads 12:00."""
    return 12.0 - time_correction(site) / 60.0


def hour_angle(site: SiteConfig, local_clock_time: float) -> float:
    lst = local_clock_time + time_correction(site) / 60.0
    return 15.0 * (lst - 12.0)


def solar_elevation(site: SiteConfig, local_clock_time: float) -> float:
    """Sun elevation above the horizon in degrees at the given clock time."""
    if not 0 <= local_clock_time < 24:
        raise DomainError(f"local_clock_time {local_clock_time} outside [0, 24)")
    dec = math.radians(declination(site.day_of_year))
    lat = math.radians(site.latitude)
    hra = math.radians(hour_angle(site, local_clock_time))
    s = math.sin(dec) * math.sin(lat) + math.cos(dec) * math.cos(lat) * math.cos(hra)
    return math.degrees(math.asin(min(1.0, max(-1.0, s))))


def air_mass(zenith_angle: float, model: str = "secant") -> float:
    if model == "secant":
        if not 0 <= zenith_angle < 90:
            raise DomainError(f"zenith {zenith_angle} outside [0, 90) for secant air mass")
        return 1.0 / math.cos(math.radians(zenith_angle))
    if model == "kasten_young":
        if not 0 <= zenith_angle < 96:
            raise DomainError(f"zenith {zenith_angle} outside [0, 96) for kasten_young air mass")
        z = zenith_angle
        return 1.0 / (math.cos(math.radians(z)) + 0.50572 * (96.07995 - z) ** -1.6364)
    raise DomainError(f"unknown air mass model {model!r}")


def direct_irradiance(
    air_mass: float,
    h0: float,
    model: str = "flat_transmission",
    constants: SolarConstants | None = None,
) -> float:
    """Beam irradiance at ground level for a surface facing the sun.

    ``flat_transmission`` keeps the direct fraction of ``h0`` regardless of
    path length; ``empirical`` is the 1353 * 0.7 ** (AM ** 0.678) fit, which
    ignores ``h0``.
    """
    if model == "flat_transmission":
        constants = constants or SolarConstants()
        return h0 * constants.direct_fraction
    if model == "empirical":
        if air_mass < 0:
            raise DomainError("air mass must be non-negative")
        return 1353.0 * 0.7 ** (air_mass**0.678)
    raise DomainError(f"unknown direct irradiance model {model!r}")


def clear_sky_profile(
    site: SiteConfig,
    constants: SolarConstants,
    start: float,
    end: float,
    step: float,
    *,
    direct_model: str = "flat_transmission",
    air_mass_model: str = "secant",
) -> np.ndarray:
    """Horizontal clear-sky irradiance sampled from ``start`` to ``end`` inclusive.

    Returns an ``(n, 2)`` array of (clock hours, W/m^2).
    """
    if not start < end:
        raise DomainError("start must precede end")
    if not step > 0:
        raise DomainError("step must be positive")
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    times = start + step * np.arange(n)
    h0 = extraterrestrial_irradiance(constants)
    out = np.zeros((n, 2))
    out[:, 0] = times
    for k, t in enumerate(times):
        elev = solar_elevation(site, float(t) % 24.0)
        if elev <= 0:
            continue
        am = air_mass(90.0 - elev, air_mass_model) if direct_model == "empirical" else 1.0
        beam = direct_irradiance(am, h0, direct_model, constants)
        out[k, 1] = beam * math.sin(math.radians(elev))
    return out


def calibrate_sensor(samples, reference, window) -> SensorCalibration:
    """Least-squares fit ``irradiance = gain * volts + offset``.

    ``samples`` is (time, volts), ``reference`` is (time, irradiance). Each
    sample inside ``window`` is paired with the nearest reference point when
    that point lies within half the reference step.
    """
    samples = np.asarray(samples, dtype=float).reshape(-1, 2)
    reference = np.asarray(reference, dtype=float).reshape(-1, 2)
    lo, hi = window
    if len(reference) == 0:
        raise CalibrationError("empty reference series")
    ref_t = reference[:, 0]
    half = 0.5 * float(np.median(np.diff(ref_t))) if len(ref_t) > 1 else math.inf

    inside = samples[(samples[:, 0] >= lo) & (samples[:, 0] <= hi)]
    if len(inside) and len(ref_t):
        pos = np.clip(np.searchsorted(ref_t, inside[:, 0]), 1, max(len(ref_t) - 1, 1))
        left = np.clip(pos - 1, 0, len(ref_t) - 1)
        right = np.clip(pos, 0, len(ref_t) - 1)
        nearest = np.where(
            np.abs(ref_t[left] - inside[:, 0]) <= np.abs(ref_t[right] - inside[:, 0]), left, right
        )
        ok = np.abs(ref_t[nearest] - inside[:, 0]) <= half + 1e-12
        volts = inside[ok, 1]
        irr = reference[nearest[ok], 1]
    else:
        volts = irr = np.empty(0)

    if len(volts) < 2:
        raise CalibrationError(f"need at least 2 aligned pairs in window, got {len(volts)}")
    if not np.any(irr != 0):
        raise CalibrationError("reference irradiance is zero throughout the window")
    if np.ptp(volts) == 0:
        raise CalibrationError("sensor voltage has zero variance; fit is degenerate")

    design = np.column_stack([volts, np.ones_like(volts)])
    (gain, offset), *_ = np.linalg.lstsq(design, irr, rcond=None)
    resid = irr - (gain * volts + offset)
    return SensorCalibration(
        gain=float(gain),
        offset=float(offset),
        fit_residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_pairs=int(len(volts)),
    )


def read_sensor_csv(path) -> np.ndarray:
    return _read_two_columns(path, ("time_h", "volts"))


def read_profile_csv(path) -> np.ndarray:
    return _read_two_columns(path, ("time_h", "irradiance_wm2"))


def _read_two_columns(path, header) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(c.strip() for c in first[:2]) != header:
            raise ValueError(f"{path}: expected header {','.join(header)}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    return np.array(rows, dtype=float).reshape(-1, 2)


def profile_to_csv(profile) -> str:
    buf = io.StringIO()
    buf.write("time_h,irradiance_wm2\n")
    for t, g in np.asarray(profile):
        buf.write(f"{t:.9g},{g:.9g}\n")
    return buf.getvalue()
