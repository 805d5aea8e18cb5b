"""Irradiance/temperature/load grid to duty-cycle labels, plus splitting,
normalization, summaries and CSV persistence."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kvfile
from .cuk_converter import duty_for_mpp
from .pv_panel import EnvCondition, PanelSpec, mpp_estimate

COLUMNS = ("irradiance_wm2", "temperature_c", "load_ohm", "duty")
FEATURES = COLUMNS[:3]


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetRecord:
    irradiance: float
    temperature: float
    load_resistance: float
    duty_cycle: float


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    """``lo, lo + step, ...`` up to ``hi`` (inclusive when it lands on the grid)."""
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


@dataclass(frozen=True)
class GridSpec:
    irradiance_min: float = 100.0
    irradiance_max: float = 1000.0
    irradiance_step: float = 10.0
    temperature_min: float = 5.11
    temperature_max: float = 60.93
    temperature_step: float = 0.5
    loads: tuple[float, ...] = tuple(float(r) for r in range(1, 20, 2))

    def __post_init__(self):
        if not (self.irradiance_step > 0 and self.temperature_step > 0):
            raise DatasetError("grid steps must be positive")
        if self.irradiance_max < self.irradiance_min or self.temperature_max < self.temperature_min:
            raise DatasetError("grid ranges must be non-decreasing")
        if not self.loads or min(self.loads) <= 0:
            raise DatasetError("loads must be a non-empty list of positive resistances")

    @classmethod
    def from_mapping(cls, values) -> "GridSpec":
        values = dict(values)
        if "loads" in values and isinstance(values["loads"], str):
            values["loads"] = tuple(float(x) for x in values["loads"].split(","))
        return kvfile.load_dataclass(cls, values)

    def irradiances(self) -> np.ndarray:
        return _axis(self.irradiance_min, self.irradiance_max, self.irradiance_step)

    def temperatures(self) -> np.ndarray:
        return _axis(self.temperature_min, self.temperature_max, self.temperature_step)

    def __len__(self) -> int:
        return len(self.irradiances()) * len(self.temperatures()) * len(self.loads)


def generate(spec: PanelSpec, grid: GridSpec) -> np.ndarray:
    """All grid records as an ``(n, 4)`` array, irradiance outermost, load innermost."""
    rows = []
    loads = grid.loads
    for g in grid.irradiances():
        for t in grid.temperatures():
            v, _, p = mpp_estimate(spec, EnvCondition(float(g), float(t)))
            for r in loads:
                rows.append((g, t, r, duty_for_mpp(v, p, r)))
    return np.array(rows, dtype=float).reshape(-1, 4)


def as_records(data) -> list[DatasetRecord]:
    return [DatasetRecord(*map(float, row)) for row in np.asarray(data)]


def split(data, train_fraction: float = 0.70, seed: int = 0):
    """Seeded shuffle then prefix split; returns ``(train_idx, validation_idx)``."""
    n = len(data)
    if n < 2:
        raise DatasetError(f"need at least 2 records to split, got {n}")
    if not 0 < train_fraction < 1:
        raise DatasetError("train_fraction must lie in (0, 1)")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(n * train_fraction))
    return np.sort(order[:n_train]), np.sort(order[n_train:])


@dataclass
class NormalizationParams:
    """Per-column min/max mapping each column linearly onto [-1, 1]."""

    minimum: np.ndarray
    maximum: np.ndarray
    names: tuple[str, ...] = COLUMNS

    def __post_init__(self):
        self.minimum = np.asarray(self.minimum, dtype=float)
        self.maximum = np.asarray(self.maximum, dtype=float)
        flat = np.flatnonzero(~(self.maximum > self.minimum))
        if flat.size:
            raise DatasetError(f"degenerate feature {self.names[flat[0]]!r}: max == min")

    @classmethod
    def fit(cls, data) -> "NormalizationParams":
        data = np.asarray(data, dtype=float)
        return cls(data.min(axis=0), data.max(axis=0))

    def normalize(self, data, columns=slice(None)):
        lo, hi = self.minimum[columns], self.maximum[columns]
        return 2.0 * (np.asarray(data, dtype=float) - lo) / (hi - lo) - 1.0

    def denormalize(self, values, columns=slice(None)):
        lo, hi = self.minimum[columns], self.maximum[columns]
        return (np.asarray(values, dtype=float) + 1.0) * 0.5 * (hi - lo) + lo

    def normalize_inputs(self, X):
        return self.normalize(X, slice(0, 3))

    def normalize_target(self, d):
        return self.normalize(d, 3)

    def denormalize_target(self, y):
        return self.denormalize(y, 3)

    def to_dict(self) -> dict[str, float]:
        out = {}
        for name, lo, hi in zip(self.names, self.minimum, self.maximum):
            out[f"{name}.min"] = float(lo)
            out[f"{name}.max"] = float(hi)
        return out

    @classmethod
    def from_dict(cls, values) -> "NormalizationParams":
        names = tuple(dict.fromkeys(k.rsplit(".", 1)[0] for k in values))
        lo = [float(values[f"{n}.min"]) for n in names]
        hi = [float(values[f"{n}.max"]) for n in names]
        return cls(np.array(lo), np.array(hi), names)

    def dumps(self) -> str:
        return kvfile.dump(self.to_dict(), header="normalization: x_norm = 2 (x - min) / (max - min) - 1")

    @classmethod
    def loads(cls, text: str) -> "NormalizationParams":
        return cls.from_dict(kvfile.parse(text))


def prepare(data, norm: NormalizationParams):
    """Normalized network inputs ``X`` and targets ``D`` (column vector)."""
    data = np.asarray(data, dtype=float)
    return norm.normalize_inputs(data[:, :3]), norm.normalize_target(data[:, 3]).reshape(-1, 1)


@dataclass
class Histogram:
    name: str
    edges: np.ndarray
    counts: np.ndarray

    @property
    def modal_bin(self) -> tuple[float, float]:
        k = int(np.argmax(self.counts))
        return float(self.edges[k]), float(self.edges[k + 1])


@dataclass
class Summary:
    histograms: dict[str, Histogram]
    by_load: dict[float, np.ndarray] = field(default_factory=dict)


def summarize(data, bins: int = 50) -> Summary:
    """Fixed-width histograms of temperature, irradiance and duty, and
    (irradiance, temperature, duty) triples grouped by load."""
    data = np.asarray(data, dtype=float).reshape(-1, 4)
    if len(data) == 0:
        raise DatasetError("cannot summarize an empty dataset")
    hists = {}
    for name, col in (("temperature", 1), ("irradiance", 0), ("duty", 3)):
        lo, hi = data[:, col].min(), data[:, col].max()
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        counts, edges = np.histogram(data[:, col], bins=bins, range=(lo, hi))
        hists[name] = Histogram(name, edges, counts)
    by_load = {float(r): data[data[:, 2] == r][:, [0, 1, 3]] for r in np.unique(data[:, 2])}
    return Summary(hists, by_load)


def duty_spread(data, irradiance: float, rel_band: float = 0.05) -> float:
    """max - min of duty over records with irradiance within ``rel_band`` of the target."""
    data = np.asarray(data, dtype=float)
    sel = data[np.abs(data[:, 0] - irradiance) <= rel_band * irradiance + 1e-9, 3]
    if sel.size == 0:
        raise DatasetError(f"no records near {irradiance} W/m^2")
    return float(np.ptp(sel))


def to_csv(data) -> str:
    buf = io.StringIO()
    buf.write(",".join(COLUMNS) + "\n")
    for row in np.asarray(data):
        buf.write(",".join(f"{x:.9g}" for x in row) + "\n")
    return buf.getvalue()


def read_csv(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != ",".join(COLUMNS):
            raise DatasetError(f"{path}: unexpected header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data.reshape(-1, 4)


def histogram_csv(hist: Histogram) -> str:
    lines = ["bin_lo,bin_hi,count"]
    for lo, hi, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
        lines.append(f"{lo:.9g},{hi:.9g},{int(c)}")
    return "\n".join(lines) + "\n"
