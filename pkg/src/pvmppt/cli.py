"""``pvmppt`` command line: one subcommand per pipeline stage.

Each command takes ``key = value`` configuration (``--config``) plus flag
overrides, writes its outputs under ``--out`` and records a manifest there.
A manifest passed back through ``--config`` reproduces the run.

Exit codes: 0 success, 1 runtime or numeric failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, kvfile
from . import cuk_converter as ck
from . import dataset as ds
from . import mppt
from . import pv_panel as pv
from . import solar_model as sm
from .ann import export as wexport
from .ann.network import DivergenceError, MlpNetwork
from .ann.training import Candidate, SearchError, TrainConfig, architecture_search, train, validate

log = logging.getLogger("pvmppt")

MANIFEST_FORMAT = "pvmppt-manifest-1"
MANIFEST_NAME = "manifest.txt"


class UsageError(Exception):
    pass


SITE_DEFAULTS = {
    "latitude": sm.REFERENCE_SITE.latitude,
    "longitude": sm.REFERENCE_SITE.longitude,
    "timezone": sm.REFERENCE_SITE.timezone,
    "day_of_year": sm.REFERENCE_SITE.day_of_year,
    "sun_surface_irradiance": 62.3e6,
    "sun_radius": 695e6,
    "earth_sun_distance": 149.5e9,
    "atmospheric_loss_fraction": 0.30,
    "direct_model": "flat_transmission",
    "air_mass_model": "secant",
}

DEFAULTS = {
    "irradiance": {**SITE_DEFAULTS, "start": 6.0, "end": 16.0, "step": 5.0 / 60.0},
    "calibrate": {
        **SITE_DEFAULTS,
        "sensor": "",
        "window_start": 6.0,
        "window_end": 16.0,
        "reference_step": 1.0 / 60.0,
    },
    "dataset": {
        "panel": "",
        "irradiance_min": 100.0,
        "irradiance_max": 1000.0,
        "irradiance_step": 10.0,
        "temperature_min": 5.11,
        "temperature_max": 60.93,
        "temperature_step": 0.5,
        "loads": "1, 3, 5, 7, 9, 11, 13, 15, 17, 19",
        "train_fraction": 0.7,
        "seed": 0,
    },
    "train": {
        "dataset": "",
        "candidates": "3-6-3-1:tanh/tanh",
        "learning_rate": 0.01,
        "epochs": 14,
        "seed": 0,
        "shuffle_each_epoch": 1,
        "rank_by": "mse",
    },
    "eval": {"weights": "", "dataset": "", "split": "validation"},
    "simulate": {
        **SITE_DEFAULTS,
        "profile": "",
        "start": 6.0,
        "end": 16.0,
        "step": 5.0 / 60.0,
        "t_ambient": 25.0,
        "noct": 45.0,
        "load": 10.0,
        "panel": "",
        "converter": "",
        "controllers": "po, ann",
        "weights": "",
        "control_period": 0.1,
        "po_step": 0.005,
        "po_initial_duty": 0.5,
        "seed": 0,
    },
}

# config keys naming input files (digested into the manifest)
INPUT_KEYS = {"sensor", "panel", "dataset", "weights", "profile", "converter"}


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    if path.is_dir():
        for child in sorted(path.iterdir()):
            if child.is_file() and child.name != MANIFEST_NAME:
                h.update(child.name.encode())
                h.update(child.read_bytes())
    else:
        h.update(path.read_bytes())
    return h.hexdigest()


def resolve_config(command: str, args) -> dict:
    """Defaults, then config file (or manifest), then flag overrides."""
    defaults = DEFAULTS[command]
    cfg = dict(defaults)
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        values = kvfile.parse(path.read_text())
        if values.get("format") == MANIFEST_FORMAT:
            if values.get("command") != command:
                raise UsageError(f"manifest was written by {values.get('command')!r}, not {command!r}")
            values = {k[len("config."):]: v for k, v in values.items() if k.startswith("config.")}
        for key, value in values.items():
            if key not in defaults:
                raise kvfile.ConfigError(f"unknown config key {key!r} for {command}")
            cfg[key] = value
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in defaults:
            raise kvfile.ConfigError(f"unknown config key {key!r} for {command}")
        cfg[key] = value
    if args.seed is not None and "seed" in defaults:
        cfg["seed"] = args.seed
    for key, default in defaults.items():
        cfg[key] = _typed(key, cfg[key], default)
    return cfg


def _typed(key, value, default):
    if isinstance(value, str) and not isinstance(default, str):
        try:
            return type(default)(float(value)) if isinstance(default, int) else type(default)(value)
        except ValueError as exc:
            raise kvfile.ConfigError(f"bad value {value!r} for key {key!r}") from exc
    return value


def write_manifest(out: Path, command: str, cfg: dict, outputs: list[str]):
    lines = [f"format = {MANIFEST_FORMAT}", f"command = {command}", f"version = {__version__}"]
    for key, value in cfg.items():
        lines.append(f"config.{key} = {kvfile.format_value(value)}")
    for key in sorted(INPUT_KEYS & cfg.keys()):
        if cfg[key]:
            lines.append(f"input.{key}.sha256 = {sha256(Path(cfg[key]))}")
    if "seed" in cfg:
        lines.append(f"seed = {cfg['seed']}")
    for name in outputs:
        lines.append(f"output = {name}")
    (out / MANIFEST_NAME).write_text("\n".join(lines) + "\n")


def _write(out: Path, name: str, text: str, written: list[str]):
    (out / name).write_text(text)
    written.append(name)


def _require_file(cfg, key) -> Path:
    if not cfg[key]:
        raise UsageError(f"missing required input {key!r}")
    path = Path(cfg[key])
    if not path.exists():
        raise UsageError(f"{key} not found: {path}")
    return path


def _site(cfg):
    site = sm.SiteConfig(cfg["latitude"], cfg["longitude"], cfg["timezone"], int(cfg["day_of_year"]))
    consts = sm.SolarConstants(
        cfg["sun_surface_irradiance"], cfg["sun_radius"], cfg["earth_sun_distance"],
        cfg["atmospheric_loss_fraction"],
    )
    return site, consts


def _panel(cfg):
    return pv.PanelSpec.from_file(_require_file(cfg, "panel")) if cfg["panel"] else pv.YL150P_17B


def cmd_irradiance(cfg, out, written):
    site, consts = _site(cfg)
    prof = sm.clear_sky_profile(
        site, consts, cfg["start"], cfg["end"], cfg["step"],
        direct_model=cfg["direct_model"], air_mass_model=cfg["air_mass_model"],
    )
    _write(out, "profile.csv", sm.profile_to_csv(prof), written)
    log.info("peak %.1f W/m^2 at %.3f h", prof[:, 1].max(), prof[np.argmax(prof[:, 1]), 0])


def cmd_calibrate(cfg, out, written):
    samples = sm.read_sensor_csv(_require_file(cfg, "sensor"))
    site, consts = _site(cfg)
    lo, hi = cfg["window_start"], cfg["window_end"]
    ref = sm.clear_sky_profile(
        site, consts, lo, hi, cfg["reference_step"],
        direct_model=cfg["direct_model"], air_mass_model=cfg["air_mass_model"],
    )
    cal = sm.calibrate_sensor(samples, ref, (lo, hi))
    text = kvfile.dump(
        {"gain": cal.gain, "offset": cal.offset, "fit_residual_rms": cal.fit_residual_rms, "n_pairs": cal.n_pairs},
        header="irradiance_wm2 = gain * volts + offset",
    )
    _write(out, "calibration.txt", text, written)
    log.info("gain %.6g W/m^2/V, offset %.6g W/m^2, rms %.4g", cal.gain, cal.offset, cal.fit_residual_rms)


def _load_dataset_dir(path: Path):
    if path.is_dir():
        data = ds.read_csv(path / "dataset.csv")
        tr = np.loadtxt(path / "split_train.idx", dtype=np.int64, ndmin=1)
        va = np.loadtxt(path / "split_validation.idx", dtype=np.int64, ndmin=1)
    else:
        data = ds.read_csv(path)
        tr, va = ds.split(data)
    return data, tr, va


def cmd_dataset(cfg, out, written):
    grid = ds.GridSpec.from_mapping({k: cfg[k] for k in DEFAULTS["dataset"] if k not in ("panel", "train_fraction", "seed")})
    data = ds.generate(_panel(cfg), grid)
    csv_text = ds.to_csv(data)
    _write(out, "dataset.csv", csv_text, written)
    data = ds.read_csv(out / "dataset.csv")  # everything downstream sees the persisted values
    tr, va = ds.split(data, cfg["train_fraction"], int(cfg["seed"]))
    _write(out, "split_train.idx", "\n".join(map(str, tr)) + "\n", written)
    _write(out, "split_validation.idx", "\n".join(map(str, va)) + "\n", written)
    _write(out, "normalization.txt", ds.NormalizationParams.fit(data[tr]).dumps(), written)
    summary = ds.summarize(data)
    for name, hist in summary.histograms.items():
        _write(out, f"hist_{name}.csv", ds.histogram_csv(hist), written)
    lines = ["load_ohm,irradiance_wm2,temperature_c,duty"]
    for load, triples in summary.by_load.items():
        lines += [f"{load:.9g},{g:.9g},{t:.9g},{d:.9g}" for g, t, d in triples]
    _write(out, "correlation.csv", "\n".join(lines) + "\n", written)
    lo, hi = summary.histograms["duty"].modal_bin
    log.info("%d records, modal duty bin [%.4f, %.4f]", len(data), lo, hi)


def parse_candidates(text: str) -> list[Candidate]:
    """``3-6-3-1:tanh/tanh; 3-6-3-1:linear/linear`` (output defaults to tanh)."""
    cands = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        sizes, _, acts = item.partition(":")
        hidden, _, output = (acts or "tanh").partition("/")
        try:
            layer_sizes = tuple(int(s) for s in sizes.split("-"))
        except ValueError as exc:
            raise kvfile.ConfigError(f"bad candidate {item!r}") from exc
        cands.append(Candidate(layer_sizes, hidden.strip(), (output or "tanh").strip()))
    if not cands:
        raise kvfile.ConfigError("no candidates given")
    return cands


def cmd_train(cfg, out, written):
    data, tr, va = _load_dataset_dir(_require_file(cfg, "dataset"))
    norm = ds.NormalizationParams.fit(data[tr])
    train_set = ds.prepare(data[tr], norm)
    val_set = ds.prepare(data[va], norm)
    config = TrainConfig(cfg["learning_rate"], int(cfg["epochs"]), int(cfg["seed"]), bool(cfg["shuffle_each_epoch"]))
    try:
        cands = parse_candidates(cfg["candidates"])
        for c in cands:
            MlpNetwork.zeros(c.layer_sizes, c.activation, c.output_activation)
    except ValueError as exc:
        raise kvfile.ConfigError(str(exc)) from exc
    result = architecture_search(train_set, val_set, cands, config, rank_by=cfg["rank_by"])

    rows = ["rank,candidate,n_params,val_mse,val_mse_percent,within_0.002,fraction_within,learning_rate,epochs,seed"]
    for rank, r in enumerate(result.ranked, 1):
        rep = r.report
        rows.append(
            f"{rank},{r.candidate.label},{r.n_params},{rep.mse:.9g},{rep.mse_percent:.9g},"
            f"{rep.n_within},{rep.fraction_within:.9g},{config.learning_rate!r},{config.epochs},{config.seed}"
        )
    for r in result.failed:
        rows.append(f",{r.candidate.label},{r.n_params},nan,nan,,,{config.learning_rate!r},{config.epochs},{config.seed}")
    _write(out, "ranking.csv", "\n".join(rows) + "\n", written)

    hist = ["candidate,epoch,train_mse"]
    for r in sorted(result.ranked, key=lambda r: r.index):
        hist += [f"{r.candidate.label},{e + 1},{m:.9g}" for e, m in enumerate(r.history)]
    _write(out, "history.csv", "\n".join(hist) + "\n", written)

    best = result.best
    _write(out, "best_weights.mlpw", wexport.to_portable_text(best.network, norm), written)
    _write(out, "best_weights.c", wexport.to_c_source(best.network, norm), written)
    log.info("best %s: validation mse %.5f%%", best.candidate.label, best.report.mse_percent)


def cmd_eval(cfg, out, written):
    wpath = _require_file(cfg, "weights")
    net, norm = wexport.from_portable_text(wpath.read_text())
    if norm is None:
        raise UsageError("weight file carries no normalization section")
    data, tr, va = _load_dataset_dir(_require_file(cfg, "dataset"))
    idx = {"validation": va, "train": tr, "all": np.arange(len(data))}.get(cfg["split"])
    if idx is None:
        raise kvfile.ConfigError(f"unknown split {cfg['split']!r}")
    X, D = ds.prepare(data[idx], norm)
    rep = validate(net, X, D)
    report = {
        "samples": len(idx),
        "mse": rep.mse,
        "mse_percent": rep.mse_percent,
        "within_0.002": rep.n_within,
        "fraction_within_0.002": rep.fraction_within,
        "scale": "normalized [-1, 1]; mse = mean(0.5 e^2)",
    }
    _write(out, "report.txt", kvfile.dump(report), written)
    diag = ["predicted,desired"] + [f"{p:.9g},{d:.9g}" for p, d in zip(rep.predicted, rep.desired)]
    _write(out, "diagonal.csv", "\n".join(diag) + "\n", written)
    hist = ["abs_err_lo,abs_err_hi,count"] + [
        f"{lo:.9g},{hi:.9g},{int(c)}" for lo, hi, c in zip(rep.hist_edges[:-1], rep.hist_edges[1:], rep.hist_counts)
    ]
    _write(out, "error_hist.csv", "\n".join(hist) + "\n", written)
    log.info("mse %.5f%%, %.1f%% within 0.002", rep.mse_percent, 100 * rep.fraction_within)


def cmd_simulate(cfg, out, written):
    controllers = [c.strip() for c in cfg["controllers"].split(",") if c.strip()]
    if not controllers or any(c not in ("po", "ann") for c in controllers):
        raise kvfile.ConfigError(f"controllers must be drawn from po, ann; got {cfg['controllers']!r}")
    ann = None
    if "ann" in controllers:
        if not cfg["weights"]:
            raise UsageError("ann controller requested without a weight file")
        net, norm = wexport.from_portable_text(_require_file(cfg, "weights").read_text())
        if norm is None:
            raise UsageError("weight file carries no normalization section")
        ann = mppt.AnnController(net, norm)
    if cfg["profile"]:
        profile = mppt.DayProfile.read_csv(_require_file(cfg, "profile"), r_load=cfg["load"])
    else:
        site, consts = _site(cfg)
        prof = sm.clear_sky_profile(
            site, consts, cfg["start"], cfg["end"], cfg["step"],
            direct_model=cfg["direct_model"], air_mass_model=cfg["air_mass_model"],
        )
        profile = mppt.DayProfile.from_clear_sky(prof, cfg["load"], cfg["t_ambient"], cfg["noct"])
        _write(out, "profile.csv", profile.to_csv(), written)
    spec = _panel(cfg)
    design = ck.CukDesign.from_file(_require_file(cfg, "converter")) if cfg["converter"] else ck.BENCH_DESIGN
    reports = {}
    for name in controllers:
        rep = mppt.simulate_day(
            profile, spec, design, name, cfg["control_period"], ann=ann,
            po_step_size=cfg["po_step"], po_initial_duty=cfg["po_initial_duty"],
        )
        reports[name] = rep
        _write(out, f"run_{name}.csv", rep.to_csv(), written)
        _write(out, f"metrics_{name}.txt", rep.metrics_text(), written)
        log.info("%s: efficiency %.4f, duty std %.4f", name, rep.metrics["tracking_efficiency"], rep.metrics["duty_stddev"])
    names = list(reports)
    a, b = (names[-1], names[0]) if len(names) > 1 else (names[0], names[0])
    cmp = mppt.compare(reports[a], reports[b])
    _write(out, "comparison.txt", cmp.to_text(), written)
    _write(out, "differences.csv", cmp.differences_csv(), written)


COMMANDS = {
    "irradiance": (cmd_irradiance, "clear-sky irradiance profile for a site and day"),
    "calibrate": (cmd_calibrate, "fit pyranometer volts to the clear-sky estimate"),
    "dataset": (cmd_dataset, "generate, split and summarize the duty-cycle dataset"),
    "train": (cmd_train, "train candidate networks and export the best one"),
    "eval": (cmd_eval, "score a weight file on a dataset split"),
    "simulate": (cmd_simulate, "closed-loop day simulation of P&O and ANN controllers"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvmppt", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value config file or a previous run's manifest")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the seed")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--quiet", action="store_true", help="only report errors")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", force=True)
    func, _ = COMMANDS[args.command]
    try:
        cfg = resolve_config(args.command, args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        written: list[str] = []
        func(cfg, out, written)
        write_manifest(out, args.command, cfg, written)
    except (UsageError, kvfile.ConfigError, FileNotFoundError) as exc:
        print(f"pvmppt {args.command}: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, ck.DivergenceError, SearchError, FloatingPointError) as exc:
        print(f"pvmppt {args.command}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"pvmppt {args.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
