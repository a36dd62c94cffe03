"""Command-line entry point.

One binary, subcommand style; all numerics live in the library modules and
this stays a thin shell.  Subcommands: ``ingest``, ``synth``, ``fit``,
``forecast``, ``experiment``, ``report``.  Every run merges the JSON
config over documented defaults (unknown keys rejected), applies CLI
overrides, and writes the resulting effective config next to its outputs
so the run can be reproduced bit-for-bit from that file and the seed.

Exit codes: 0 success, 2 usage/config/data error, 3 internal numerical
failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as dt
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import geotime, gp, kernels, pipeline
from .geotime import AlignmentError, ProjectionDomainError, TransverseMercator
from .gp import ConditioningError, FitError, TrainingSet
from .kernels import KernelSpecError
from .pipeline import BoundaryBox, EmptyDatasetError

__all__ = ["main", "DEFAULT_CONFIG", "load_config", "read_forecast_csv"]


class ConfigError(ValueError):
    """Bad configuration document."""


DEFAULT_CONFIG = {
    "seed": 0,
    "jobs": 1,
    "paths": {
        "metadata": None,
        "power": None,
        "hrv": None,
        "output_dir": "pvgp-out",
    },
    "projection": TransverseMercator().to_mapping(),
    "boundary": {
        "min_easting": 0.0,
        "min_northing": 0.0,
        "max_easting": 700_000.0,
        "max_northing": 1_300_000.0,
    },
    "filters": {
        "night_elevation_deg": geotime.NIGHT_ELEVATION_DEG,
        "overnight_power_fraction": pipeline.OVERNIGHT_POWER_FRACTION,
        "overnight_min_nights": pipeline.OVERNIGHT_MIN_NIGHTS,
    },
    "hrv": {
        "sensor_max": pipeline.HRV_SENSOR_MAX,
        "patch_px": 6,
        # geometry for the CSV fallback container, which has no header
        "csv_geometry": None,
    },
    "kernel": "periodic(matern12; h=1.0, ls=[1.0, 1.0], w=1.0, T=288.0) + whitenoise(sigma2=0.01)",
    "fit": {"restarts": 2, "max_iter": 200, "optimize_period": False},
    "forecast": {"training_days": 1, "training_stride": 1, "refit": True},
    "experiment": {
        "protocol": "set_two",
        "systems": [],
        "forecast_start_index": None,
        "test_days": 1,
        "training_stride": 1,
        "refit": True,
        "set_one": {
            "training_days": [7, 14, 21, 30],
            "patch_px": [2, 6, 12],
            "kernel_bases": ["se", "rq", "matern12"],
        },
        "set_two": {"training_days": 21, "patch_px": [6, 12]},
        "custom": {
            "training_days": [1],
            "patch_px": [6],
            "kernels": [],
            "horizon_steps": 48,
            "cloud_modes": ["given"],
        },
    },
    "synth": {
        "scenario": "scattered",
        "days": 12,
        "start_date": "2021-06-01",
        "system_id": 1,
        "latitude": 51.5,
        "longitude": -0.12,
        "capacity_w": 3000.0,
        "cloud_attenuation": 0.9,
        "overcast_fraction": 1.0,
        "grid_px": 16,
        "pixel_size": 1000.0,
        "clear_sky_hrv": 0.08,
        "overcast_hrv": 0.85,
    },
    "invocation": None,
}


def _merge(defaults, user, path=""):
    if not isinstance(user, dict):
        raise ConfigError(f"config section {path or '<root>'} must be an object")
    merged = copy.deepcopy(defaults)
    for key, value in user.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(defaults[key], dict) and defaults[key] and not key == "projection":
            merged[key] = _merge(defaults[key], value, path=f"{path}{key}.")
        elif key == "projection":
            merged[key] = {**defaults[key], **TransverseMercator.from_mapping(value).to_mapping()}
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path: str | None) -> dict:
    """Read the JSON config document and merge it over the defaults."""
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    text = Path(path).read_text(encoding="utf-8")
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return _merge(DEFAULT_CONFIG, user)


def _write_effective_config(cfg: dict, outdir: Path) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "effective_config.json"
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _require_path(cfg: dict, key: str) -> Path:
    value = cfg["paths"].get(key)
    if not value:
        raise ConfigError(f"paths.{key} is not set in the config")
    path = Path(value)
    if not path.exists():
        raise FileNotFoundError(f"paths.{key}: no such file: {path}")
    return path


def _load_bundle(cfg: dict):
    """Load metadata + power + HRV and run the cleaning filters."""
    projection = TransverseMercator.from_mapping(cfg["projection"])
    meta = pipeline.load_metadata(_require_path(cfg, "metadata"), projection)
    power = pipeline.load_power(_require_path(cfg, "power"))
    hrv_path = _require_path(cfg, "hrv")
    if hrv_path.suffix == ".csv":
        geometry = cfg["hrv"].get("csv_geometry")
        if not geometry:
            raise ConfigError("hrv.csv_geometry must be set to read a CSV raster fallback")
        stack = pipeline.read_hrv_csv(hrv_path, power.epoch_utc, **geometry)
    else:
        stack = pipeline.read_hrv(hrv_path, power.epoch_utc)
    boundary = BoundaryBox(**cfg["boundary"])
    filters = cfg["filters"]
    result = pipeline.filter_systems(
        meta.systems,
        power,
        boundary,
        night_threshold_deg=filters["night_elevation_deg"],
        overnight_fraction=filters["overnight_power_fraction"],
        min_nights=filters["overnight_min_nights"],
    )
    return meta, power, stack, result


def _assemble_kept(cfg: dict, power, stack, kept, patch_px: int):
    datasets = {}
    lo = int(min(idx.min() for idx, _ in power.series.values()))
    hi = int(max(idx.max() for idx, _ in power.series.values())) + 1
    for system in kept:
        datasets[(system.system_id, patch_px)] = pipeline.assemble(
            system, power, stack, patch_px, (lo, hi), sensor_max=cfg["hrv"]["sensor_max"]
        )
    return datasets


def _print_filter_summary(meta, result, out) -> None:
    print(f"kept {len(result.kept)} system(s)", file=out)
    print(f"removed {len(result.removed)} system(s)", file=out)
    for removal in result.removed:
        print(f"  system {removal.system.system_id}: {removal.reason} ({removal.detail})", file=out)
    if meta.skipped:
        print(f"skipped {len(meta.skipped)} metadata row(s)", file=out)
        for lineno, reason in meta.skipped:
            print(f"  line {lineno}: {reason}", file=out)


# -- subcommands -------------------------------------------------------------


def cmd_ingest(cfg: dict, args) -> int:
    outdir = Path(cfg["paths"]["output_dir"])
    _write_effective_config(cfg, outdir)
    meta, power, stack, result = _load_bundle(cfg)
    _print_filter_summary(meta, result, sys.stdout)
    patch = cfg["hrv"]["patch_px"]
    datasets = _assemble_kept(cfg, power, stack, result.kept, patch)
    for (sid, _), series in sorted(datasets.items()):
        path = outdir / f"assembled_{sid}_{patch}px.csv"
        lines = ["time_index,timestamp_utc,hrv_mean,power_w"]
        for t, h, p in zip(series.time_index.tolist(), series.hrv_mean.tolist(), series.power_w.tolist()):
            stamp = geotime.index_to_timestamp(t, series.epoch_utc).strftime("%Y-%m-%dT%H:%M:%SZ")
            lines.append(f"{t},{stamp},{h!r},{p!r}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"assembled system {sid}: {series.n} rows, {series.gaps} gaps -> {path}", file=sys.stdout)
    return 0


def cmd_synth(cfg: dict, args) -> int:
    outdir = Path(cfg["paths"]["output_dir"])
    _write_effective_config(cfg, outdir)
    s = cfg["synth"]
    projection = TransverseMercator.from_mapping(cfg["projection"])
    location = geotime.GeoPoint.from_latlon(s["latitude"], s["longitude"], projection)
    system = pipeline.PvSystem(system_id=s["system_id"], location=location, capacity_w=s["capacity_w"])
    start = dt.datetime.fromisoformat(s["start_date"]).replace(tzinfo=geotime.UTC)
    bundle = ex.generate_synthetic(
        s["scenario"],
        s["days"],
        system,
        seed=cfg["seed"],
        start_utc=start,
        cloud_attenuation=s["cloud_attenuation"],
        overcast_fraction=s["overcast_fraction"],
        grid_px=s["grid_px"],
        pixel_size=s["pixel_size"],
        sensor_max=cfg["hrv"]["sensor_max"],
        clear_sky_hrv=s["clear_sky_hrv"],
        overcast_hrv=s["overcast_hrv"],
    )
    paths = bundle.write(outdir)
    for kind, path in paths.items():
        print(f"{kind}: {path}", file=sys.stdout)
    return 0


def _training_set_for(cfg, series, end_index: int):
    fc = cfg["forecast"]
    lo = end_index - fc["training_days"] * geotime.STEPS_PER_DAY
    rows = series.window(lo, end_index)
    if rows.n < 2:
        raise EmptyDatasetError(f"training window [{lo}, {end_index}) holds {rows.n} rows")
    mask = (rows.time_index - lo) % fc["training_stride"] == 0
    X = np.column_stack([rows.time_index[mask].astype(float), rows.hrv_mean[mask]])
    return TrainingSet.from_arrays(X, rows.power_w[mask])


def cmd_fit(cfg: dict, args) -> int:
    outdir = Path(cfg["paths"]["output_dir"])
    _write_effective_config(cfg, outdir)
    meta, power, stack, result = _load_bundle(cfg)
    series_map = _assemble_kept(cfg, power, stack, result.kept, cfg["hrv"]["patch_px"])
    key = (args.system, cfg["hrv"]["patch_px"])
    if key not in series_map:
        raise ConfigError(f"unknown or filtered system {args.system}")
    series = series_map[key]
    end = int(series.time_index.max()) + 1
    train = _training_set_for(cfg, series, end)
    template = kernels.parse(cfg["kernel"])
    fit_cfg = cfg["fit"]
    fitted = gp.fit_hyperparameters(
        train,
        template,
        restarts=fit_cfg["restarts"],
        seed=cfg["seed"],
        max_iter=fit_cfg["max_iter"],
        optimize_period=fit_cfg["optimize_period"],
    )
    objective = gp.log_marginal_likelihood(train, fitted)
    text = fitted.to_text()
    (outdir / "fitted_kernel.txt").write_text(f"{text}\nlog_marginal_likelihood={objective!r}\n", encoding="utf-8")
    print(text, file=sys.stdout)
    print(f"log marginal likelihood: {objective:.4f} ({train.n} training rows)", file=sys.stdout)
    return 0


def cmd_forecast(cfg: dict, args) -> int:
    outdir = Path(cfg["paths"]["output_dir"])
    _write_effective_config(cfg, outdir)
    meta, power, stack, result = _load_bundle(cfg)
    patch = cfg["hrv"]["patch_px"]
    series_map = _assemble_kept(cfg, power, stack, result.kept, patch)
    key = (args.system, patch)
    if key not in series_map:
        raise ConfigError(f"unknown or filtered system {args.system}")
    series = series_map[key]

    start_ts = dt.datetime.fromisoformat(args.start.replace("Z", "+00:00"))
    start = geotime.timestamp_to_index(start_ts, power.epoch_utc)
    horizon = {"48h": ex.STEPS_48H, "4h": ex.STEPS_4H}[args.horizon]
    fc = cfg["forecast"]
    config = ex.ExperimentConfig(
        training_days=fc["training_days"],
        patch_px=patch,
        kernel=kernels.parse(cfg["kernel"]),
        horizon_steps=horizon,
        cloud_mode=args.cloud_mode,
        forecast_start=start,
        system_ids=(args.system,),
        training_stride=fc["training_stride"],
        refit=fc["refit"],
    )
    fit_cfg = cfg["fit"]
    options = ex.FitOptions(restarts=fit_cfg["restarts"], max_iter=fit_cfg["max_iter"], optimize_period=fit_cfg["optimize_period"])
    runner = ex.forecast_48h if horizon == ex.STEPS_48H else ex.forecast_4h
    outcome = runner(series, config, seed=cfg["seed"], fit_options=options)

    path = outdir / f"forecast_{args.system}_{start}.csv"
    lines = ["time_index,timestamp_utc,mean_w,sd_w"]
    for t, m, s in zip(outcome.time_index.tolist(), outcome.mean_clamped.tolist(), outcome.sd.tolist()):
        stamp = geotime.index_to_timestamp(t, power.epoch_utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        lines.append(f"{t},{stamp},{m!r},{s!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"forecast written to {path} (MAE vs held-out truth: {outcome.mae:.2f} W)", file=sys.stdout)
    return 0


def read_forecast_csv(path):
    """Read a forecast CSV back into (time_index, mean_w, sd_w) arrays."""
    times, means, sds = [], [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["time_index", "timestamp_utc", "mean_w", "sd_w"]:
            raise ValueError(f"{path}: unexpected forecast header {reader.fieldnames}")
        for row in reader:
            times.append(int(row["time_index"]))
            means.append(float(row["mean_w"]))
            sds.append(float(row["sd_w"]))
    return np.asarray(times), np.asarray(means), np.asarray(sds)


def _build_grid(cfg: dict, kept_ids: list[int]):
    e = cfg["experiment"]
    systems = [int(s) for s in e["systems"]] or kept_ids
    if not systems:
        raise ConfigError("no systems available for the experiment grid")
    common = dict(
        test_days=e["test_days"],
        training_stride=e["training_stride"],
        refit=e["refit"],
    )
    protocol = e["protocol"]
    if protocol == "set_one":
        p = e["set_one"]
        start = e["forecast_start_index"]
        if start is None:
            start = max(p["training_days"]) * geotime.STEPS_PER_DAY
        return ex.set_one_configs(
            systems,
            forecast_start=int(start),
            training_days_grid=tuple(p["training_days"]),
            patch_grid=tuple(p["patch_px"]),
            kernel_bases=tuple(p["kernel_bases"]),
            **common,
        )
    if protocol == "set_two":
        p = e["set_two"]
        start = e["forecast_start_index"]
        if start is None:
            start = p["training_days"] * geotime.STEPS_PER_DAY
        return ex.set_two_configs(
            systems,
            forecast_start=int(start),
            training_days=p["training_days"],
            patch_grid=tuple(p["patch_px"]),
            **common,
        )
    if protocol == "custom":
        p = e["custom"]
        if not p["kernels"]:
            raise ConfigError("experiment.custom.kernels must list at least one kernel")
        start = e["forecast_start_index"]
        if start is None:
            start = max(p["training_days"]) * geotime.STEPS_PER_DAY
        configs = []
        for days in p["training_days"]:
            for patch in p["patch_px"]:
                for text in p["kernels"]:
                    for mode in p["cloud_modes"]:
                        configs.append(
                            ex.ExperimentConfig(
                                training_days=days,
                                patch_px=patch,
                                kernel=kernels.parse(text),
                                horizon_steps=p["horizon_steps"],
                                cloud_mode=mode,
                                forecast_start=int(start),
                                system_ids=tuple(systems),
                                **common,
                            )
                        )
        return configs
    raise ConfigError(f"unknown experiment.protocol {protocol!r}")


def cmd_experiment(cfg: dict, args) -> int:
    outdir = Path(cfg["paths"]["output_dir"])
    _write_effective_config(cfg, outdir)
    meta, power, stack, result = _load_bundle(cfg)
    kept_ids = sorted(s.system_id for s in result.kept)
    configs = _build_grid(cfg, kept_ids)
    if not configs:
        raise ConfigError("experiment grid is empty")

    patches = sorted({c.patch_px for c in configs})
    datasets = {}
    for patch in patches:
        datasets.update(_assemble_kept(cfg, power, stack, result.kept, patch))

    fit_cfg = cfg["fit"]
    options = ex.FitOptions(restarts=fit_cfg["restarts"], max_iter=fit_cfg["max_iter"], optimize_period=fit_cfg["optimize_period"])
    report = ex.run_grid(configs, datasets, seed=cfg["seed"], jobs=cfg["jobs"], fit_options=options)

    _write_report_files(report, outdir)
    print(report.to_text(), file=sys.stdout)
    failed = sum(len(r.failures) for r in report.rows)
    if failed:
        print(f"{failed} cell(s) failed; see report.json for reasons", file=sys.stdout)
    return 0


def _write_report_files(report: ex.ExperimentReport, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (outdir / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (outdir / "report.json").write_text(report.to_json(), encoding="utf-8")
    ex.export_boxplot_data(report, "testing-day", outdir / "boxplot_by_day.csv")
    ex.export_boxplot_data(report, "system", outdir / "boxplot_by_system.csv")


def cmd_report(cfg: dict, args) -> int:
    outdir = Path(cfg["paths"]["output_dir"])
    _write_effective_config(cfg, outdir)
    report_path = Path(args.report)
    if not report_path.exists():
        raise FileNotFoundError(f"no such report: {report_path}")
    report = ex.ExperimentReport.from_json(report_path.read_text(encoding="utf-8"))
    _write_report_files(report, outdir)
    print(report.to_text(), file=sys.stdout)
    return 0


# -- argument parsing -----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvgp", description="GP forecasting of PV power from cloud coverage")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config path (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--jobs", type=int, help="parallel grid cells")
        p.add_argument("--out", help="override paths.output_dir")

    common(sub.add_parser("ingest", help="load, filter, and assemble datasets"))
    common(sub.add_parser("synth", help="generate a synthetic dataset bundle"))

    fit = sub.add_parser("fit", help="fit kernel hyperparameters for one system")
    common(fit)
    fit.add_argument("--system", type=int, required=True)

    fc = sub.add_parser("forecast", help="forecast one system and write mean/sd CSV")
    common(fc)
    fc.add_argument("--system", type=int, required=True)
    fc.add_argument("--start", required=True, help="ISO-8601 UTC forecast start on a 5-minute boundary")
    fc.add_argument("--horizon", choices=["48h", "4h"], default="4h")
    fc.add_argument("--cloud-mode", choices=[ex.CLOUD_GIVEN, ex.CLOUD_PERSISTENCE], default=ex.CLOUD_GIVEN)

    exp = sub.add_parser("experiment", help="run the configured experiment grid")
    common(exp)

    rep = sub.add_parser("report", help="re-render report files from a report.json")
    common(rep)
    rep.add_argument("--report", required=True, help="path to a report.json")

    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "experiment": cmd_experiment,
    "report": cmd_report,
}

_USAGE_ERRORS = (
    ConfigError,
    FileNotFoundError,
    EmptyDatasetError,
    KernelSpecError,
    AlignmentError,
    ProjectionDomainError,
    pipeline.CoverageError,
    ValueError,
    KeyError,
)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.jobs is not None:
            cfg["jobs"] = args.jobs
        if args.out is not None:
            cfg["paths"]["output_dir"] = args.out
        cfg["invocation"] = {
            "command": args.command,
            "args": {k: v for k, v in sorted(vars(args).items()) if k != "command" and v is not None},
        }
        return _COMMANDS[args.command](cfg, args)
    except (ConditioningError, FitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
