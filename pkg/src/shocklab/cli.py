"""Run orchestration: config parsing, pipelines, and output layout.

One directory per run, holding a manifest (config echo, versions, wall
time, stop reason) plus the CSV/JSON artifacts of the executed pipeline.
All emission goes through io_utils, so identical configs produce
byte-identical CSVs; the manifest is the only artifact carrying wall time.

Subcommands: ``datagen``, ``evolve``, ``burgers``, ``sweep``. A sweep runs
the evolve pipeline per swept value in a worker pool, aggregates the
expansion residuals into one table, and (for r0 sweeps) adds the
initial-energy scattering table over the same values.
"""
from __future__ import annotations

import argparse
import configparser
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .burgers_lab import (
    burgers_report,
    linear_burgers,
    sine_burgers,
    write_burgers_report,
    write_characteristics,
)
from .data_builder import (
    build_initial_data,
    default_grid,
    verify_radiation_bounds,
    write_initial_data,
    write_radiation_report,
)
from .energy_monitor import (
    energies_over_time,
    scattering_probe,
    write_energies,
    write_scattering,
)
from .errors import ConfigError, ShocklabError, SliceInvalidError
from .io_utils import write_csv, write_json
from .optical_geometry import write_fan
from .radial_solver import evolve, write_run_meta, write_trajectory
from .seed_profiles import (
    ModelParams,
    SeedProfile,
    bump_seed,
    shock_margin,
    sine_seed,
    tabulated_seed,
    zero_seed,
)
from .shock_detector import detect, write_mu_min, write_shock_report

__all__ = ["RunConfig", "load_config", "run", "main"]

#: Section -> {key: default-as-string}. Every recognized key appears here;
#: unknown keys in a config file or --set are field-path errors.
DEFAULTS: dict[str, dict[str, str]] = {
    "model": {"g2": "1.0", "delta": "0.05", "r0": "10.0"},
    "seed": {"family": "bump", "amplitude": "1.0", "path": ""},
    "grid": {"cells_per_delta": "256", "cfl": "1.2", "pad": "0.25", "t_end": "-1.0"},
    "evolve": {"stop_mu": "0.05", "n_rays": "33", "store_every": "4"},
    "burgers": {
        "profile": "sine",
        "slope": "-1.0",
        "n_rays": "1024",
        "t_end": "",
        "crossing_dt": "1e-4",
    },
    "sweep": {"parameter": "delta", "values": "", "workers": "0"},
}

_SEED_FAMILIES = ("bump", "sine", "zero", "file")
_BURGERS_PROFILES = ("sine", "linear")
_SWEEP_PARAMETERS = ("r0", "delta")


@dataclass
class RunConfig:
    """Validated, typed view of one run's configuration."""

    mode: str
    out_dir: Path
    echo: dict[str, dict[str, str]]
    params: ModelParams
    seed: SeedProfile
    cells_per_delta: int
    cfl: float
    pad: float
    t_end: float
    stop_mu: float
    n_rays: int
    store_every: int
    burgers_profile: str
    burgers_slope: float
    burgers_n_rays: int
    burgers_t_end: float | None
    burgers_crossing_dt: float
    sweep_parameter: str
    sweep_values: list[float] = field(default_factory=list)
    sweep_workers: int = 0


def _parse_typed(section: str, key: str, raw: str, kind: str):
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
    except ValueError:
        pass
    raise ConfigError(f"{section}.{key}: {raw!r} is not a valid {kind}")


def _read_sections(path: str | None, sets: list[str]) -> dict[str, dict[str, str]]:
    """Merge defaults <- config file <- --set overrides, validating keys."""
    merged = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser()
        try:
            cp.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"config file {path}: {exc}") from exc
        for sec in cp.sections():
            if sec not in merged:
                raise ConfigError(f"{sec}: unknown config section")
            for key, val in cp.items(sec):
                if key not in merged[sec]:
                    raise ConfigError(f"{sec}.{key}: unknown config key")
                merged[sec][key] = val
    for item in sets:
        head, eq, val = item.partition("=")
        sec, dot, key = head.partition(".")
        if not eq or not dot or not sec or not key:
            raise ConfigError(f"--set {item!r}: expected section.key=value")
        if sec not in merged:
            raise ConfigError(f"{sec}: unknown config section")
        if key not in merged[sec]:
            raise ConfigError(f"{sec}.{key}: unknown config key")
        merged[sec][key] = val
    return merged


def _build_seed(cfg: dict[str, dict[str, str]]) -> SeedProfile:
    family = cfg["seed"]["family"]
    if family not in _SEED_FAMILIES:
        raise ConfigError(
            f"seed.family: {family!r} not one of {'|'.join(_SEED_FAMILIES)}"
        )
    amplitude = _parse_typed("seed", "amplitude", cfg["seed"]["amplitude"], "float")
    if family == "zero":
        return zero_seed()
    if family == "sine":
        return sine_seed(amplitude)
    if family == "bump":
        return bump_seed(amplitude)
    path = cfg["seed"]["path"]
    if not path:
        raise ConfigError("seed.path: required when seed.family = file")
    if not Path(path).is_file():
        raise ConfigError(f"seed.path: file not found: {path}")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] < 2:
        raise ConfigError(f"seed.path: {path} needs columns s, phi1[, phi2]")
    phi2 = table[:, 2] if table.shape[1] >= 3 else None
    return tabulated_seed(table[:, 0], table[:, 1], phi2, name=Path(path).stem)


def load_config(mode: str, out_dir: str, path: str | None, sets: list[str]) -> RunConfig:
    cfg = _read_sections(path, sets)

    g2 = _parse_typed("model", "g2", cfg["model"]["g2"], "float")
    delta = _parse_typed("model", "delta", cfg["model"]["delta"], "float")
    r0 = _parse_typed("model", "r0", cfg["model"]["r0"], "float")
    try:
        params = ModelParams(g2=g2, delta=delta, r0=r0)
    except ShocklabError as exc:
        raise ConfigError(f"model: {exc}") from exc

    sweep_parameter = cfg["sweep"]["parameter"]
    values_raw = cfg["sweep"]["values"].strip()
    sweep_values: list[float] = []
    if mode == "sweep":
        if sweep_parameter not in _SWEEP_PARAMETERS:
            raise ConfigError(
                f"sweep.parameter: {sweep_parameter!r} not one of "
                f"{'|'.join(_SWEEP_PARAMETERS)}"
            )
        if not values_raw:
            raise ConfigError("sweep.values: empty sweep list")
        for tok in values_raw.split(","):
            sweep_values.append(_parse_typed("sweep", "values", tok.strip(), "float"))
        mode = f"sweep-{sweep_parameter}"

    burgers_t_end_raw = cfg["burgers"]["t_end"].strip()
    burgers_profile = cfg["burgers"]["profile"]
    if burgers_profile not in _BURGERS_PROFILES:
        raise ConfigError(
            f"burgers.profile: {burgers_profile!r} not one of "
            f"{'|'.join(_BURGERS_PROFILES)}"
        )

    return RunConfig(
        mode=mode,
        out_dir=Path(out_dir),
        echo=cfg,
        params=params,
        seed=_build_seed(cfg),
        cells_per_delta=_parse_typed(
            "grid", "cells_per_delta", cfg["grid"]["cells_per_delta"], "int"
        ),
        cfl=_parse_typed("grid", "cfl", cfg["grid"]["cfl"], "float"),
        pad=_parse_typed("grid", "pad", cfg["grid"]["pad"], "float"),
        t_end=_parse_typed("grid", "t_end", cfg["grid"]["t_end"], "float"),
        stop_mu=_parse_typed("evolve", "stop_mu", cfg["evolve"]["stop_mu"], "float"),
        n_rays=_parse_typed("evolve", "n_rays", cfg["evolve"]["n_rays"], "int"),
        store_every=_parse_typed(
            "evolve", "store_every", cfg["evolve"]["store_every"], "int"
        ),
        burgers_profile=burgers_profile,
        burgers_slope=_parse_typed("burgers", "slope", cfg["burgers"]["slope"], "float"),
        burgers_n_rays=_parse_typed(
            "burgers", "n_rays", cfg["burgers"]["n_rays"], "int"
        ),
        burgers_t_end=(
            None
            if not burgers_t_end_raw
            else _parse_typed("burgers", "t_end", burgers_t_end_raw, "float")
        ),
        burgers_crossing_dt=_parse_typed(
            "burgers", "crossing_dt", cfg["burgers"]["crossing_dt"], "float"
        ),
        sweep_parameter=sweep_parameter,
        sweep_values=sweep_values,
        sweep_workers=_parse_typed("sweep", "workers", cfg["sweep"]["workers"], "int"),
    )


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def _write_manifest(
    cfg: RunConfig,
    wall: float,
    artifacts: list[str],
    extra: dict | None = None,
    warnings: list[str] | None = None,
) -> None:
    payload = {
        "mode": cfg.mode,
        "config": cfg.echo,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "shocklab": __version__,
        },
        "wall_time_s": wall,
        "artifacts": sorted(artifacts),
        "warnings": warnings or [],
    }
    if extra:
        payload.update(extra)
    write_json(cfg.out_dir / "manifest.json", payload)


def run_datagen(cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    grid = default_grid(
        cfg.params, t_end=cfg.t_end, cells_per_delta=cfg.cells_per_delta,
        cfl=cfg.cfl, pad=cfg.pad,
    )
    data = build_initial_data(cfg.seed, cfg.params, grid)
    report = verify_radiation_bounds(data)
    margin, _ = shock_margin(cfg.seed, cfg.params)
    write_initial_data(data, cfg.out_dir / "initial_data.csv")
    write_radiation_report(report, margin, cfg.out_dir / "initial_report.json")
    arts = ["initial_data.csv", "initial_report.json"]
    _write_manifest(cfg, time.perf_counter() - t0, arts)
    return {"ratio1": report.ratio1, "ratio2": report.ratio2, "margin": margin}


def run_evolve(cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    warnings: list[str] = []
    grid = default_grid(
        cfg.params, t_end=cfg.t_end, cells_per_delta=cfg.cells_per_delta,
        cfl=cfg.cfl, pad=cfg.pad,
    )
    data = build_initial_data(cfg.seed, cfg.params, grid)
    report = verify_radiation_bounds(data)
    margin, _ = shock_margin(cfg.seed, cfg.params)
    write_initial_data(data, cfg.out_dir / "initial_data.csv")
    write_radiation_report(report, margin, cfg.out_dir / "initial_report.json")

    traj = evolve(
        data, t_end=cfg.t_end, stop_mu=cfg.stop_mu,
        n_rays=cfg.n_rays, store_every=cfg.store_every,
    )
    write_trajectory(traj, cfg.out_dir / "trajectory.csv")
    write_run_meta(traj, cfg.out_dir / "run_meta.json")
    write_fan(traj.fan, cfg.out_dir / "fan.csv")
    write_mu_min(traj.fan, cfg.out_dir / "mu_min.csv")
    shock = detect(traj.fan, cfg.seed, cfg.params, stop_mu=cfg.stop_mu)
    write_shock_report(shock, cfg.out_dir / "shock_report.json")
    arts = [
        "initial_data.csv", "initial_report.json", "trajectory.csv",
        "run_meta.json", "fan.csv", "mu_min.csv", "shock_report.json",
    ]
    try:
        write_energies(energies_over_time(traj), cfg.out_dir / "energies.csv")
        arts.append("energies.csv")
    except (SliceInvalidError, ShocklabError) as exc:
        warnings.append(f"energies.csv skipped: {exc}")

    extra = {"stop_reason": traj.stop_reason, "t_final": traj.t_final}
    _write_manifest(cfg, time.perf_counter() - t0, arts, extra, warnings)
    return {
        "fired": shock.fired,
        "t_star_observed": shock.t_star_observed,
        "mu_min_final": shock.mu_min_final,
        "residual_norms": shock.residual_norms,
        "t_final": traj.t_final,
    }


def run_burgers(cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    problem = (
        sine_burgers()
        if cfg.burgers_profile == "sine"
        else linear_burgers(cfg.burgers_slope)
    )
    report = burgers_report(
        problem,
        n_rays=cfg.burgers_n_rays,
        t_end=cfg.burgers_t_end,
        crossing_dt=cfg.burgers_crossing_dt,
    )
    write_burgers_report(report, cfg.out_dir / "burgers_report.json")
    write_characteristics(problem, cfg.out_dir / "characteristics.csv")
    _write_manifest(
        cfg, time.perf_counter() - t0, ["burgers_report.json", "characteristics.csv"]
    )
    return report


def _sweep_point(args: tuple[str | None, list[str], str, str]) -> dict:
    """One sweep point: re-parse config in the worker, run evolve."""
    config_path, sets, out_dir, label = args
    os.makedirs(out_dir, exist_ok=True)
    cfg = load_config("evolve", out_dir, config_path, sets)
    summary = run_evolve(cfg)
    summary["point"] = label
    return summary


def run_sweep(cfg: RunConfig, config_path: str | None, sets: list[str]) -> dict:
    t0 = time.perf_counter()
    param = cfg.sweep_parameter
    jobs = []
    for i, value in enumerate(cfg.sweep_values):
        label = f"point_{i:02d}"
        sub = cfg.out_dir / label
        jobs.append(
            (config_path, sets + [f"model.{param}={value!r}"], str(sub), label)
        )

    workers = cfg.sweep_workers or min(len(jobs), os.cpu_count() or 1)
    results: list[dict | None] = [None] * len(jobs)
    failures: list[dict] = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_sweep_point, job) for job in jobs]
            for i, fut in enumerate(futs):
                try:
                    results[i] = fut.result()
                except Exception as exc:  # record, continue, nonzero exit
                    failures.append({"value": cfg.sweep_values[i], "error": str(exc)})
    else:
        for i, job in enumerate(jobs):
            try:
                results[i] = _sweep_point(job)
            except Exception as exc:
                failures.append({"value": cfg.sweep_values[i], "error": str(exc)})

    # Aggregate in ascending parameter order regardless of input order.
    order = sorted(
        (k for k in range(len(jobs)) if results[k] is not None),
        key=lambda k: cfg.sweep_values[k],
    )
    rows = []
    for k in order:
        res = results[k]
        norms = res["residual_norms"]
        rows.append(
            [
                cfg.sweep_values[k],
                norms["mu"], norms["lb_mu"], norms["lpsi"], norms["tpsi"],
                norms["psi"],
                res["mu_min_final"], res["t_final"], res["fired"],
                res["t_star_observed"] if res["t_star_observed"] is not None
                else float("nan"),
            ]
        )
    write_csv(
        cfg.out_dir / "residuals.csv",
        [
            param, "res_mu", "res_lb_mu", "res_lpsi", "res_tpsi", "res_psi",
            "mu_min_final", "t_final", "fired", "t_star_observed",
        ],
        rows,
    )
    arts = ["residuals.csv"]

    if param == "r0" and len(cfg.sweep_values) >= 3:
        table = scattering_probe(
            cfg.seed, cfg.params.delta, sorted(cfg.sweep_values), g2=cfg.params.g2
        )
        write_scattering(table, cfg.out_dir / "scattering.json")
        arts.append("scattering.json")

    extra = {
        "points": [
            {"value": v, "dir": f"point_{i:02d}", "ok": results[i] is not None}
            for i, v in enumerate(cfg.sweep_values)
        ],
        "failures": failures,
    }
    _write_manifest(cfg, time.perf_counter() - t0, arts, extra)
    return {"failures": failures, "n_points": len(jobs)}


def run(cfg: RunConfig, config_path: str | None = None, sets: list[str] | None = None) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.mode == "datagen":
        run_datagen(cfg)
        return 0
    if cfg.mode == "evolve":
        run_evolve(cfg)
        return 0
    if cfg.mode == "burgers":
        run_burgers(cfg)
        return 0
    if cfg.mode.startswith("sweep-"):
        summary = run_sweep(cfg, config_path, sets or [])
        return 1 if summary["failures"] else 0
    raise ConfigError(f"mode: unknown pipeline {cfg.mode!r}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="shocklab",
        description="Shock-formation laboratory: data generation, evolution, "
        "Burgers oracle, parameter sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("datagen", "build short-pulse initial data and its quality report"),
        ("evolve", "evolve initial data, trace the fan, detect shock formation"),
        ("burgers", "run the exact Burgers validation oracle"),
        ("sweep", "run an evolve pipeline per swept parameter value"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--out", required=True, help="output run directory")
        p.add_argument(
            "--set",
            dest="sets",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override one config value (repeatable)",
        )

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.command, args.out, args.config, args.sets)
        return run(cfg, args.config, args.sets)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ShocklabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
