"""Canonical run directories, produced through the solver CLI only.

Every fixture shells out to the installed command line interface and hands
back a directory of artifacts; nothing in these tests touches solver
internals, which is exactly the coupling contract the plots package
promises.
"""
from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

SOLVER_CLI = [sys.executable, "-m", "shocklab.cli"]

#: Sine-family amplitude whose shock margin is exactly -0.5 (no collapse).
NO_SHOCK_AMPLITUDE = "0.32573500793528"

FAST_MODEL = [
    "--set", "model.delta=0.1",
    "--set", "model.r0=5.0",
    "--set", "grid.cells_per_delta=128",
]


def run_solver(*argv: str) -> subprocess.CompletedProcess:
    proc = subprocess.run(
        [*SOLVER_CLI, *argv], capture_output=True, text=True, timeout=600
    )
    if proc.returncode != 0:
        raise RuntimeError(f"solver CLI failed: {proc.stderr}")
    return proc


@pytest.fixture(scope="session")
def trivial_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("trivial")
    run_solver(
        "evolve", "--out", str(out), *FAST_MODEL,
        "--set", "seed.family=zero", "--set", "evolve.n_rays=17",
    )
    return out


@pytest.fixture(scope="session")
def shock_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("shock")
    run_solver("evolve", "--out", str(out), *FAST_MODEL)
    return out


@pytest.fixture(scope="session")
def noshock_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("noshock")
    run_solver(
        "evolve", "--out", str(out), *FAST_MODEL,
        "--set", "seed.family=sine",
        "--set", f"seed.amplitude={NO_SHOCK_AMPLITUDE}",
    )
    return out


@pytest.fixture(scope="session")
def burgers_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("burgers")
    run_solver("burgers", "--out", str(out))
    return out


@pytest.fixture(scope="session")
def sweep_dir(tmp_path_factory) -> Path:
    """r0 sweep: residuals.csv plus the scattering convergence table."""
    out = tmp_path_factory.mktemp("sweep")
    run_solver(
        "sweep", "--out", str(out),
        "--set", "model.delta=0.1",
        "--set", "grid.cells_per_delta=64",
        "--set", "sweep.parameter=r0",
        "--set", "sweep.values=5.0, 10.0, 20.0",
        "--set", "sweep.workers=2",
    )
    return out
