"""Shared run fixtures.

Heavy evolution runs are session-scoped and built lazily on first use, so
unit-test-only invocations stay fast while the acceptance tests share one
set of canonical trajectories.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import pytest

from shocklab import (
    InitialData,
    ModelParams,
    SeedProfile,
    Trajectory,
    build_initial_data,
    bump_seed,
    default_grid,
    evolve,
    sine_seed,
    zero_seed,
)

#: Amplitude tuned so the sine-family shock margin is exactly -0.5.
NO_SHOCK_AMPLITUDE = 0.32573500793528


@dataclass(frozen=True)
class RunBundle:
    """One evolved trajectory plus its construction context."""

    params: ModelParams
    seed: SeedProfile
    data: InitialData
    traj: Trajectory
    wall: float


def make_run(
    seed: SeedProfile,
    params: ModelParams,
    cells_per_delta: int = 256,
    cfl: float = 1.2,
    t_end: float = -1.0,
    stop_mu: float = 0.05,
    n_rays: int = 33,
) -> RunBundle:
    grid = default_grid(params, t_end=t_end, cells_per_delta=cells_per_delta, cfl=cfl)
    data = build_initial_data(seed, params, grid)
    t0 = time.perf_counter()
    traj = evolve(data, t_end=t_end, stop_mu=stop_mu, n_rays=n_rays)
    return RunBundle(params, seed, data, traj, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def trivial_run() -> RunBundle:
    params = ModelParams(g2=1.0, delta=0.1, r0=5.0)
    return make_run(zero_seed(), params, cells_per_delta=128, n_rays=17)


@pytest.fixture(scope="session")
def small_shock_run() -> RunBundle:
    """Fast shock-forming run for unit tests (fires around t = -2.9)."""
    params = ModelParams(g2=1.0, delta=0.1, r0=5.0)
    return make_run(bump_seed(1.0), params, cells_per_delta=128)


@pytest.fixture(scope="session")
def small_linear_run() -> RunBundle:
    """g2 = 0 regression run: exact linear propagation, mu identically 1."""
    params = ModelParams(g2=0.0, delta=0.1, r0=5.0)
    return make_run(bump_seed(1.0), params, cells_per_delta=256)


@pytest.fixture(scope="session")
def shock_run_acceptance() -> RunBundle:
    """Margin -3pi/2 sine run at the acceptance resolution (512 cells/delta)."""
    params = ModelParams(g2=1.0, delta=0.05, r0=10.0)
    return make_run(sine_seed(1.0), params, cells_per_delta=512, cfl=1.5)


@pytest.fixture(scope="session")
def noshock_run_acceptance() -> RunBundle:
    """Margin -0.5 sine run at 512 cells/delta: must reach t = -1 without firing."""
    params = ModelParams(g2=1.0, delta=0.05, r0=10.0)
    return make_run(sine_seed(NO_SHOCK_AMPLITUDE), params, cells_per_delta=512, cfl=1.5)


@pytest.fixture(scope="session")
def cross_check_run() -> RunBundle:
    """Shock run at half the default CFL number for the dual-route mu check.

    Both mu routes (label differencing of ray positions and the transported
    inverse density) integrate along rays at second order in the time step,
    so their disagreement shrinks like dt^2; the halved CFL puts the ray
    integration well inside the 1 percent agreement band while mu > 0.1.
    """
    params = ModelParams(g2=1.0, delta=0.05, r0=10.0)
    return make_run(sine_seed(1.0), params, cells_per_delta=256, cfl=0.75)


@pytest.fixture(scope="session")
def residual_matrix() -> dict[tuple[float, float], RunBundle]:
    """Bump runs over the residual-stability matrix at 256 cells/delta.

    Keys are (delta, r0): the base cell, two delta-halvings, and one
    r0-doubling.
    """
    out: dict[tuple[float, float], RunBundle] = {}
    for delta, r0 in ((0.1, 10.0), (0.05, 10.0), (0.025, 10.0), (0.1, 20.0)):
        params = ModelParams(g2=1.0, delta=delta, r0=r0)
        out[(delta, r0)] = make_run(bump_seed(1.0), params)
    return out
