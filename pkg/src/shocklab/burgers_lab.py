"""Exact Burgers characteristic fan as a differencing-path oracle.

For u_t + u*u_x = 0 the characteristics are straight, x(t; x0) =
x0 + u0(x0)*t, and the inverse density along them is known in closed
form: kappa = dx/dx0 = 1 + u0'(x0)*t, so with the per-ray weight
mu0(x0) = -1/u0'(x0) the product mu = mu0*kappa = -1/u0'(x0) - t hits
zero exactly at t = -1/u0'(x0). The first blowup is t* = -1/min(u0').

Because positions are analytic, feeding them through the same
label-differencing code path used for the wave fan isolates the
differencing error: the measured mu must match the closed form to
stencil accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateRayError, FanResolutionError
from .io_utils import write_columns_csv, write_json
from .optical_geometry import mu_from_positions
from .seed_profiles import _golden_minimize

__all__ = [
    "BurgersProblem",
    "sine_burgers",
    "linear_burgers",
    "burgers_shock_time",
    "burgers_mu",
    "burgers_positions",
    "burgers_fan_validate",
    "burgers_crossing_time",
    "burgers_report",
    "write_burgers_report",
    "write_characteristics",
]


@dataclass(frozen=True)
class BurgersProblem:
    """Initial velocity profile u0 on [x_lo, x_hi] with analytic slope."""

    u0: Callable[[np.ndarray], np.ndarray]
    du0: Callable[[np.ndarray], np.ndarray]
    x_lo: float
    x_hi: float
    periodic: bool = False
    name: str = "custom"

    def __post_init__(self) -> None:
        if not self.x_lo < self.x_hi:
            raise ValueError(f"domain [{self.x_lo}, {self.x_hi}] is empty")

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    def ray_labels(self, n_rays: int) -> np.ndarray:
        """Uniform launch points; periodic domains omit the duplicate end."""
        if n_rays < 3:
            raise FanResolutionError(f"n_rays = {n_rays}; need at least 3")
        if self.periodic:
            return self.x_lo + (self.length / n_rays) * np.arange(n_rays)
        return np.linspace(self.x_lo, self.x_hi, n_rays)


def sine_burgers() -> BurgersProblem:
    """u0 = sin(x) on the periodic circle [0, 2*pi); t* = 1 at x0 = pi."""
    return BurgersProblem(
        u0=np.sin, du0=np.cos, x_lo=0.0, x_hi=2.0 * math.pi, periodic=True, name="sine"
    )


def linear_burgers(slope: float = -1.0) -> BurgersProblem:
    """u0 = slope * x: uniform compression, mu(t) = -1/slope - t exactly."""
    if slope == 0.0:
        raise DegenerateRayError("linear profile with zero slope never focuses")
    return BurgersProblem(
        u0=lambda x: slope * x,
        du0=lambda x: np.full_like(x, slope),
        x_lo=-1.0,
        x_hi=1.0,
        periodic=False,
        name="linear",
    )


def burgers_shock_time(problem: BurgersProblem, n_probe: int = 4096) -> float | None:
    """First characteristic-crossing time t* = -1/min(u0'), None if no focusing."""
    x = np.linspace(problem.x_lo, problem.x_hi, n_probe + 1)
    d = np.asarray(problem.du0(x), dtype=float)
    j = int(np.argmin(d))
    lo = x[max(j - 1, 0)]
    hi = x[min(j + 1, n_probe)]
    xm = _golden_minimize(lambda v: float(problem.du0(np.asarray([v]))[0]), lo, hi)
    dmin = min(float(d[j]), float(problem.du0(np.asarray([xm]))[0]))
    if dmin >= 0.0:
        return None
    return -1.0 / dmin


def burgers_mu(problem: BurgersProblem, x0: np.ndarray, t: float) -> np.ndarray:
    """Closed-form inverse density mu(t; x0) = -1/u0'(x0) - t."""
    d = np.asarray(problem.du0(np.asarray(x0, dtype=float)), dtype=float)
    bad = d == 0.0
    if np.any(bad):
        xb = np.asarray(x0, dtype=float)[bad][0]
        raise DegenerateRayError(
            f"u0'(x0) = 0 at x0 = {xb:.6g}: inverse-density weight undefined"
        )
    return -1.0 / d - t


def burgers_positions(problem: BurgersProblem, x0: np.ndarray, t: float) -> np.ndarray:
    """Exact characteristic positions x0 + u0(x0) * t."""
    x0 = np.asarray(x0, dtype=float)
    return x0 + np.asarray(problem.u0(x0), dtype=float) * t


def burgers_fan_validate(
    problem: BurgersProblem,
    n_rays: int,
    times: float | np.ndarray,
) -> float:
    """Max relative deviation |mu_differenced/mu_exact - 1| over the times.

    Positions are analytic; mu_differenced runs through the shared
    label-differencing path with the Burgers per-ray weight, so the
    returned number is purely the differencing error of that path. The
    deviation is relative because the exact mu is unbounded wherever u0'
    passes through zero (the weight -1/u0' cancels in the ratio, leaving
    the well-conditioned kappa comparison).
    """
    x0 = problem.ray_labels(n_rays)
    h = float(x0[1] - x0[0])
    jump = problem.length if problem.periodic else None
    weights = -1.0 / np.asarray(problem.du0(x0), dtype=float)
    if not np.all(np.isfinite(weights)):
        raise DegenerateRayError("u0' vanishes at a ray label")
    worst = 0.0
    for t in np.atleast_1d(np.asarray(times, dtype=float)):
        pos = burgers_positions(problem, x0, float(t))
        mu_num = mu_from_positions(pos, h, weights, periodic_jump=jump)
        mu_ref = burgers_mu(problem, x0, float(t))
        if np.any(mu_ref == 0.0):
            raise DegenerateRayError(f"exact mu vanishes at t = {t}: ray has focused")
        worst = max(worst, float(np.max(np.abs(mu_num / mu_ref - 1.0))))
    return worst


def burgers_crossing_time(
    problem: BurgersProblem,
    n_rays: int = 1024,
    dt: float = 1e-4,
    t_max: float = 10.0,
) -> float | None:
    """First time adjacent rays cross, marching positions in steps of dt.

    Lower bound converges to t* from above as the ray spacing shrinks
    (adjacent rays cross at t* + O(h^2) for a smooth profile).
    """
    x0 = problem.ray_labels(n_rays)
    u = np.asarray(problem.u0(x0), dtype=float)
    t = 0.0
    while t < t_max:
        t += dt
        pos = x0 + u * t
        if problem.periodic:
            # Adjacent spacing including the wrap-around pair.
            gaps = np.diff(pos, append=pos[0] + problem.length)
        else:
            gaps = np.diff(pos)
        if np.any(gaps <= 0.0):
            return t
    return None


def burgers_report(
    problem: BurgersProblem,
    n_rays: int = 1024,
    t_end: float | None = None,
    crossing_dt: float = 1e-4,
) -> dict:
    """End-to-end validation summary for one Burgers problem.

    Compares the closed-form shock time against the ray-crossing search
    and reports the fan-differencing deviation up to t_end (default:
    halfway to the shock, or 0.5 when no shock forms).
    """
    t_star = burgers_shock_time(problem)
    if t_end is None:
        t_end = 0.5 * t_star if t_star is not None else 0.5
    crossing = burgers_crossing_time(problem, n_rays=n_rays, dt=crossing_dt)
    times = np.linspace(0.0, t_end, 5)[1:]
    deviation = burgers_fan_validate(problem, n_rays, times)
    return {
        "profile": problem.name,
        "n_rays": n_rays,
        "t_end": t_end,
        "t_star_closed_form": t_star,
        "t_star_crossing": crossing,
        "crossing_dt": crossing_dt,
        "mu_max_rel_deviation": deviation,
    }


def write_burgers_report(report: dict, path: str) -> None:
    """burgers_report.json."""
    write_json(path, report)


def write_characteristics(
    problem: BurgersProblem,
    path: str,
    n_rays: int = 33,
    t_max: float | None = None,
    n_times: int = 65,
) -> None:
    """characteristics.csv: straight-line ray positions x(t; x0).

    Defaults cover slightly past the shock time so the crossing is visible;
    positions stay well defined (characteristics are global lines).
    """
    if t_max is None:
        t_star = burgers_shock_time(problem)
        t_max = 1.25 * t_star if t_star is not None else 1.0
    x0 = problem.ray_labels(n_rays)
    times = np.linspace(0.0, t_max, n_times)
    pos = np.stack([burgers_positions(problem, x0, float(t)) for t in times])
    write_columns_csv(
        path,
        {
            "t": np.repeat(times, n_rays),
            "x0": np.tile(x0, n_times),
            "x": pos.ravel(),
        },
    )
