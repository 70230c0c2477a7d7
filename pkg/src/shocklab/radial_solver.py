"""Explicit radial solver for the quasilinear wave equation.

The equation -c^(-2)*dtt_phi + drr_phi + (2/r)*dr_phi = 0 with
c = (1 + 3*g2*(dt_phi)**2)^(-1/2) is evolved in first-order form

    dt_p = c**2 * (dr_q + 2*q/r),    dt_q = dr_p,    dt_phi = p,

with p = dt_phi and q = dr_phi, using the classical four-stage Runge-Kutta
step over fourth-order centered differences. The pulse crosses r0/delta
wavelengths of flight, so accumulated phase error must stay below one
radian over that distance; a second-order scheme smears the pulse by O(1)
and swamps the along-ray conservation diagnostics. The four-stage operator
is mildly dissipative at the grid scale (|G| < 1 on the imaginary axis),
which keeps the centered stencil stable without a global filter; a tiny
gated fourth-difference viscosity handles the steepening front.

The grid is fixed; the active region is a masked window whose left edge
tracks the trivial interior cone. Cells left of the mask are never written,
so the trivial region is preserved bitwise. Boundary cells hold the trivial
interior solution on the left and the frozen initial exterior tail on the
right.
"""
from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from .errors import (
    CflCollapseError,
    HyperbolicityLossError,
    InvalidModelError,
    ResolutionError,
)
from .io_utils import write_columns_csv, write_json
from .seed_profiles import HYPERBOLICITY_FLOOR, ModelParams

if TYPE_CHECKING:  # pragma: no cover - type-only import, avoids a cycle
    from .data_builder import InitialData
    from .optical_geometry import CharacteristicFan
    from .seed_profiles import SeedProfile

__all__ = [
    "GridSpec",
    "FieldState",
    "Snapshot",
    "Trajectory",
    "wave_speed",
    "cfl_dt",
    "step",
    "evolve",
    "write_trajectory",
    "write_run_meta",
]

#: Default coefficient of the gated fourth-difference viscosity.
VISCOSITY_EPS4 = 1e-3

#: Viscosity gate: engaged where |p[j+1]-p[j]| exceeds this fraction of max|p|.
VISCOSITY_THRESHOLD = 0.05


@dataclass(frozen=True)
class GridSpec:
    """Uniform radial grid: n_cells intervals between r_min and r_max.

    The four-stage stepper is linearly stable for cfl up to ~2; the default
    keeps a comfortable margin for the quasilinear speed variation.
    """

    r_min: float
    r_max: float
    n_cells: int
    cfl: float = 1.2

    def __post_init__(self) -> None:
        if not (0.0 < self.r_min < self.r_max):
            raise InvalidModelError(f"grid range [{self.r_min}, {self.r_max}] invalid")
        if self.n_cells < 512:
            raise ResolutionError(f"n_cells = {self.n_cells} must be >= 512")
        if not (0.0 < self.cfl <= 1.8):
            raise InvalidModelError(f"cfl = {self.cfl} must lie in (0, 1.8]")

    @property
    def dr(self) -> float:
        return (self.r_max - self.r_min) / self.n_cells

    def nodes(self) -> np.ndarray:
        return self.r_min + self.dr * np.arange(self.n_cells + 1)


@dataclass
class FieldState:
    """Radial snapshot of (phi, dt_phi, dr_phi) at time t.

    ``i_active`` is the left index of the masked active window; nodes to its
    left are untouched by the stepper (exactly preserved).
    """

    t: float
    grid: GridSpec
    p: np.ndarray
    q: np.ndarray
    phi: np.ndarray
    g2: float
    i_active: int = 0

    def wave_speed_field(self) -> np.ndarray:
        a = 1.0 + 3.0 * self.g2 * self.p**2
        # Inverted comparison so NaN fields also raise instead of propagating.
        ok = a > HYPERBOLICITY_FLOOR
        if not ok.all():
            j = int(np.argmax(~ok))
            r = self.grid.nodes()[j]
            raise HyperbolicityLossError(self.t, float(r), float(self.p[j]))
        return 1.0 / np.sqrt(a)

    def copy(self) -> "FieldState":
        return FieldState(
            t=self.t,
            grid=self.grid,
            p=self.p.copy(),
            q=self.q.copy(),
            phi=self.phi.copy(),
            g2=self.g2,
            i_active=self.i_active,
        )


def wave_speed(p: float | np.ndarray, g2: float) -> tuple[np.ndarray, np.ndarray]:
    """Wave speed c = (1+3*g2*p**2)^(-1/2) and dc2/drho at rho = p**2."""
    a = 1.0 + 3.0 * g2 * np.asarray(p, dtype=float) ** 2
    # Inverted comparison so NaN inputs also raise instead of propagating.
    if not np.all(a > HYPERBOLICITY_FLOOR):
        bad = ~np.atleast_1d(a > HYPERBOLICITY_FLOOR)
        pbad = np.atleast_1d(np.asarray(p, dtype=float))[np.argmax(bad)]
        raise InvalidModelError(
            f"hyperbolicity violated: 1 + 3*g2*p**2 <= {HYPERBOLICITY_FLOOR} at p = {pbad:.6g}"
        )
    c = 1.0 / np.sqrt(a)
    dc2_drho = -3.0 * g2 * c**4
    return c, dc2_drho


def cfl_dt(state: FieldState, grid: GridSpec) -> float:
    """Stable explicit step: cfl * dr / max(c) over the grid."""
    c = state.wave_speed_field()
    return grid.cfl * grid.dr / float(np.max(c))


# ---------------------------------------------------------------------------
# Stepping kernel
# ---------------------------------------------------------------------------


class _Stepper:
    """Four-stage Runge-Kutta kernel over a masked window.

    Operates on caller-owned node arrays; writes only nodes in
    [max(i_active, 2), n-2]. The two leftmost and two rightmost nodes are
    boundary cells (trivial interior / frozen exterior tail) and must be
    prepared by the caller once; they double as the stencil halo, so stage
    states reuse them unchanged.
    """

    def __init__(
        self,
        grid: GridSpec,
        g2: float,
        eps4: float = VISCOSITY_EPS4,
        threshold: float = VISCOSITY_THRESHOLD,
    ) -> None:
        self.grid = grid
        self.g2 = g2
        self.eps4 = eps4
        self.threshold = threshold
        self.r = grid.nodes()
        self.inv_r = 1.0 / self.r
        self.inv_12dr = 1.0 / (12.0 * grid.dr)

    def _check_hyperbolic(self, t: float, p: np.ndarray, lo: int) -> None:
        a = 1.0 + 3.0 * self.g2 * p[lo:] ** 2
        j = int(np.argmin(a))
        # Written so that NaN fails the comparison and raises too.
        if not (a[j] > HYPERBOLICITY_FLOOR):
            raise HyperbolicityLossError(t, float(self.r[lo + j]), float(p[lo + j]))

    def _rhs(self, p: np.ndarray, q: np.ndarray, a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
        """dt_p, dt_q on nodes [a, b]; stencils reach two nodes past each end."""
        m = b - a + 1
        ps = p[a - 2 : b + 3]
        qs = q[a - 2 : b + 3]
        dp = (ps[:m] - 8.0 * ps[1 : m + 1] + 8.0 * ps[3 : m + 3] - ps[4 : m + 4]) * self.inv_12dr
        dq = (qs[:m] - 8.0 * qs[1 : m + 1] + 8.0 * qs[3 : m + 3] - qs[4 : m + 4]) * self.inv_12dr
        c2 = 1.0 / (1.0 + 3.0 * self.g2 * ps[2 : m + 2] ** 2)
        dt_p = c2 * (dq + 2.0 * qs[2 : m + 2] * self.inv_r[a : b + 1])
        return dt_p, dp

    def advance(
        self,
        t: float,
        dt: float,
        i_active: int,
        p: np.ndarray,
        q: np.ndarray,
        phi: np.ndarray,
        pn: np.ndarray,
        qn: np.ndarray,
        phin: np.ndarray,
    ) -> None:
        n = p.shape[0] - 1
        a = max(i_active, 2)
        b = n - 2
        self._check_hyperbolic(t, p, max(i_active - 1, 0))
        sl = slice(a, b + 1)

        # Stage states share the off-window content of (p, q), which is
        # static there (trivial interior, masked region, frozen tail).
        ps = p.copy()
        qs = q.copy()
        hdt = 0.5 * dt

        k1p, k1q = self._rhs(p, q, a, b)
        ps[sl] = p[sl] + hdt * k1p
        qs[sl] = q[sl] + hdt * k1q
        k2p, k2q = self._rhs(ps, qs, a, b)
        p2 = ps[sl].copy()
        ps[sl] = p[sl] + hdt * k2p
        qs[sl] = q[sl] + hdt * k2q
        k3p, k3q = self._rhs(ps, qs, a, b)
        p3 = ps[sl].copy()
        ps[sl] = p[sl] + dt * k3p
        qs[sl] = q[sl] + dt * k3q
        k4p, k4q = self._rhs(ps, qs, a, b)

        sdt = dt / 6.0
        pn[sl] = p[sl] + sdt * (k1p + 2.0 * (k2p + k3p) + k4p)
        qn[sl] = q[sl] + sdt * (k1q + 2.0 * (k2q + k3q) + k4q)
        # dt_phi = p integrated with the same quadrature (p2, p3 are the
        # midpoint-stage values of p, ps now holds the end-stage value).
        phin[sl] = phi[sl] + sdt * (p[sl] + 2.0 * (p2 + p3) + ps[sl])

        self._apply_viscosity(pn, qn, a, b)
        self._check_hyperbolic(t + dt, pn, max(i_active - 1, 0))

    def _apply_viscosity(self, pn: np.ndarray, qn: np.ndarray, a: int, b: int) -> None:
        if self.eps4 <= 0.0:
            return
        scale = float(np.max(np.abs(pn[a : b + 1]))) if b >= a else 0.0
        if scale == 0.0:
            return
        jump = np.abs(np.diff(pn[a - 1 : b + 2]))
        gate = jump > self.threshold * scale
        if not gate.any():
            return
        # Restrict the fourth-difference pass to the gated neighborhood.
        idx = np.nonzero(gate)[0]
        lo = max(a, a - 1 + int(idx[0]) - 2)
        hi = min(b, a - 1 + int(idx[-1]) + 1 + 2)
        w = np.zeros(hi - lo + 1)
        # A face jump gates both adjacent nodes.
        for off in (0, 1):
            js = np.clip(a - 1 + idx + off, lo, hi) - lo
            w[js] = 1.0
        for u in (pn, qn):
            seg = u[lo - 2 : hi + 3]
            d4 = seg[:-4] - 4.0 * seg[1:-3] + 6.0 * seg[2:-2] - 4.0 * seg[3:-1] + seg[4:]
            u[lo : hi + 1] -= self.eps4 * w * d4


def step(state: FieldState, dt: float) -> FieldState:
    """Single four-stage Runge-Kutta step; boundary cells held fixed.

    Functional wrapper over the kernel used by evolve(); allocates the new
    state. The first/last two nodes keep their current values (trivial
    interior on the left, frozen exterior tail on the right).
    """
    stepper = _Stepper(state.grid, state.g2)
    pn, qn, phin = state.p.copy(), state.q.copy(), state.phi.copy()
    stepper.advance(state.t, dt, state.i_active, state.p, state.q, state.phi, pn, qn, phin)
    return FieldState(
        t=state.t + dt,
        grid=state.grid,
        p=pn,
        q=qn,
        phi=phin,
        g2=state.g2,
        i_active=state.i_active,
    )


# ---------------------------------------------------------------------------
# Trajectory recording
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Snapshot:
    """Windowed copy of the fields around the characteristic fan."""

    t: float
    j0: int  # grid index of the first stored node
    r: np.ndarray
    p: np.ndarray
    q: np.ndarray
    phi: np.ndarray


@dataclass
class Trajectory:
    """Recorded output of one evolve() run."""

    params: ModelParams
    seed: "SeedProfile"
    grid: GridSpec
    t0: float
    t_final: float
    stop_reason: str
    steps: int
    wall_time: float
    mu_min_t: np.ndarray
    mu_min: np.ndarray
    fan: "CharacteristicFan"
    snapshots: list[Snapshot]
    final_state: FieldState

    def snapshot_times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


def _readonly_view(state: FieldState) -> FieldState:
    ro = FieldState(
        t=state.t,
        grid=state.grid,
        p=state.p.view(),
        q=state.q.view(),
        phi=state.phi.view(),
        g2=state.g2,
        i_active=state.i_active,
    )
    for arr in (ro.p, ro.q, ro.phi):
        arr.flags.writeable = False
    return ro


def evolve(
    data: "InitialData",
    t_end: float,
    stop_mu: float = 0.05,
    observers: Sequence[Callable[[FieldState], None]] = (),
    *,
    n_rays: int = 33,
    snap_every: int | None = None,
    store_every: int = 4,
    eps4: float = VISCOSITY_EPS4,
    vis_threshold: float = VISCOSITY_THRESHOLD,
    dt_min_factor: float = 1e-8,
) -> Trajectory:
    """Evolve initial data toward t_end, stopping early near shock.

    Marches the fields from t = -r0, tracing the incoming characteristic fan
    online at the solver step (the fan feeds the stop criterion), recording
    windowed snapshots and optical samples at the measurement cadence, and
    invoking observers (read-only state) at that cadence. Halts at t_end or
    as soon as the fan minimum of the inverse density drops below stop_mu,
    whichever comes first.
    """
    from .optical_geometry import FanTracer

    if not t_end <= -1.0:
        raise InvalidModelError(f"t_end = {t_end} must be <= -1")
    if not (0.0 < stop_mu < 0.5):
        raise InvalidModelError(f"stop_mu = {stop_mu} must lie in (0, 0.5)")

    params = data.params
    grid = data.grid
    t0 = -params.r0
    if t_end <= t0:
        raise InvalidModelError(f"t_end = {t_end} must exceed the start time {t0}")

    wall_start = _time.perf_counter()
    r_nodes = grid.nodes()
    n = grid.n_cells
    dr = grid.dr

    # Double buffers; the masked region is identical in both by construction.
    p, q, phi = data.dtphi.copy(), data.drphi.copy(), data.phi.copy()
    pn, qn, phin = p.copy(), q.copy(), phi.copy()

    stepper = _Stepper(grid, params.g2, eps4=eps4, threshold=vis_threshold)
    tracer = FanTracer(params, n_rays=n_rays)

    t = t0
    c_prev = _speed(p, params.g2, t, r_nodes)
    tracer.start(t, r_nodes, c_prev)
    dt0 = grid.cfl * dr / float(np.max(c_prev))
    dt_min = dt_min_factor * dt0
    if snap_every is None:
        est_steps = (t_end - t0) / dt0
        snap_every = max(1, int(round(est_steps / 2400.0)))

    # Left mask: the trivial cone sits at r = -t; keep a safety buffer.
    mask_buffer = max(0.25 * params.delta + 8.0 * dr, 0.05)

    def active_index(tv: float) -> int:
        edge = -tv - mask_buffer
        return int(np.clip(math.floor((edge - grid.r_min) / dr), 0, n - 4))

    i_active = active_index(t) if data.pulse_like else 0

    mu_t: list[float] = []
    mu_v: list[float] = []
    snapshots: list[Snapshot] = []

    def record_mu(tv: float, mv: float) -> None:
        mu_t.append(tv)
        mu_v.append(mv)

    def take_snapshot(tv: float) -> None:
        lo_r, hi_r = tracer.window()
        pad = max(0.1 * params.delta, 8.0 * dr)
        j0 = int(np.clip(math.floor((lo_r - pad - grid.r_min) / dr), 0, n))
        j1 = int(np.clip(math.ceil((hi_r + pad - grid.r_min) / dr), 0, n)) + 1
        snapshots.append(
            Snapshot(
                t=tv,
                j0=j0,
                r=r_nodes[j0:j1].copy(),
                p=p[j0:j1].copy(),
                q=q[j0:j1].copy(),
                phi=phi[j0:j1].copy(),
            )
        )

    def notify_observers(state: FieldState) -> None:
        ro = _readonly_view(state)
        for obs in observers:
            obs(ro)

    state = FieldState(t=t, grid=grid, p=p, q=q, phi=phi, g2=params.g2, i_active=i_active)
    tracer.measure(t, r_nodes, p, q, c_prev)
    record_mu(t, tracer.mu_min_last)
    take_snapshot(t)
    notify_observers(state)

    steps = 0
    meas_count = 0
    stop_reason = "t_end"
    while True:
        c_max = float(np.max(c_prev[i_active:])) if i_active else float(np.max(c_prev))
        dt_stable = grid.cfl * dr / c_max
        if dt_stable < dt_min:
            raise CflCollapseError(t, dt_stable)
        last = t + dt_stable >= t_end - 1e-12 * abs(t_end)
        dt = min(dt_stable, t_end - t)

        stepper.advance(t, dt, i_active, p, q, phi, pn, qn, phin)
        p, pn = pn, p
        q, qn = qn, q
        phi, phin = phin, phi
        t += dt
        steps += 1

        c_new = _speed(p, params.g2, t, r_nodes)
        tracer.advance_rays(dt, r_nodes, c_prev, c_new=c_new)
        c_prev = c_new
        if data.pulse_like:
            i_active = active_index(t)

        mu_now = tracer.step_transport(t, r_nodes, p)
        record_mu(t, mu_now)

        stopped = mu_now < stop_mu
        if stopped:
            stop_reason = "stop_mu"
        if stopped or last or steps % snap_every == 0:
            state = FieldState(
                t=t, grid=grid, p=p, q=q, phi=phi, g2=params.g2, i_active=i_active
            )
            tracer.measure(t, r_nodes, p, q, c_new)
            meas_count += 1
            if stopped or last or meas_count % store_every == 0:
                take_snapshot(t)
            notify_observers(state)
        if stopped or last:
            break

    fan = tracer.finish()
    return Trajectory(
        params=params,
        seed=data.seed,
        grid=grid,
        t0=t0,
        t_final=t,
        stop_reason=stop_reason,
        steps=steps,
        wall_time=_time.perf_counter() - wall_start,
        mu_min_t=np.array(mu_t),
        mu_min=np.array(mu_v),
        fan=fan,
        snapshots=snapshots,
        final_state=FieldState(
            t=t, grid=grid, p=p.copy(), q=q.copy(), phi=phi.copy(), g2=params.g2, i_active=i_active
        ),
    )


def _speed(p: np.ndarray, g2: float, t: float, r: np.ndarray) -> np.ndarray:
    a = 1.0 + 3.0 * g2 * p**2
    j = int(np.argmin(a))
    # Inverted comparison so NaN fields also raise instead of propagating.
    if not (a[j] > HYPERBOLICITY_FLOOR):
        raise HyperbolicityLossError(t, float(r[j]), float(p[j]))
    return 1.0 / np.sqrt(a)


def write_trajectory(traj: Trajectory, path: str, max_snapshots: int = 64) -> None:
    """trajectory.csv: one row per (snapshot time, stored node).

    Snapshots are evenly thinned to at most max_snapshots (keeping the
    first and last); the full cadence is measurement-internal and would
    emit hundreds of MB at acceptance resolutions.
    """
    snaps = traj.snapshots
    if len(snaps) > max_snapshots:
        idx = np.unique(np.linspace(0, len(snaps) - 1, max_snapshots).round().astype(int))
        snaps = [snaps[i] for i in idx]
    ts, rs, ps, qs, phis = [], [], [], [], []
    for snap in snaps:
        ts.append(np.full(snap.r.size, snap.t))
        rs.append(snap.r)
        ps.append(snap.p)
        qs.append(snap.q)
        phis.append(snap.phi)
    write_columns_csv(
        path,
        {
            "t": np.concatenate(ts),
            "r": np.concatenate(rs),
            "p": np.concatenate(ps),
            "q": np.concatenate(qs),
            "phi": np.concatenate(phis),
        },
    )


def write_run_meta(traj: Trajectory, path: str) -> None:
    """Run metadata JSON: stop reason, final time, final fan compression."""
    write_json(
        path,
        {
            "t0": traj.t0,
            "t_final": traj.t_final,
            "stop_reason": traj.stop_reason,
            "steps": traj.steps,
            "wall_time": traj.wall_time,
            "mu_min_final": float(traj.mu_min[-1]) if traj.mu_min.size else 1.0,
        },
    )
