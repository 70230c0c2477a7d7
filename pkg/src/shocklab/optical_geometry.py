"""Characteristic fan tracing and acoustic-geometry diagnostics.

Incoming null rays dr/dt = -c(t, r) are labeled by their initial offset
u = r(-r0) - r0 inside the pulse annulus. The inverse foliation density

    mu(t, u) = c * kappa,    kappa = dr/du at fixed t,

measures ray compression: mu -> 0 is shock formation. kappa comes from
differencing ray positions with respect to the (uniform) label grid; the
same differencing path validates against the exact Burgers fan.

mu also satisfies a transport equation along the rays,

    L_bar(mu) = m + mu * e,
    m = -(1/2) * (dc^2/drho) * T(rho),   T = kappa * d/dr,
    e = (1/(2c^2)) * (dc^2/drho) * L_bar(rho),      rho = (dt_phi)^2,

integrated here with Heun steps as an independent cross-check of the
geometric measurement. The ingoing null second fundamental form is
tracked the same way: directly as trchib = -2c/r and through its
transport equation d/dt(trchib) = e*trchib - (1/2)*trchib**2 along rays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import FanResolutionError, InterpolationRangeError
from .io_utils import write_columns_csv
from .seed_profiles import ModelParams

if TYPE_CHECKING:  # pragma: no cover
    from .radial_solver import Trajectory

__all__ = [
    "label_derivative",
    "interp4_uniform",
    "mu_from_positions",
    "slice_quantities",
    "CharacteristicFan",
    "FanTracer",
    "trace_fan",
    "inverse_density",
    "transport_mu",
    "trchib_diagnostics",
    "TrchibDiagnostics",
    "write_fan",
]

#: Fraction of the pulse width traced beyond u = delta. Buffer rays give the
#: reported edge rays full difference stencils and size the storage window.
BUFFER_FRACTION = 0.2


def label_derivative(
    values: np.ndarray,
    h: float,
    *,
    periodic_jump: float | None = None,
    order: int = 4,
) -> np.ndarray:
    """d(values)/d(label) on a uniform label grid of spacing h.

    Interior points use the five-point fourth-order stencil when available
    (order=4, at least five points), otherwise second-order centered.
    Boundary points use one-sided second-order stencils; the points next to
    them fall back to centered second order. With ``periodic_jump`` the
    label space is treated as periodic and values wrap with the given
    increment per period (0 for plain periodic fields, the domain length
    for positions).

    Works on the last axis of any array shape.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[-1]
    if n < 3:
        raise FanResolutionError(f"need at least 3 samples to difference, got {n}")
    if h <= 0.0 or not math.isfinite(h):
        raise FanResolutionError(f"label spacing h = {h} must be positive")

    if periodic_jump is not None:
        ext = np.concatenate(
            [v[..., -2:] - periodic_jump, v, v[..., :2] + periodic_jump], axis=-1
        )
        if order >= 4 and n >= 5:
            return (
                ext[..., : n] - 8.0 * ext[..., 1 : n + 1]
                + 8.0 * ext[..., 3 : n + 3] - ext[..., 4 : n + 4]
            ) / (12.0 * h)
        return (ext[..., 3 : n + 3] - ext[..., 1 : n + 1]) / (2.0 * h)

    d = np.empty_like(v)
    if order >= 4 and n >= 5:
        d[..., 2:-2] = (
            v[..., :-4] - 8.0 * v[..., 1:-3] + 8.0 * v[..., 3:-1] - v[..., 4:]
        ) / (12.0 * h)
        d[..., 1] = (v[..., 2] - v[..., 0]) / (2.0 * h)
        d[..., -2] = (v[..., -1] - v[..., -3]) / (2.0 * h)
    else:
        d[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2.0 * h)
    d[..., 0] = (-3.0 * v[..., 0] + 4.0 * v[..., 1] - v[..., 2]) / (2.0 * h)
    d[..., -1] = (3.0 * v[..., -1] - 4.0 * v[..., -2] + v[..., -3]) / (2.0 * h)
    return d


def interp4_uniform(x0: float, dx: float, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Four-point Lagrange sampling of nodal values on a uniform grid.

    Order-4 accurate, matching the solver stencils; linear sampling here
    would floor every label-space derivative of the fan at O(dx**2), which
    dominates the expansion residuals once the rays compress. Stencils are
    clamped at the window edges (one-sided cubic).
    """
    v = np.asarray(values, dtype=float)
    s = (np.asarray(x, dtype=float) - x0) / dx
    j = np.clip(np.floor(s).astype(np.int64) - 1, 0, v.shape[-1] - 4)
    u = s - (j + 1)
    a, b = u - 1.0, u - 2.0
    w0 = -u * a * b / 6.0
    w1 = (u + 1.0) * a * b / 2.0
    w2 = -(u + 1.0) * u * b / 2.0
    w3 = (u + 1.0) * u * a / 6.0
    return w0 * v[j] + w1 * v[j + 1] + w2 * v[j + 2] + w3 * v[j + 3]


def mu_from_positions(
    positions: np.ndarray,
    h: float,
    weights: np.ndarray | float,
    *,
    periodic_jump: float | None = None,
    order: int = 4,
) -> np.ndarray:
    """Inverse density mu = weight * d(position)/d(label).

    The single differencing path shared by the wave fan (weight = c at the
    ray) and the Burgers fan (weight fixed per ray by the initial slope).
    """
    return weights * label_derivative(
        positions, h, periodic_jump=periodic_jump, order=order
    )


def slice_quantities(
    r: np.ndarray, p: np.ndarray, q: np.ndarray, g2: float
) -> dict[str, np.ndarray]:
    """Pointwise derived fields on one time slice (nodal arrays).

    Radial derivatives by second-order differencing of the given window;
    time derivatives eliminated through the evolution equations, so no
    neighboring slice is needed.
    """
    c2 = 1.0 / (1.0 + 3.0 * g2 * p**2)
    c = np.sqrt(c2)
    drp = np.gradient(p, r, edge_order=2)
    drq = np.gradient(q, r, edge_order=2)
    dtp = c2 * (drq + 2.0 * q / r)
    dtq = drp
    lbar_rho = 2.0 * p * (dtp - c * drp)
    return {
        "c": c,
        "drp": drp,
        "drq": drq,
        "dtp": dtp,
        "dtq": dtq,
        "lbar_rho": lbar_rho,
        # m = -(1/2)(dc^2/drho) T(rho) with T = kappa*d/dr; kappa applied later
        "m_per_kappa": 3.0 * g2 * c**4 * p * drp,
        "e": -1.5 * g2 * c2 * lbar_rho,
    }


# ---------------------------------------------------------------------------
# Fan records
# ---------------------------------------------------------------------------


@dataclass
class CharacteristicFan:
    """Stacked per-measurement optical samples, one column per ray.

    Arrays are shaped (n_times, n_total); the first ``n_report`` columns
    carry labels in [0, delta] and enter statistics, the rest are buffer
    rays. ``lpsi`` is the outgoing derivative of psi0 = dt_phi in the
    shock-adapted normalization (kappa/c)*(dt + c*dr), which stays regular
    as mu -> 0; ``lpsi_raw`` is the bare (dt + c*dr) psi0.
    """

    params: ModelParams
    labels: np.ndarray
    n_report: int
    h: float
    t: np.ndarray
    r: np.ndarray
    c: np.ndarray
    kappa: np.ndarray
    mu_geom: np.ndarray
    mu_trans: np.ndarray
    lb_mu: np.ndarray
    m_src: np.ndarray
    e_src: np.ndarray
    trchib: np.ndarray
    trchib_trans: np.ndarray
    trchib_prime: np.ndarray
    lpsi: np.ndarray
    lpsi_raw: np.ndarray
    tpsi: np.ndarray
    psi: np.ndarray
    truncated: np.ndarray  # bool per ray: left the stored field window
    first_crossing_t: float | None

    @property
    def u_report(self) -> np.ndarray:
        return self.labels[: self.n_report]

    def index_at(self, t: float) -> int:
        """Index of the recorded time nearest to t; errors outside coverage."""
        if not (self.t[0] - 1e-9 <= t <= self.t[-1] + 1e-9):
            raise InterpolationRangeError(
                f"t = {t} outside recorded fan range [{self.t[0]}, {self.t[-1]}]"
            )
        return int(np.argmin(np.abs(self.t - t)))

    def mu_min_series(self) -> tuple[np.ndarray, np.ndarray]:
        """min(mu_geom over reported rays, 1) at each measurement time.

        Rays that ever left the stored field window are excluded: their
        positions are frozen at truncation and carry no geometry.
        """
        ok = ~self.truncated[: self.n_report]
        if not ok.any():
            return self.t, np.ones_like(self.t)
        m = np.min(self.mu_geom[:, : self.n_report][:, ok], axis=1)
        return self.t, np.minimum(m, 1.0)


class FanTracer:
    """Online ray tracer advanced in lockstep with the field solver.

    Rays move by one midpoint (RK2) step per solver step, interpolating the
    wave speed linearly in r from the two surrounding field levels. Full
    optical samples are taken at the measurement cadence; the transported
    checks and a cheap kappa-differencing minimum (feeding the shock stop
    criterion) advance every solver step through step_transport.
    """

    def __init__(
        self,
        params: ModelParams,
        n_rays: int = 33,
        buffer_frac: float = BUFFER_FRACTION,
    ) -> None:
        if n_rays < 3:
            raise FanResolutionError(f"n_rays = {n_rays}; need at least 3")
        self.params = params
        self.n_report = n_rays
        self.h = params.delta / (n_rays - 1)
        n_buf = int(math.ceil(buffer_frac * params.delta / self.h - 1e-12))
        self.n_total = n_rays + n_buf
        self.labels = self.h * np.arange(self.n_total)
        self.pos = np.array([])
        self.truncated = np.zeros(self.n_total, dtype=bool)
        self.first_crossing_t: float | None = None
        self.mu_min_last = 1.0
        self._rows: list[dict[str, np.ndarray]] = []
        self._times: list[float] = []
        self._prev: dict[str, np.ndarray] | None = None
        self._t_prev = 0.0
        self.mu_trans = np.array([])
        self.tch_trans = np.array([])

    # -- ray kinematics ----------------------------------------------------

    def start(self, t0: float, r_nodes: np.ndarray, c: np.ndarray) -> None:
        self.pos = self.params.r0 + self.labels.copy()
        self._check_window(r_nodes)
        c0 = interp4_uniform(float(r_nodes[0]), float(r_nodes[1] - r_nodes[0]), c, self.pos)
        self.mu_trans = c0.copy()  # mu(-r0) = c: kappa = 1 on the data slice
        self.tch_trans = -2.0 * c0 / self.pos
        self.mu_min_last = float(min(np.min(c0[: self.n_report]), 1.0))

    def _check_window(self, r_nodes: np.ndarray) -> None:
        lo, hi = r_nodes[0], r_nodes[-1]
        newly = (~self.truncated) & ((self.pos < lo) | (self.pos > hi))
        if newly.any():
            self.truncated |= newly

    def advance_rays(
        self,
        dt: float,
        r_prev: np.ndarray,
        c_prev: np.ndarray,
        r_new: np.ndarray | None = None,
        c_new: np.ndarray | None = None,
    ) -> None:
        """One midpoint step dr/dt = -c between two field levels."""
        if r_new is None:
            r_new = r_prev
        if c_new is None:
            c_new = c_prev
        act = ~self.truncated
        pos = self.pos
        dr = float(r_prev[1] - r_prev[0])
        x0 = float(r_prev[0])
        k1 = -interp4_uniform(x0, dr, c_prev, pos[act])
        rh = pos[act] + 0.5 * dt * k1
        ch = 0.5 * (
            interp4_uniform(x0, dr, c_prev, rh)
            + interp4_uniform(float(r_new[0]), float(r_new[1] - r_new[0]), c_new, rh)
        )
        pos[act] = pos[act] - dt * ch
        self._check_window(r_new)

    def window(self) -> tuple[float, float]:
        return float(np.min(self.pos)), float(np.max(self.pos))

    def step_transport(self, t: float, r_nodes: np.ndarray, p: np.ndarray) -> float:
        """Advance the transported checks one solver step; return the fan mu min.

        The transported inverse density and ingoing expansion take one Heun
        step per solver step, with sources re-measured from the current
        fields at the ray positions, so the transported route carries
        solver-cadence accuracy all the way to collapse instead of the much
        coarser measurement cadence. Also refreshes the quick
        kappa-differencing minimum consumed by the stop criterion.
        """
        if self._prev is None:
            raise RuntimeError("step_transport needs an initial measure() sample")
        dr = float(r_nodes[1] - r_nodes[0])
        pos = self.pos
        g2 = self.params.g2

        pi = interp4_uniform(float(r_nodes[0]), dr, p, pos)
        c = 1.0 / np.sqrt(1.0 + 3.0 * g2 * pi**2)
        rho = pi**2
        kappa = label_derivative(pos, self.h)
        t_rho = label_derivative(rho, self.h)
        m = 1.5 * g2 * c**4 * t_rho

        dt = t - self._t_prev
        lbar_rho = (rho - self._prev["rho"]) / dt
        e = -1.5 * g2 * c**2 * lbar_rho

        fm0 = self._prev["m"] + self.mu_trans * self._prev["e"]
        mu_star = self.mu_trans + dt * fm0
        fm1 = m + mu_star * e
        self.mu_trans = self.mu_trans + 0.5 * dt * (fm0 + fm1)

        x0 = self.tch_trans
        ft0 = self._prev["e"] * x0 - 0.5 * x0**2
        x_star = x0 + dt * ft0
        ft1 = e * x_star - 0.5 * x_star**2
        self.tch_trans = x0 + 0.5 * dt * (ft0 + ft1)

        self._prev = {"m": m, "e": e, "rho": rho}
        self._t_prev = t

        mu = (c * kappa)[: self.n_report]
        ok = ~self.truncated[: self.n_report]
        val = float(np.min(mu[ok])) if ok.any() else 1.0
        self.mu_min_last = min(val, 1.0)
        return self.mu_min_last

    # -- measurement -------------------------------------------------------

    def measure(
        self,
        t: float,
        r_nodes: np.ndarray,
        p: np.ndarray,
        q: np.ndarray,
        c_full: np.ndarray | None = None,
    ) -> None:
        """Take a full optical sample and advance the transported checks.

        Radial derivatives at the rays are taken in label space through the
        exact chain rule T(f) = kappa * dr_f = du_f along the slice, which
        stays well conditioned as the fan compresses (fields are smooth in
        the ray label even when their r-gradients blow up like 1/kappa).
        L_bar(rho) is the along-ray time difference of rho between
        transport steps (solver cadence when driven in lockstep with the
        field solver); only the first sample, where the data are smooth,
        falls back to grid differencing for it.
        """
        del c_full  # wave speed is recomputed from p at the rays
        jlo = max(int(np.searchsorted(r_nodes, np.min(self.pos))) - 8, 0)
        jhi = min(int(np.searchsorted(r_nodes, np.max(self.pos))) + 8, r_nodes.size - 1)
        if jhi - jlo < 4:
            raise InterpolationRangeError(
                f"field window [{jlo}, {jhi}] too narrow around the fan at t = {t}"
            )
        rw = r_nodes[jlo : jhi + 1]
        dr = float(r_nodes[1] - r_nodes[0])
        pos = self.pos
        g2 = self.params.g2

        pi = interp4_uniform(rw[0], dr, p[jlo : jhi + 1], pos)
        qi = interp4_uniform(rw[0], dr, q[jlo : jhi + 1], pos)
        c = 1.0 / np.sqrt(1.0 + 3.0 * g2 * pi**2)
        rho = pi**2

        kappa = label_derivative(pos, self.h)
        mu_geom = c * kappa
        t_rho = label_derivative(rho, self.h)  # T(rho) = kappa * dr_rho
        t_psi = label_derivative(pi, self.h)  # T(psi0)
        du_q = label_derivative(qi, self.h)

        # m = -(1/2) (dc^2/drho) T(rho),  dc^2/drho = -3 g2 c^4
        m = 1.5 * g2 * c**4 * t_rho

        if self._prev is None:
            fields = slice_quantities(rw, p[jlo : jhi + 1], q[jlo : jhi + 1], g2)
            e = interp4_uniform(rw[0], dr, fields["e"], pos)
        elif t == self._t_prev:
            # step_transport already advanced to this level; just record it.
            e = self._prev["e"]
        else:
            dt = t - self._t_prev
            lbar_rho = (rho - self._prev["rho"]) / dt
            e = -1.5 * g2 * c**2 * lbar_rho

            fm0 = self._prev["m"] + self.mu_trans * self._prev["e"]
            mu_star = self.mu_trans + dt * fm0
            fm1 = m + mu_star * e
            self.mu_trans = self.mu_trans + 0.5 * dt * (fm0 + fm1)

            x0 = self.tch_trans
            ft0 = self._prev["e"] * x0 - 0.5 * x0**2
            x_star = x0 + dt * ft0
            ft1 = e * x_star - 0.5 * x_star**2
            self.tch_trans = x0 + 0.5 * dt * (ft0 + ft1)

        self._prev = {"m": m, "e": e, "rho": rho}
        self._t_prev = t

        if self.first_crossing_t is None and np.any(np.diff(pos) <= 0.0):
            self.first_crossing_t = t

        # Outgoing derivative of psi0 in the regular normalization:
        # L = (kappa/c)(dt + c dr) applied to p, written with label-space
        # derivatives only: (kappa/c) dt_p = c du_q + 2 c kappa q / r.
        lpsi = c * du_q + 2.0 * c * kappa * qi / pos + t_psi
        with np.errstate(divide="ignore", invalid="ignore"):
            lpsi_raw = np.where(np.abs(kappa) > 1e-300, lpsi * c / kappa, np.inf)

        self._times.append(t)
        self._rows.append(
            {
                "r": pos.copy(),
                "c": c,
                "kappa": kappa,
                "mu_geom": mu_geom,
                "mu_trans": self.mu_trans.copy(),
                "lb_mu": m + mu_geom * e,
                "m_src": m,
                "e_src": e,
                "trchib": -2.0 * c / pos,
                "trchib_trans": self.tch_trans.copy(),
                "trchib_prime": -2.0 * c / pos + 2.0 / (self.labels - t),
                "lpsi": lpsi,
                "lpsi_raw": lpsi_raw,
                "tpsi": t_psi,
                "psi": pi,
            }
        )

    def finish(self) -> CharacteristicFan:
        if not self._rows:
            raise InterpolationRangeError("no fan measurements were recorded")
        stacked = {
            key: np.stack([row[key] for row in self._rows])
            for key in self._rows[0]
        }
        return CharacteristicFan(
            params=self.params,
            labels=self.labels.copy(),
            n_report=self.n_report,
            h=self.h,
            t=np.array(self._times),
            truncated=self.truncated.copy(),
            first_crossing_t=self.first_crossing_t,
            **stacked,
        )


def trace_fan(trajectory: "Trajectory", n_rays: int = 33) -> CharacteristicFan:
    """Re-trace the characteristic fan offline from stored snapshots.

    Rays take solver-scale midpoint sub-steps through each snapshot
    interval, with the wave speed blended linearly in time between the two
    bracketing field copies. Built from the external record alone;
    agreement with the online fan validates both paths. Accuracy is
    limited by the snapshot cadence (the pulse front crosses several cells
    per interval, and no time interpolation recovers that), so agreement
    is tight while the fan is broad and loosens as mu falls.
    """
    snaps = trajectory.snapshots
    if len(snaps) < 2:
        raise InterpolationRangeError("trajectory stores fewer than 2 snapshots")
    params = trajectory.params
    g2 = params.g2
    dt_solver = trajectory.grid.cfl * trajectory.grid.dr

    def c_of(snap) -> np.ndarray:
        return 1.0 / np.sqrt(1.0 + 3.0 * g2 * snap.p**2)

    tracer = FanTracer(params, n_rays=n_rays)
    s0 = snaps[0]
    tracer.start(s0.t, s0.r, c_of(s0))
    tracer.measure(s0.t, s0.r, s0.p, s0.q)
    prev = s0
    c_prev = c_of(s0)
    for snap in snaps[1:]:
        c_new = c_of(snap)
        dt_full = snap.t - prev.t
        m = min(max(1, int(math.ceil(dt_full / dt_solver))), 64)
        # Snapshot windows are integer-offset slices of one global grid, so
        # both speed fields transfer onto their union exactly, with clamped
        # edge extension outside the stored window.
        dr = float(prev.r[1] - prev.r[0])
        r_lo = min(float(prev.r[0]), float(snap.r[0]))
        r_hi = max(float(prev.r[-1]), float(snap.r[-1]))
        n_ext = int(round((r_hi - r_lo) / dr)) + 1
        rg = r_lo + dr * np.arange(n_ext)

        def onto(r_src: np.ndarray, c_src: np.ndarray) -> np.ndarray:
            out = np.empty(n_ext)
            j0 = int(round((float(r_src[0]) - r_lo) / dr))
            out[:j0] = c_src[0]
            out[j0 : j0 + c_src.size] = c_src
            out[j0 + c_src.size :] = c_src[-1]
            return out

        c0g = onto(prev.r, c_prev)
        c1g = onto(snap.r, c_new)
        dt = dt_full / m
        for k in range(m):
            a0 = k / m
            a1 = (k + 1) / m
            tracer.advance_rays(
                dt, rg, c0g * (1.0 - a0) + c1g * a0, rg, c0g * (1.0 - a1) + c1g * a1
            )
        tracer.measure(snap.t, snap.r, snap.p, snap.q)
        prev, c_prev = snap, c_new
    return tracer.finish()


# ---------------------------------------------------------------------------
# Fan accessors
# ---------------------------------------------------------------------------


def inverse_density(fan: CharacteristicFan, t: float) -> tuple[np.ndarray, np.ndarray]:
    """(labels, mu) over the reported fan at the recorded time nearest t.

    Recomputes mu = c * dr/du from the stored ray positions rather than
    returning the cached column, so the differencing path itself is
    exercised.
    """
    k = fan.index_at(t)
    mu = mu_from_positions(fan.r[k], fan.h, fan.c[k])
    return fan.u_report.copy(), mu[: fan.n_report]


def transport_mu(fan: CharacteristicFan) -> tuple[np.ndarray, np.ndarray]:
    """Transported mu and measured L_bar(mu) over the reported fan."""
    return fan.mu_trans[:, : fan.n_report], fan.lb_mu[:, : fan.n_report]


@dataclass(frozen=True)
class TrchibDiagnostics:
    """Direct vs transported ingoing expansion, reported rays only."""

    t: np.ndarray
    trchib: np.ndarray
    trchib_trans: np.ndarray
    trchib_prime: np.ndarray
    max_residual: float


def trchib_diagnostics(fan: CharacteristicFan) -> TrchibDiagnostics:
    nr = fan.n_report
    direct = fan.trchib[:, :nr]
    trans = fan.trchib_trans[:, :nr]
    return TrchibDiagnostics(
        t=fan.t.copy(),
        trchib=direct.copy(),
        trchib_trans=trans.copy(),
        trchib_prime=fan.trchib_prime[:, :nr].copy(),
        max_residual=float(np.max(np.abs(direct - trans))),
    )


def write_fan(fan: CharacteristicFan, path: str, max_times: int = 256) -> None:
    """fan.csv: one row per (measurement time, reported ray) sample.

    Times are evenly thinned to at most max_times (keeping the first and
    last row); the full measurement cadence is internal and would emit
    tens of MB at acceptance resolutions.
    """
    nr = fan.n_report
    sel = np.arange(fan.t.size)
    if sel.size > max_times:
        sel = np.unique(np.linspace(0, sel.size - 1, max_times).round().astype(int))
    nt = sel.size
    cols = {
        "t": np.repeat(fan.t[sel], nr),
        "u": np.tile(fan.labels[:nr], nt),
        "r": fan.r[sel, :nr].ravel(),
        "c": fan.c[sel, :nr].ravel(),
        "mu_geom": fan.mu_geom[sel, :nr].ravel(),
        "mu_trans": fan.mu_trans[sel, :nr].ravel(),
        "lb_mu": fan.lb_mu[sel, :nr].ravel(),
        "m": fan.m_src[sel, :nr].ravel(),
        "e": fan.e_src[sel, :nr].ravel(),
        "trchib": fan.trchib[sel, :nr].ravel(),
        "trchib_prime": fan.trchib_prime[sel, :nr].ravel(),
    }
    write_columns_csv(path, cols)
