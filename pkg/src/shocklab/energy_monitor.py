"""Slice energies for the first-order variations and scattering limits.

Two energies are evaluated per variation psi in {dt_phi, dr_phi} on the
truncated slice [0, u] in ray-label space:

    E0 = 4*pi * int_0^u [ (L psi)**2 + mu * (Lb psi)**2 ] r**2 du'
    E1 = t**2 * 4*pi * int_0^u mu * (Lb psi + (1/2)*trchib_t * psi)**2 r**2 du'

with L the shock-adapted outgoing derivative (kappa/c)(dt + c*dr), Lb
the ingoing derivative dt - c*dr, and trchib_t = 2*Lb(1/c) - 2/r the
conformally rescaled ingoing expansion (anchored at its initial-slice
identity). Angular gradient terms vanish identically in symmetry; the
sphere integration contributes the 4*pi*r**2 factor.

All label derivatives ride the characteristic fan: T(f) = df/du exactly,
so the integrands stay regular as the fan compresses. On the initial
slice the energies are also available directly from the seed profiles
without any evolution, which is what the scattering probe uses to take
the r0 -> infinity limit at fixed pulse width.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .data_builder import InitialData, solve_phi0_ode
from .errors import FanResolutionError, InterpolationRangeError, InvalidModelError, SliceInvalidError
from .io_utils import write_columns_csv, write_json
from .optical_geometry import CharacteristicFan, interp4_uniform, label_derivative
from .radial_solver import FieldState, Snapshot, Trajectory
from .seed_profiles import ModelParams, SeedProfile

__all__ = [
    "EnergyRecord",
    "ScatteringTable",
    "slice_energy",
    "energies_over_time",
    "initial_energy",
    "scattering_probe",
    "write_energies",
    "write_scattering",
]


@dataclass(frozen=True)
class EnergyRecord:
    """Slice energies at (t, u), one E0/E1 pair per variation."""

    t: float
    u: float
    e0_dtphi: float
    e1_dtphi: float
    e0_drphi: float
    e1_drphi: float

    def __post_init__(self) -> None:
        for name in ("e0_dtphi", "e1_dtphi", "e0_drphi", "e1_drphi"):
            if getattr(self, name) < 0.0:
                raise SliceInvalidError(f"{name} < 0: broken quadrature")


def _energies_on_labels(
    labels: np.ndarray,
    r: np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
    kappa: np.ndarray,
    g2: float,
    t: float,
    u: float,
    h: float,
) -> EnergyRecord:
    """Both variations' energies from slice samples on a uniform label grid.

    The full arrays (including any points beyond u) keep the difference
    stencils centered; the quadrature is then restricted to labels <= u.
    """
    c = 1.0 / np.sqrt(1.0 + 3.0 * g2 * p**2)
    mu = c * kappa
    du_p = label_derivative(p, h)
    du_q = label_derivative(q, h)
    w = c * du_q - du_p

    lpsi0 = c * du_q + 2.0 * c * kappa * q / r + du_p
    lbpsi0 = (c / kappa) * w + 2.0 * c**2 * q / r
    lpsi1 = du_p / c + du_q
    lbpsi1 = -w / kappa
    trchib_t = 6.0 * g2 * c * p * lbpsi0 - 2.0 / r

    sel = labels <= u + 1e-12 * max(u, 1.0)
    if np.count_nonzero(sel) < 3:
        raise FanResolutionError(
            f"slice [0, {u}] covers {np.count_nonzero(sel)} rays; need at least 3"
        )
    x = labels[sel]
    r2 = r[sel] ** 2
    mu_s = mu[sel]

    def e0(lp: np.ndarray, lb: np.ndarray) -> float:
        dens = (lp[sel] ** 2 + mu_s * lb[sel] ** 2) * r2
        return 4.0 * np.pi * float(simpson(dens, x=x))

    def e1(lb: np.ndarray, psi: np.ndarray) -> float:
        comb = lb[sel] + 0.5 * trchib_t[sel] * psi[sel]
        return t**2 * 4.0 * np.pi * float(simpson(mu_s * comb**2 * r2, x=x))

    return EnergyRecord(
        t=t,
        u=u,
        e0_dtphi=e0(lpsi0, lbpsi0),
        e1_dtphi=e1(lbpsi0, p),
        e0_drphi=e0(lpsi1, lbpsi1),
        e1_drphi=e1(lbpsi1, q),
    )


def _slice_arrays(state: FieldState | Snapshot) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(state, FieldState):
        return state.t, state.grid.nodes(), state.p, state.q
    return state.t, state.r, state.p, state.q


def slice_energy(
    state: FieldState | Snapshot,
    fan: CharacteristicFan,
    u: float,
    g2: float | None = None,
) -> EnergyRecord:
    """Energies over the slice [0, u] at the state's time.

    The fan supplies the label-to-radius map (its recorded ray positions
    at that time); the state supplies the fields, interpolated onto the
    rays. Requires mu > 0 across the slice.
    """
    t, r_nodes, p_nodes, q_nodes = _slice_arrays(state)
    k = fan.index_at(t)
    if abs(fan.t[k] - t) > 1e-9 * max(1.0, abs(t)):
        raise SliceInvalidError(
            f"state time {t} matches no fan measurement (nearest: {fan.t[k]})"
        )
    if not (0.0 < u <= fan.labels[-1] + 1e-12):
        raise InterpolationRangeError(
            f"u = {u} outside the traced label range (0, {fan.labels[-1]}]"
        )
    if fan.truncated[fan.labels <= u].any():
        raise SliceInvalidError(f"slice [0, {u}] includes rays that left the window")

    pos = fan.r[k]
    if pos[0] < r_nodes[0] or pos[-1] > r_nodes[-1]:
        raise InterpolationRangeError("fan positions outside the stored field window")
    p = interp4_uniform(float(r_nodes[0]), float(r_nodes[1] - r_nodes[0]), p_nodes, pos)
    q = interp4_uniform(float(r_nodes[0]), float(r_nodes[1] - r_nodes[0]), q_nodes, pos)
    kappa = fan.kappa[k]
    mu = fan.mu_geom[k]
    if np.any(mu[fan.labels <= u + 1e-12] <= 0.0):
        raise SliceInvalidError(f"mu <= 0 on the slice t = {t}, u <= {u}")

    return _energies_on_labels(
        fan.labels, pos, p, q, kappa, fan.params.g2, t, u, fan.h
    )


def energies_over_time(
    trajectory: Trajectory, u: float | None = None
) -> list[EnergyRecord]:
    """Slice energies at every stored snapshot time (default u = delta)."""
    if u is None:
        u = trajectory.params.delta
    return [
        slice_energy(snap, trajectory.fan, u) for snap in trajectory.snapshots
    ]


def initial_energy(data: InitialData, n_samples: int = 4097) -> EnergyRecord:
    """Energies of the initial slice, evaluated from the seed profiles.

    No evolution and no field grid are involved: on t = -r0 the rays sit
    at r = r0 + u with kappa = 1, and every derivative in the integrand
    comes from the pulse profiles analytically.
    """
    params = data.params
    if not data.pulse_like:
        z = 0.0
        return EnergyRecord(-params.r0, params.delta, z, z, z, z)
    return _initial_energy_analytic(data.seed, params, n_samples)


def _initial_energy_analytic(
    seed: SeedProfile, params: ModelParams, n_samples: int = 4097
) -> EnergyRecord:
    delta, r0 = params.delta, params.r0
    profile = solve_phi0_ode(seed, params)
    s = np.linspace(0.0, 1.0, n_samples)
    amp1 = params.pulse_amp  # sqrt(delta)/r0
    amp0 = delta * amp1  # delta**1.5 / r0

    p = amp1 * seed.phi1(s)
    q = amp0 * profile.dphi0_at(s) / delta
    du_p = amp1 * seed.dphi1(s) / delta
    du_q = amp0 * profile.d2phi0_at(s) / delta**2
    r = r0 + delta * s
    kappa = np.ones_like(s)
    labels = delta * s

    return _energies_on_labels(
        labels, r, p, q, kappa, params.g2, -r0, delta, delta / (n_samples - 1)
    )


@dataclass(frozen=True)
class ScatteringTable:
    """Initial energies across r0 against the infinite-r0 limit."""

    delta: float
    r0: np.ndarray
    e0_dtphi: np.ndarray
    e1_dtphi: np.ndarray
    e0_drphi: np.ndarray
    e1_drphi: np.ndarray
    tpsi_sq: np.ndarray
    limit_tpsi_sq: float
    rel_error: np.ndarray


def scattering_probe(
    seed: SeedProfile,
    delta: float,
    r0_list: list[float] | np.ndarray,
    g2: float = 1.0,
    n_samples: int = 4097,
) -> ScatteringTable:
    """Initial-slice energies per r0 and the transversal-norm limit.

    ||T psi0||^2 over the initial slice equals
    4*pi*int (ds phi1)^2 (1 + delta*s/r0)^2 ds, whose r0 -> infinity
    limit is the quadrature 4*pi*int_0^1 (ds phi1)^2 ds reported as
    ``limit_tpsi_sq``; rel_error tracks the approach.
    """
    r0_arr = np.asarray(r0_list, dtype=float)
    if r0_arr.size < 3 or np.any(np.diff(r0_arr) <= 0.0):
        raise InvalidModelError("r0_list must be increasing with at least 3 entries")

    s = np.linspace(0.0, 1.0, n_samples)
    dphi1 = seed.dphi1(s)
    limit = 4.0 * np.pi * float(simpson(dphi1**2, x=s))

    records = []
    tpsi_sq = []
    for r0 in r0_arr:
        params = ModelParams(g2=g2, delta=delta, r0=float(r0))
        rec = _initial_energy_analytic(seed, params, n_samples)
        records.append(rec)
        w = (1.0 + delta * s / r0) ** 2
        tpsi_sq.append(4.0 * np.pi * float(simpson(dphi1**2 * w, x=s)))

    tpsi_arr = np.array(tpsi_sq)
    rel = np.abs(tpsi_arr - limit) / limit if limit > 0.0 else np.zeros_like(tpsi_arr)
    return ScatteringTable(
        delta=delta,
        r0=r0_arr,
        e0_dtphi=np.array([rec.e0_dtphi for rec in records]),
        e1_dtphi=np.array([rec.e1_dtphi for rec in records]),
        e0_drphi=np.array([rec.e0_drphi for rec in records]),
        e1_drphi=np.array([rec.e1_drphi for rec in records]),
        tpsi_sq=tpsi_arr,
        limit_tpsi_sq=limit,
        rel_error=rel,
    )


def write_energies(records: list[EnergyRecord], path: str) -> None:
    """energies.csv: one row per slice, E0/E1 columns per variation."""
    write_columns_csv(
        path,
        {
            "t": np.array([rec.t for rec in records]),
            "u": np.array([rec.u for rec in records]),
            "E0_dtphi": np.array([rec.e0_dtphi for rec in records]),
            "E1_dtphi": np.array([rec.e1_dtphi for rec in records]),
            "E0_drphi": np.array([rec.e0_drphi for rec in records]),
            "E1_drphi": np.array([rec.e1_drphi for rec in records]),
        },
    )


def write_scattering(table: ScatteringTable, path: str) -> None:
    """scattering.json: the r0 table, the limit, and relative errors."""
    write_json(
        path,
        {
            "delta": table.delta,
            "r0": table.r0,
            "E0_dtphi": table.e0_dtphi,
            "E1_dtphi": table.e1_dtphi,
            "E0_drphi": table.e0_drphi,
            "E1_drphi": table.e1_drphi,
            "tpsi_sq": table.tpsi_sq,
            "limit_tpsi_sq": table.limit_tpsi_sq,
            "rel_error": table.rel_error,
        },
    )
