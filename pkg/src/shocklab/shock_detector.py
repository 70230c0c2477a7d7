"""Shock diagnostics reduced from characteristic-fan data.

Detection rests on the leading-order behavior of the inverse foliation
density along the fan,

    mu(t, u) ~ 1 - (1/t + 1/r0) * r0**2 * Lb_mu(-r0, u),

which is affine in 1/t: the minimum mu_m(t) is tail-fitted against
a + b/t and the zero crossing extrapolated. The same expansion and its
companions (for Lb_mu, the outgoing/transversal derivatives and psi0
itself) are turned into normalized residual norms; each is O(1) in both
delta and r0 when the first-order picture holds, so stability of the
norms across parameter refinements is the quantitative check of that
picture.

The residual sups run over the expansion's validity window: recorded
rows whose fan-minimum mu is at least MU_VALIDITY_THRESHOLD (the
complement of the trapping region mu < 1/10). Past that line the
neglected quadratic terms are ordinary-size by definition of collapse
and every normalized residual inflates like 1/delta, which no
resolution recovers; the window is part of the residual definition.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SliceInvalidError
from .io_utils import write_columns_csv, write_json
from .optical_geometry import CharacteristicFan
from .seed_profiles import ModelParams, SeedProfile, predicted_shock_time, shock_margin

__all__ = [
    "MU_VALIDITY_THRESHOLD",
    "TRAPPING_MU",
    "TRAPPING_BOUND",
    "TRAPPING_SLACK",
    "ShockReport",
    "TrappingViolation",
    "mu_min_series",
    "detect",
    "residual_mu_expansion",
    "residual_Lb_mu_expansion",
    "residual_Lpsi_expansion",
    "residual_Tpsi_expansion",
    "residual_psi_expansion",
    "residual_norms",
    "trapping_check",
    "write_shock_report",
    "write_mu_min",
]

#: Rows with fan-minimum mu below this are outside the first-order window.
MU_VALIDITY_THRESHOLD = 0.1

#: Samples with mu below this are in the trapping region.
TRAPPING_MU = 0.1

#: Trapping bound: t**2 * Lb_mu <= TRAPPING_BOUND + slack in the region.
TRAPPING_BOUND = -0.25

#: Default slack absorbing the O(delta) remainder of the trapping estimate.
TRAPPING_SLACK = 0.05

#: mu_m threshold below which rows join the tail fit.
FIT_MU_CEILING = 0.5

#: The tail fit uses the last quarter (by time span) of qualifying rows.
FIT_TAIL_FRACTION = 0.25


# ---------------------------------------------------------------------------
# mu_m series and tail fit
# ---------------------------------------------------------------------------


def mu_min_series(fan: CharacteristicFan) -> tuple[np.ndarray, np.ndarray]:
    """mu_m(t) = min(min over reported rays of mu, 1) per recorded time."""
    return fan.mu_min_series()


def _fit_tail(t: np.ndarray, mu_m: np.ndarray) -> tuple[float, float] | None:
    """Least-squares (a, b) for mu_m ~ a + b/t over the collapse tail.

    Returns None when fewer than 4 rows qualify (no established trend).
    """
    sel = mu_m < FIT_MU_CEILING
    if np.count_nonzero(sel) < 4:
        return None
    t_sel = t[sel]
    t_lo = t_sel[0] + (1.0 - FIT_TAIL_FRACTION) * (t_sel[-1] - t_sel[0])
    tail = sel & (t >= t_lo)
    if np.count_nonzero(tail) < 4:
        tail = sel
    x = 1.0 / t[tail]
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, mu_m[tail], rcond=None)
    return float(coef[0]), float(coef[1])


# ---------------------------------------------------------------------------
# Expansion residuals
# ---------------------------------------------------------------------------


def _report_block(fan: CharacteristicFan, values: np.ndarray) -> np.ndarray:
    """Reported, never-truncated ray columns of a stacked fan field."""
    block = values[:, : fan.n_report]
    ok = ~fan.truncated[: fan.n_report]
    if not ok.any():
        raise SliceInvalidError("every reported ray left the field window")
    return block[:, ok]


def _validity_rows(fan: CharacteristicFan) -> np.ndarray:
    mu = _report_block(fan, fan.mu_geom)
    return np.min(mu, axis=1) >= MU_VALIDITY_THRESHOLD


def _row_sup(rows: np.ndarray, valid: np.ndarray) -> float:
    if not valid.any():
        return float("nan")
    return float(np.max(rows[valid]))


def _mu_rows(fan: CharacteristicFan, params: ModelParams) -> np.ndarray:
    t = fan.t[:, None]
    mu = _report_block(fan, fan.mu_geom)
    anchor = params.r0**2 * _report_block(fan, fan.lb_mu)[0]
    predicted = 1.0 - (1.0 / t + 1.0 / params.r0) * anchor
    return np.max(np.abs(mu - predicted) * t**2 / params.delta, axis=1)


def _lb_mu_rows(fan: CharacteristicFan, params: ModelParams) -> np.ndarray:
    t = fan.t[:, None]
    lb = _report_block(fan, fan.lb_mu)
    anchor = params.r0**2 * lb[0]
    return np.max(np.abs(t**2 * lb - anchor) * np.abs(t) / params.delta, axis=1)


def _ray_scaled_rows(
    fan: CharacteristicFan, values: np.ndarray, r0: float, power: float, delta: float
) -> np.ndarray:
    """Rows of sup |(-t) f(t,u) - r0 f(-r0,u)| * |t| / delta**power."""
    t = fan.t[:, None]
    block = _report_block(fan, values)
    anchor = r0 * block[0]
    return np.max(np.abs((-t) * block - anchor) * np.abs(t), axis=1) / delta**power


def residual_mu_expansion(fan: CharacteristicFan, params: ModelParams) -> float:
    """Normalized sup residual of the first-order expansion of mu."""
    return _row_sup(_mu_rows(fan, params), _validity_rows(fan))


def residual_Lb_mu_expansion(fan: CharacteristicFan, params: ModelParams) -> float:
    """Normalized sup residual of the conservation of t**2 * Lb_mu."""
    return _row_sup(_lb_mu_rows(fan, params), _validity_rows(fan))


def residual_Lpsi_expansion(fan: CharacteristicFan, params: ModelParams) -> float:
    """Normalized sup residual of the conservation of (-t) * L(psi0).

    Uses the shock-adapted outgoing derivative carried by the fan (the
    normalization that stays regular as mu -> 0).
    """
    rows = _ray_scaled_rows(fan, fan.lpsi, params.r0, 0.5, params.delta)
    return _row_sup(rows, _validity_rows(fan))


def residual_Tpsi_expansion(fan: CharacteristicFan, params: ModelParams) -> float:
    """Companion residual for the transversal derivative T(psi0)."""
    rows = _ray_scaled_rows(fan, fan.tpsi, params.r0, 0.5, params.delta)
    return _row_sup(rows, _validity_rows(fan))


def residual_psi_expansion(fan: CharacteristicFan, params: ModelParams) -> float:
    """Companion residual for psi0 itself (amplitude decay law)."""
    rows = _ray_scaled_rows(fan, fan.psi, params.r0, 1.5, params.delta)
    return _row_sup(rows, _validity_rows(fan))


def residual_norms(fan: CharacteristicFan, params: ModelParams) -> dict[str, float]:
    """All named expansion residuals over the validity window."""
    return {
        "mu": residual_mu_expansion(fan, params),
        "lb_mu": residual_Lb_mu_expansion(fan, params),
        "lpsi": residual_Lpsi_expansion(fan, params),
        "tpsi": residual_Tpsi_expansion(fan, params),
        "psi": residual_psi_expansion(fan, params),
    }


# ---------------------------------------------------------------------------
# Trapping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrappingViolation:
    """A recorded sample inside the trapping region breaking the bound."""

    t: float
    u: float
    mu: float
    t2_lb_mu: float


def trapping_check(
    fan: CharacteristicFan, slack: float = TRAPPING_SLACK
) -> list[TrappingViolation]:
    """Samples with mu < 1/10 must satisfy t**2 * Lb_mu <= -1/4 + slack.

    Returns the violating samples (empty on a healthy run; vacuous when
    mu never enters the trapping region).
    """
    ok = ~fan.truncated[: fan.n_report]
    labels = fan.labels[: fan.n_report][ok]
    mu = _report_block(fan, fan.mu_geom)
    t2lb = fan.t[:, None] ** 2 * _report_block(fan, fan.lb_mu)
    inside = mu < TRAPPING_MU
    bad = inside & (t2lb > TRAPPING_BOUND + slack)
    out: list[TrappingViolation] = []
    for i, j in zip(*np.nonzero(bad)):
        out.append(
            TrappingViolation(
                t=float(fan.t[i]),
                u=float(labels[j]),
                mu=float(mu[i, j]),
                t2_lb_mu=float(t2lb[i, j]),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShockReport:
    """Reduced shock diagnostics for one run."""

    fired: bool
    t_star_observed: float | None
    t_star_predicted: float | None
    u_star: float | None
    margin: float
    mu_min_final: float
    t_final: float
    residual_norms: dict[str, float] = field(default_factory=dict)
    trapping_violations: int = 0
    diagnostic: str = ""


def detect(
    fan: CharacteristicFan,
    seed: SeedProfile,
    params: ModelParams,
    stop_mu: float = 0.05,
) -> ShockReport:
    """Reduce a traced fan to a ShockReport.

    The observed shock time extrapolates the a + b/t tail fit of mu_m(t)
    to zero. Firing requires all of: the fan actually reached mu_m below
    stop_mu (confidence window), a negative-trend fit, and a crossing at
    or before t = -1.
    """
    t, mu_m = fan.mu_min_series()
    margin, _ = shock_margin(seed, params)
    t_pred = predicted_shock_time(seed, params)

    mu_final = float(mu_m[-1])
    norms = residual_norms(fan, params)
    violations = trapping_check(fan)

    mu = _report_block(fan, fan.mu_geom)
    ok = ~fan.truncated[: fan.n_report]
    u_star = float(fan.labels[: fan.n_report][ok][int(np.argmin(mu[-1]))])

    fit = _fit_tail(t, mu_m)
    t_obs: float | None = None
    fired = False
    diagnostic = ""
    if fit is None:
        diagnostic = "no collapse tail: mu_m never fell below the fit ceiling"
    else:
        a, b = fit
        # On the t < 0 branch, mu falling toward zero means a > 0 with
        # b > 0: mu = a + b/t crosses zero at t = -b/a < 0.
        if b <= 0.0 or a <= 0.0:
            diagnostic = f"tail fit a = {a:.4g}, b = {b:.4g} has no zero crossing trend"
        else:
            t_obs = -b / a
            reached = mu_final < stop_mu
            fired = reached and t_obs <= -1.0
            if not reached:
                diagnostic = f"mu_m stopped at {mu_final:.4g} >= stop_mu = {stop_mu}"
            elif not fired:
                diagnostic = f"extrapolated crossing t = {t_obs:.4g} after t = -1"

    return ShockReport(
        fired=fired,
        t_star_observed=t_obs,
        t_star_predicted=t_pred,
        u_star=u_star,
        margin=margin,
        mu_min_final=mu_final,
        t_final=float(t[-1]),
        residual_norms=norms,
        trapping_violations=len(violations),
        diagnostic=diagnostic,
    )


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------


def write_shock_report(report: ShockReport, path: str) -> None:
    """Serialize a ShockReport to JSON."""
    write_json(
        path,
        {
            "fired": report.fired,
            "t_star_observed": report.t_star_observed,
            "t_star_predicted": report.t_star_predicted,
            "u_star": report.u_star,
            "margin": report.margin,
            "mu_min_final": report.mu_min_final,
            "t_final": report.t_final,
            "residual_norms": report.residual_norms,
            "trapping_violations": report.trapping_violations,
            "diagnostic": report.diagnostic,
        },
    )


def write_mu_min(fan: CharacteristicFan, path: str) -> None:
    """Write the mu_m(t) series as a two-column CSV."""
    t, mu_m = fan.mu_min_series()
    write_columns_csv(path, {"t": t, "mu_min": mu_m})
