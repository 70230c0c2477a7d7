"""Figure renderers, one per documented artifact view.

Every renderer is a pure function of the run directory: it reads the
artifact files it needs, writes one PNG next to them, and returns the
output path. A renderer whose inputs are absent (or whose run mode never
produces them) raises FigureSkipped; the CLI turns that into a warning.
PNGs carry no timestamp metadata, so identical inputs give identical
bytes.
"""
from __future__ import annotations

from pathlib import Path
from typing import Callable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .run_dir import RunDirectory, RunDirectoryError

__all__ = ["FIGURES", "FigureSkipped", "render"]

DPI = 110

#: Tail-fit window, matching the documented detector definition: collapse
#: rows (mu below this) restricted to the last quarter of the time span.
FIT_MU_CEILING = 0.5
FIT_TAIL_FRACTION = 0.25


class FigureSkipped(Exception):
    """Inputs for this figure are not present in the run directory."""


def _need(run: RunDirectory, name: str) -> None:
    if not run.has(name):
        raise FigureSkipped(f"{name} not present")


def _save(fig, out: Path) -> Path:
    fig.savefig(out, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return out


def _fan_grid(cols: dict[str, np.ndarray], label: str, value: str) -> tuple:
    """Reshape a label-tiling long table into (times, labels, value grid)."""
    lab = cols[label]
    nu = int(np.unique(lab).size)
    if nu == 0 or lab.size % nu:
        raise RunDirectoryError(f"ragged table: {lab.size} rows over {nu} labels")
    nt = lab.size // nu
    t = cols["t"].reshape(nt, nu)[:, 0]
    return t, lab[:nu], cols[value].reshape(nt, nu)


def _tail_fit(t: np.ndarray, mu: np.ndarray) -> tuple[float, float] | None:
    """Least-squares a + b/t over the collapse tail; None without one.

    Window definition matches the detector that wrote shock_report.json
    (collapse rows below the ceiling, restricted to the last quarter of
    their span when enough remain), so the drawn zero reproduces the
    reported extrapolated shock time.
    """
    sel = mu < FIT_MU_CEILING
    if int(np.count_nonzero(sel)) < 4:
        return None
    t_sel = t[sel]
    t_lo = t_sel[0] + (1.0 - FIT_TAIL_FRACTION) * (t_sel[-1] - t_sel[0])
    tail = sel & (t >= t_lo)
    if int(np.count_nonzero(tail)) < 4:
        tail = sel
    x = 1.0 / t[tail]
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, mu[tail], rcond=None)
    return float(coef[0]), float(coef[1])


def fig_mu_min(run: RunDirectory, out: Path) -> Path:
    """Collapse history mu_m(t) with the a + b/t tail fit and both shock
    times (extrapolated and closed-form predicted) when the run has them."""
    _need(run, "mu_min.csv")
    cols = run.csv("mu_min.csv")
    t, mu = cols["t"], cols["mu_min"]

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(t, mu, color="tab:blue", lw=1.4, label="fan minimum of mu")

    fit = _tail_fit(t, mu)
    if fit is not None and fit[0] > 0.0 and fit[1] > 0.0:
        a, b = fit
        t_zero = -b / a
        tt = np.linspace(t[mu < FIT_MU_CEILING][0], min(t_zero, -1e-9), 200)
        ax.plot(tt, a + b / tt, "--", color="tab:orange", lw=1.2,
                label=f"tail fit a + b/t, zero at {t_zero:.3f}")
    if run.has("shock_report.json"):
        rep = run.json("shock_report.json")
        if rep.get("t_star_observed") is not None:
            ax.axvline(rep["t_star_observed"], color="tab:orange", lw=0.9,
                       ls=":", label="extrapolated t*")
        if rep.get("t_star_predicted") is not None:
            ax.axvline(rep["t_star_predicted"], color="tab:green", lw=0.9,
                       ls="-.", label="predicted t*")

    ax.set_xlabel("t")
    ax.set_ylabel("mu_m")
    ax.set_ylim(bottom=0.0)
    ax.legend(loc="best", fontsize=8)
    ax.set_title("inverse foliation density minimum")
    fig.tight_layout()
    return _save(fig, out)


def fig_fan(run: RunDirectory, out: Path) -> Path:
    """Ray positions r(t; u): the characteristic fan, colored by label."""
    _need(run, "fan.csv")
    t, u, r = _fan_grid(run.csv("fan.csv"), "u", "r")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    cmap = plt.get_cmap("viridis")
    span = max(float(u[-1] - u[0]), 1e-300)
    for j, uj in enumerate(u):
        ax.plot(t, r[:, j], color=cmap(float(uj - u[0]) / span), lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("r")
    ax.set_title("characteristic fan r(t; u)")
    fig.tight_layout()
    return _save(fig, out)


def fig_mu_profiles(run: RunDirectory, out: Path) -> Path:
    """Inverse density across the fan, mu(u), at a few selected times.

    Both routes are drawn (differenced solid, transported dashed) so a
    route disagreement is visible at a glance.
    """
    _need(run, "fan.csv")
    cols = run.csv("fan.csv")
    t, u, mu_g = _fan_grid(cols, "u", "mu_geom")
    _, _, mu_t = _fan_grid(cols, "u", "mu_trans")
    picks = np.unique(np.linspace(0, t.size - 1, 6).astype(int))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    cmap = plt.get_cmap("plasma")
    for k, i in enumerate(picks):
        color = cmap(k / max(len(picks) - 1, 1))
        ax.plot(u, mu_g[i], color=color, lw=1.2, label=f"t = {t[i]:.3f}")
        ax.plot(u, mu_t[i], color=color, lw=0.9, ls="--")
    ax.set_xlabel("u")
    ax.set_ylabel("mu")
    ax.set_ylim(bottom=0.0)
    ax.legend(loc="best", fontsize=8)
    ax.set_title("mu across the fan (solid: differenced, dashed: transported)")
    fig.tight_layout()
    return _save(fig, out)


def fig_residuals(run: RunDirectory, out: Path) -> Path:
    """Sweep residual norms against the swept parameter, log-log."""
    _need(run, "residuals.csv")
    cols = run.csv("residuals.csv")
    param = next(iter(cols))
    x = cols[param]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for key in ("res_mu", "res_lb_mu", "res_lpsi", "res_tpsi", "res_psi"):
        if key in cols:
            ax.loglog(x, cols[key], "o-", lw=1.1, ms=4, label=key)
    ax.set_xlabel(param)
    ax.set_ylabel("normalized residual sup")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(f"expansion residuals vs {param}")
    fig.tight_layout()
    return _save(fig, out)


def fig_scattering(run: RunDirectory, out: Path) -> Path:
    """Initial-energy convergence as the start radius grows: Cauchy
    differences of E0 against a 1/r0 guide, and the incoming flux
    approaching its profile-integral limit."""
    _need(run, "scattering.json")
    tab = run.json("scattering.json")
    r0 = np.asarray(tab["r0"], dtype=float)
    e0 = np.asarray(tab["E0_dtphi"], dtype=float)
    tpsi = np.asarray(tab["tpsi_sq"], dtype=float)
    limit = float(tab["limit_tpsi_sq"])

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    if r0.size >= 2:
        diffs = np.abs(np.diff(e0))
        ax1.loglog(r0[1:], diffs, "o-", color="tab:blue", label="|E0 differences|")
        guide = diffs[0] * r0[1] / r0[1:]
        ax1.loglog(r0[1:], guide, "--", color="gray", label="1/r0 guide")
    ax1.set_xlabel("r0")
    ax1.set_ylabel("successive difference")
    ax1.legend(fontsize=8)
    ax1.set_title("Cauchy convergence of E0")

    ax2.semilogx(r0, tpsi, "o-", color="tab:green", label="incoming flux")
    ax2.axhline(limit, color="gray", ls="--", label="profile-integral limit")
    rel = np.asarray(tab.get("rel_error", []), dtype=float)
    if rel.size:
        ax2.annotate(f"rel err {rel[-1]:.1e}", xy=(r0[-1], tpsi[-1]),
                     xytext=(-10, 12), textcoords="offset points",
                     ha="right", fontsize=8)
    ax2.set_xlabel("r0")
    ax2.set_ylabel("limit norm")
    ax2.legend(fontsize=8)
    ax2.set_title("scattering limit")
    fig.tight_layout()
    return _save(fig, out)


def fig_characteristics(run: RunDirectory, out: Path) -> Path:
    """Straight-line Burgers characteristics x(t; x0), with the closed-form
    shock time marked when one exists."""
    _need(run, "characteristics.csv")
    t, x0, x = _fan_grid(run.csv("characteristics.csv"), "x0", "x")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    cmap = plt.get_cmap("viridis")
    span = max(float(x0[-1] - x0[0]), 1e-300)
    for j, xj in enumerate(x0):
        ax.plot(t, x[:, j], color=cmap(float(xj - x0[0]) / span), lw=0.8)
    if run.has("burgers_report.json"):
        rep = run.json("burgers_report.json")
        if rep.get("t_star_closed_form") is not None:
            ax.axvline(rep["t_star_closed_form"], color="tab:red", lw=1.0,
                       ls="--", label="closed-form t*")
            ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.set_title("Burgers characteristics")
    fig.tight_layout()
    return _save(fig, out)


#: name -> (renderer, output file). Selection and defaults live here.
FIGURES: dict[str, tuple[Callable[[RunDirectory, Path], Path], str]] = {
    "mu_min": (fig_mu_min, "mu_min.png"),
    "fan": (fig_fan, "fan.png"),
    "mu_profiles": (fig_mu_profiles, "mu_profiles.png"),
    "residuals": (fig_residuals, "residuals.png"),
    "scattering": (fig_scattering, "scattering.png"),
    "characteristics": (fig_characteristics, "characteristics.png"),
}


def render(
    run: RunDirectory,
    names: list[str] | None = None,
) -> tuple[dict[str, Path], dict[str, str]]:
    """Render the selected figures (default: all known ones).

    Returns (written, skipped): output paths per rendered name and skip
    reasons per figure whose inputs the directory does not carry. Unknown
    figure names raise KeyError before anything is written.
    """
    selected = list(FIGURES) if names is None else list(names)
    unknown = [n for n in selected if n not in FIGURES]
    if unknown:
        raise KeyError(f"unknown figures {unknown}; known: {sorted(FIGURES)}")
    written: dict[str, Path] = {}
    skipped: dict[str, str] = {}
    for name in selected:
        fn, fname = FIGURES[name]
        try:
            written[name] = fn(run, run.path / fname)
        except FigureSkipped as exc:
            skipped[name] = str(exc)
    return written, skipped
