"""Seed pulse profiles and the closed-form shock criterion.

A seed is a pair of dimensionless profiles (phi1, phi2) on s in [0, 1].
phi1 shapes the time derivative of the field on the initial annulus,
phi2 is a small forcing entering the profile-construction ODE at order
(delta/r0^2)^2. Profiles evaluate to 0 outside [0, 1] so the data stay
trivial inside the initial ball and beyond the pulse.

The shock criterion lives here because it is a functional of the seed
alone: the quantity 3*g2*phi1*phi1' controls the initial decay rate of
the inverse foliation density, and its minimum over s (the "margin")
decides, at leading order in delta, whether the density reaches zero
before t = -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidModelError, InvalidSeedError

__all__ = [
    "SeedProfile",
    "ModelParams",
    "sine_seed",
    "bump_seed",
    "tabulated_seed",
    "zero_seed",
    "shock_margin",
    "predicted_shock_time",
]

#: Hyperbolicity floor: 1 + 3*g2*rho must exceed this everywhere.
HYPERBOLICITY_FLOOR = 1e-6

#: Uniform s-samples used before local refinement of the margin minimum.
_MARGIN_GRID = 4096

_ArrayFn = Callable[[np.ndarray], np.ndarray]


def _as_array(s: float | np.ndarray) -> np.ndarray:
    return np.asarray(s, dtype=float)


@dataclass(frozen=True)
class SeedProfile:
    """Pulse profile pair with analytic or interpolated derivatives.

    The stored callables are only guaranteed on [0, 1]; the public
    evaluation methods apply the compact-support mask.
    """

    name: str
    amplitude: float
    _phi1: _ArrayFn
    _dphi1: _ArrayFn
    _phi2: _ArrayFn
    c1_only: bool = False

    def __post_init__(self) -> None:
        s = np.linspace(0.0, 1.0, 2049)
        vals = self._phi1(s)
        if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(self._dphi1(s))):
            raise InvalidSeedError(f"seed {self.name!r}: non-finite profile values")
        scale = float(np.max(np.abs(vals)))
        if abs(float(vals[0])) > 1e-9 * max(scale, 1.0):
            raise InvalidSeedError(
                f"seed {self.name!r}: phi1(0) = {vals[0]:.3e} != 0 "
                "(data must vanish at the inner edge)"
            )

    def _masked(self, fn: _ArrayFn, s: float | np.ndarray) -> np.ndarray:
        s = _as_array(s)
        inside = (s >= 0.0) & (s <= 1.0)
        out = np.zeros_like(s)
        if np.any(inside):
            out[inside] = fn(s[inside])
        return out

    def phi1(self, s: float | np.ndarray) -> np.ndarray:
        return self._masked(self._phi1, s)

    def dphi1(self, s: float | np.ndarray) -> np.ndarray:
        return self._masked(self._dphi1, s)

    def phi2(self, s: float | np.ndarray) -> np.ndarray:
        return self._masked(self._phi2, s)

    @property
    def phi1_max(self) -> float:
        s = np.linspace(0.0, 1.0, 4097)
        return float(np.max(np.abs(self._phi1(s))))


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity strength and pulse geometry.

    g2 is the second derivative of the constitutive function at zero; g2 = 0
    recovers the linear wave equation (exact unit wave speed). delta is
    the pulse width, r0 the initial radius; delta < r0/4 keeps the 1/r0
    corrections subordinate to the delta hierarchy.
    """

    g2: float
    delta: float
    r0: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.g2) and math.isfinite(self.delta) and math.isfinite(self.r0)):
            raise InvalidModelError("model params must be finite")
        if self.delta <= 0.0:
            raise InvalidModelError(f"delta = {self.delta} must be positive")
        if self.r0 < 2.0:
            raise InvalidModelError(f"r0 = {self.r0} must be >= 2")
        if not self.delta < self.r0 / 4.0:
            raise InvalidModelError(
                f"delta = {self.delta} must be < r0/4 = {self.r0 / 4.0} (asymptotic regime)"
            )

    @property
    def pulse_amp(self) -> float:
        """Amplitude scale of dt_phi on the annulus: delta^(1/2)/r0."""
        return math.sqrt(self.delta) / self.r0

    def check_hyperbolicity(self, seed: SeedProfile) -> None:
        """Reject data whose rho-range breaks 1 + 3*g2*rho > 0."""
        rho_max = (self.pulse_amp * seed.phi1_max) ** 2
        if 1.0 + 3.0 * self.g2 * rho_max <= HYPERBOLICITY_FLOOR:
            raise InvalidModelError(
                f"hyperbolicity violated on the data range: "
                f"1 + 3*g2*rho_max = {1.0 + 3.0 * self.g2 * rho_max:.3e}"
            )


# ---------------------------------------------------------------------------
# Preset families
# ---------------------------------------------------------------------------


def sine_seed(amplitude: float = 1.0) -> SeedProfile:
    """Half-period sine pulse A*sin(pi*s). C1 at s = 0 only (corner in phi1')."""
    a = float(amplitude)
    return SeedProfile(
        name="sine",
        amplitude=a,
        _phi1=lambda s: a * np.sin(np.pi * s),
        _dphi1=lambda s: a * np.pi * np.cos(np.pi * s),
        _phi2=lambda s: np.zeros_like(s),
        c1_only=True,
    )


def _bump_raw(s: np.ndarray) -> np.ndarray:
    # exp(4 - 1/(s(1-s))) peaks at exactly 1 at s = 1/2 and vanishes with all
    # derivatives at both endpoints; clipping keeps the exponent finite.
    out = np.zeros_like(s)
    interior = (s > 0.0) & (s < 1.0)
    si = s[interior]
    with np.errstate(over="ignore"):
        out[interior] = np.exp(4.0 - 1.0 / (si * (1.0 - si)))
    return out


def _bump_deriv(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    interior = (s > 0.0) & (s < 1.0)
    si = s[interior]
    w = si * (1.0 - si)
    out[interior] = np.exp(4.0 - 1.0 / w) * (1.0 - 2.0 * si) / (w * w)
    return out


def bump_seed(amplitude: float = 1.0) -> SeedProfile:
    """Compactly supported C-infinity bump, normalized to peak amplitude A."""
    a = float(amplitude)
    return SeedProfile(
        name="bump",
        amplitude=a,
        _phi1=lambda s: a * _bump_raw(s),
        _dphi1=lambda s: a * _bump_deriv(s),
        _phi2=lambda s: np.zeros_like(s),
    )


def zero_seed() -> SeedProfile:
    """Trivial seed: identically zero data."""
    return SeedProfile(
        name="zero",
        amplitude=0.0,
        _phi1=lambda s: np.zeros_like(s),
        _dphi1=lambda s: np.zeros_like(s),
        _phi2=lambda s: np.zeros_like(s),
    )


def tabulated_seed(
    s_samples: np.ndarray,
    phi1_samples: np.ndarray,
    phi2_samples: np.ndarray | None = None,
    name: str = "tabulated",
) -> SeedProfile:
    """Seed from (s, phi1[, phi2]) samples with smooth cubic interpolation."""
    from scipy.interpolate import CubicSpline

    s = np.asarray(s_samples, dtype=float)
    v1 = np.asarray(phi1_samples, dtype=float)
    if s.ndim != 1 or s.size < 4:
        raise InvalidSeedError("tabulated seed needs at least 4 samples")
    if np.any(np.diff(s) <= 0.0):
        raise InvalidSeedError("tabulated seed s-samples must be strictly increasing")
    if s[0] > 1e-12 or s[-1] < 1.0 - 1e-12:
        raise InvalidSeedError("tabulated seed must cover [0, 1]")
    if not np.all(np.isfinite(v1)):
        raise InvalidSeedError("tabulated seed: non-finite phi1 samples")
    sp1 = CubicSpline(s, v1)
    dsp1 = sp1.derivative()
    if phi2_samples is None:
        fn2: _ArrayFn = lambda x: np.zeros_like(x)
    else:
        v2 = np.asarray(phi2_samples, dtype=float)
        if not np.all(np.isfinite(v2)):
            raise InvalidSeedError("tabulated seed: non-finite phi2 samples")
        sp2 = CubicSpline(s, v2)
        fn2 = lambda x: np.asarray(sp2(x), dtype=float)
    return SeedProfile(
        name=name,
        amplitude=float(np.max(np.abs(v1))) if v1.size else 0.0,
        _phi1=lambda x: np.asarray(sp1(x), dtype=float),
        _dphi1=lambda x: np.asarray(dsp1(x), dtype=float),
        _phi2=fn2,
        c1_only=True,
    )


# ---------------------------------------------------------------------------
# Shock criterion
# ---------------------------------------------------------------------------


def _golden_minimize(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section minimum of a scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def shock_margin(seed: SeedProfile, params: ModelParams) -> tuple[float, bool]:
    """Minimum over s of 3*g2*phi1(s)*phi1'(s) and whether the shock fires.

    Dense uniform sampling followed by golden-section refinement around the
    three best candidates. fires = (margin <= -1), equivalently
    g2*phi1*phi1' <= -1/3 somewhere on the seed.
    """
    s = np.linspace(0.0, 1.0, _MARGIN_GRID + 1)
    vals = 3.0 * params.g2 * seed.phi1(s) * seed.dphi1(s)
    if not np.all(np.isfinite(vals)):
        raise InvalidSeedError(f"seed {seed.name!r}: non-finite criterion values")

    def f(x: float) -> float:
        return float(3.0 * params.g2 * seed.phi1(x) * seed.dphi1(x))

    # Refine around the three lowest grid samples; candidates may be adjacent,
    # golden section on overlapping brackets is harmless.
    order = np.argsort(vals)[:3]
    h = 1.0 / _MARGIN_GRID
    best = float(np.min(vals))
    for idx in order:
        lo = max(0.0, s[idx] - h)
        hi = min(1.0, s[idx] + h)
        x = _golden_minimize(f, lo, hi)
        best = min(best, f(x))
    return best, best <= -1.0


def predicted_shock_time(seed: SeedProfile, params: ModelParams) -> float | None:
    """Leading-order vanishing time of the inverse density, or None.

    Solves 1 + (1/|t| - 1/r0)*margin = 0: |t*| = r0*|margin|/(r0 + |margin|).
    Returns None when margin >= 0 or the root lies inside |t| < 1 (no shock
    in the analyzed window t in [-r0, -1]).
    """
    margin, _ = shock_margin(seed, params)
    if margin >= 0.0:
        return None
    t_abs = params.r0 * abs(margin) / (params.r0 + abs(margin))
    if t_abs < 1.0:
        return None
    return -t_abs
