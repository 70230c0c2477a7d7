"""Exception hierarchy for the shock laboratory.

Every failure mode named in a module contract gets its own class so tests
and the CLI can discriminate without string matching. Runtime aborts carry
enough state (time, location, offending value) to diagnose a run post mortem.
"""
from __future__ import annotations


class ShocklabError(Exception):
    """Base class for all package errors."""


class InvalidSeedError(ShocklabError):
    """Seed profile is malformed (non-finite values, bad support, bad shape)."""


class InvalidModelError(ShocklabError):
    """Model parameters out of range or hyperbolicity violated at construction."""


class ResolutionError(ShocklabError):
    """Grid or sampling too coarse for the requested construction."""


class HyperbolicityLossError(ShocklabError):
    """1 + 3*g2*p**2 fell below the floor during evolution.

    Attributes carry the abort point: time ``t``, radius ``r`` and field
    value ``p`` of the worst cell.
    """

    def __init__(self, t: float, r: float, p: float) -> None:
        self.t = t
        self.r = r
        self.p = p
        super().__init__(
            f"hyperbolicity lost at t={t:.6g}, r={r:.6g} (dt*phi={p:.6g})"
        )


class CflCollapseError(ShocklabError):
    """Stable time step underflowed near the shock; distinct from hyperbolicity loss."""

    def __init__(self, t: float, dt: float) -> None:
        self.t = t
        self.dt = dt
        super().__init__(f"CFL time step collapsed at t={t:.6g} (dt={dt:.3e})")


class FanResolutionError(ShocklabError):
    """Fewer rays than the differencing stencils require."""


class InterpolationRangeError(ShocklabError):
    """A ray sample fell outside the recorded trajectory snapshots."""


class SliceInvalidError(ShocklabError):
    """Slice energy requested where the inverse density is not positive."""


class DegenerateRayError(ShocklabError):
    """Burgers ray with u0'(x0) = 0: initial inverse density is infinite."""


class ConfigError(ShocklabError):
    """Run configuration invalid; message carries the offending field path."""
