"""Desk-scale numerical laboratory for quasilinear shock formation.

Simulates the spherically symmetric quasilinear wave equation

    -(1 + 3*g2*(dt_phi)**2) * dtt_phi + drr_phi + (2/r) * dr_phi = 0

with short-pulse initial data on the sphere r = r0 at t = -r0, traces the
incoming characteristic fan and its inverse foliation density mu, and
measures shock formation (mu -> 0) against closed-form leading-order
predictions, with an exact Burgers oracle validating the measurement code.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    CflCollapseError,
    ConfigError,
    DegenerateRayError,
    FanResolutionError,
    HyperbolicityLossError,
    InterpolationRangeError,
    InvalidModelError,
    InvalidSeedError,
    ResolutionError,
    ShocklabError,
    SliceInvalidError,
)
from .burgers_lab import (
    BurgersProblem,
    burgers_fan_validate,
    burgers_mu,
    burgers_report,
    burgers_shock_time,
    linear_burgers,
    sine_burgers,
)
from .data_builder import (
    InitialData,
    RadiationReport,
    build_initial_data,
    default_grid,
    solve_phi0_ode,
    verify_radiation_bounds,
)
from .energy_monitor import (
    EnergyRecord,
    ScatteringTable,
    initial_energy,
    scattering_probe,
    slice_energy,
)
from .optical_geometry import CharacteristicFan, trace_fan
from .radial_solver import FieldState, GridSpec, Trajectory, evolve, wave_speed
from .seed_profiles import (
    ModelParams,
    SeedProfile,
    bump_seed,
    predicted_shock_time,
    shock_margin,
    sine_seed,
    tabulated_seed,
    zero_seed,
)
from .shock_detector import ShockReport, detect, residual_norms, trapping_check

__all__ = [
    "__version__",
    "ShocklabError",
    "InvalidSeedError",
    "InvalidModelError",
    "ResolutionError",
    "HyperbolicityLossError",
    "CflCollapseError",
    "FanResolutionError",
    "InterpolationRangeError",
    "SliceInvalidError",
    "DegenerateRayError",
    "ConfigError",
    "SeedProfile",
    "ModelParams",
    "sine_seed",
    "bump_seed",
    "tabulated_seed",
    "zero_seed",
    "shock_margin",
    "predicted_shock_time",
    "InitialData",
    "RadiationReport",
    "solve_phi0_ode",
    "build_initial_data",
    "verify_radiation_bounds",
    "default_grid",
    "GridSpec",
    "FieldState",
    "Trajectory",
    "wave_speed",
    "evolve",
    "CharacteristicFan",
    "trace_fan",
    "ShockReport",
    "detect",
    "residual_norms",
    "trapping_check",
    "EnergyRecord",
    "ScatteringTable",
    "initial_energy",
    "slice_energy",
    "scattering_probe",
    "BurgersProblem",
    "sine_burgers",
    "linear_burgers",
    "burgers_shock_time",
    "burgers_mu",
    "burgers_fan_validate",
    "burgers_report",
]
