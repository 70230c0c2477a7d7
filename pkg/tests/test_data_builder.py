"""Profile ODE, slice construction, and no-radiation verification."""
from __future__ import annotations

import math

import numpy as np
import pytest

from shocklab import (
    GridSpec,
    InvalidModelError,
    ModelParams,
    ResolutionError,
    build_initial_data,
    bump_seed,
    default_grid,
    sine_seed,
    solve_phi0_ode,
    verify_radiation_bounds,
    zero_seed,
)

PARAMS = ModelParams(g2=1.0, delta=0.05, r0=10.0)


class TestProfileOde:
    def test_reduced_sine_closed_form(self):
        # reduced: phi0'' = pi*cos(pi*s), so phi0' = sin(pi*s) and
        # phi0 = (1 - cos(pi*s))/pi.
        prof = solve_phi0_ode(sine_seed(1.0), PARAMS, reduced=True)
        assert np.max(np.abs(prof.dphi0 - np.sin(np.pi * prof.s))) < 1e-12
        assert np.max(np.abs(prof.phi0 - (1.0 - np.cos(np.pi * prof.s)) / np.pi)) < 1e-12

    def test_integrator_is_fourth_order(self):
        errs = []
        for n in (64, 128, 256):
            prof = solve_phi0_ode(sine_seed(1.0), PARAMS, n_samples=n, reduced=True)
            errs.append(abs(prof.phi0_end - 2.0 / math.pi))
        assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.1)
        assert errs[1] / errs[2] == pytest.approx(16.0, rel=0.1)

    def test_full_solution_near_reduced(self):
        # The delta-suppressed terms shift the profile by O(delta).
        gaps = []
        for delta in (0.1, 0.05, 0.025):
            params = ModelParams(1.0, delta, 10.0)
            full = solve_phi0_ode(sine_seed(1.0), params)
            red = solve_phi0_ode(sine_seed(1.0), params, reduced=True)
            gaps.append(np.max(np.abs(full.phi0 - red.phi0)) / delta)
        assert max(gaps) / min(gaps) == pytest.approx(1.0, rel=0.05)

    def test_zero_initial_conditions(self):
        prof = solve_phi0_ode(bump_seed(1.0), PARAMS)
        assert prof.phi0[0] == 0.0 and prof.dphi0[0] == 0.0

    def test_sample_floor(self):
        with pytest.raises(ResolutionError):
            solve_phi0_ode(bump_seed(1.0), PARAMS, n_samples=32)

    def test_hyperbolicity_guard(self):
        with pytest.raises(InvalidModelError):
            solve_phi0_ode(sine_seed(20.0), ModelParams(-1.0, 0.1, 5.0))


class TestDefaultGrid:
    def test_annulus_edges_on_nodes(self):
        grid = default_grid(PARAMS, cells_per_delta=128)
        r = grid.nodes()
        for target in (PARAMS.r0, PARAMS.r0 + PARAMS.delta):
            assert np.min(np.abs(r - target)) < 1e-9 * PARAMS.r0

    def test_covers_run(self):
        grid = default_grid(PARAMS, t_end=-1.0, pad=0.25)
        assert grid.r_min <= 0.75 + 1e-12
        assert grid.r_max >= PARAMS.r0 + PARAMS.delta + 0.25 - 1e-12

    def test_cell_width(self):
        grid = default_grid(PARAMS, cells_per_delta=256)
        assert grid.dr == pytest.approx(PARAMS.delta / 256, rel=1e-12)


@pytest.fixture(scope="module")
def data():
    grid = default_grid(PARAMS, cells_per_delta=128)
    return build_initial_data(bump_seed(1.0), PARAMS, grid)


class TestSliceConstruction:

    def test_interior_is_exactly_zero(self, data):
        r = data.grid.nodes()
        inside = r < PARAMS.r0
        assert inside.sum() > 0
        assert np.all(data.phi[inside] == 0.0)
        assert np.all(data.dtphi[inside] == 0.0)
        assert np.all(data.drphi[inside] == 0.0)

    def test_dtphi_matches_scaled_seed(self, data):
        r = data.grid.nodes()
        s = (r - PARAMS.r0) / PARAMS.delta
        on = (s > 0.0) & (s < 1.0)
        expected = PARAMS.pulse_amp * data.seed.phi1(s[on])
        assert np.max(np.abs(data.dtphi[on] - expected)) < 1e-14

    def test_exterior_tail_is_harmonic(self, data):
        r = data.grid.nodes()
        out = r > PARAMS.r0 + PARAMS.delta + data.grid.dr
        assert out.sum() > 0
        assert np.max(np.abs(data.phi[out] * r[out] - data.tail_coef)) < 1e-14
        assert np.max(np.abs(data.drphi[out] + data.tail_coef / r[out] ** 2)) < 1e-14
        assert np.all(data.dtphi[out] == 0.0)

    def test_phi_continuous_at_outer_edge(self, data):
        r = data.grid.nodes()
        j = int(np.argmin(np.abs(r - (PARAMS.r0 + PARAMS.delta))))
        # Value at the edge node comes from the profile; one node out is tail.
        assert data.phi[j + 1] - data.phi[j] == pytest.approx(
            data.phi[j] - data.phi[j - 1], abs=5e-3 * abs(data.phi[j])
        )

    def test_trivial_seed_short_circuits(self):
        grid = default_grid(PARAMS, cells_per_delta=128)
        data = build_initial_data(zero_seed(), PARAMS, grid)
        assert data.profile is None
        assert not data.pulse_like
        assert data.tail_coef == 0.0
        assert not data.phi.any() and not data.dtphi.any() and not data.drphi.any()

    def test_grid_must_reach_beyond_annulus(self):
        with pytest.raises(ResolutionError):
            build_initial_data(
                bump_seed(1.0),
                PARAMS,
                GridSpec(r_min=0.75, r_max=PARAMS.r0 + 0.05, n_cells=4096),
            )

    def test_grid_must_start_below_annulus(self):
        with pytest.raises(ResolutionError):
            build_initial_data(
                bump_seed(1.0),
                PARAMS,
                GridSpec(r_min=PARAMS.r0 - 0.01, r_max=PARAMS.r0 + 1.0, n_cells=4096),
            )

    def test_cells_per_delta_floor(self):
        with pytest.raises(ResolutionError):
            build_initial_data(
                bump_seed(1.0),
                PARAMS,
                GridSpec(r_min=0.75, r_max=11.0, n_cells=1024),
            )


class TestRadiationBounds:
    def test_frozen_ratios(self):
        grid = default_grid(PARAMS, cells_per_delta=64)
        rep = verify_radiation_bounds(build_initial_data(bump_seed(1.0), PARAMS, grid))
        assert rep.ratio1 == pytest.approx(0.3831096587266158, rel=1e-6)
        assert rep.ratio2 == pytest.approx(0.8303051046341378, rel=1e-6)

    def test_ratios_are_order_one(self):
        params = ModelParams(1.0, 0.1, 5.0)
        grid = default_grid(params, cells_per_delta=64)
        rep = verify_radiation_bounds(build_initial_data(bump_seed(1.0), params, grid))
        assert 0.05 < rep.ratio1 < 5.0
        assert 0.05 < rep.ratio2 < 5.0

    def test_sups_are_delta_suppressed(self):
        # Raw sups carry the delta**1.5 suppression the ratios divide out.
        grid = default_grid(PARAMS, cells_per_delta=64)
        rep = verify_radiation_bounds(build_initial_data(bump_seed(1.0), PARAMS, grid))
        assert rep.sup_lbar == pytest.approx(
            rep.ratio1 * PARAMS.delta**1.5 / PARAMS.r0**2, rel=1e-12
        )
        assert rep.sup_lbar < PARAMS.pulse_amp / 10.0

    def test_trivial_report_is_zero(self):
        grid = default_grid(PARAMS, cells_per_delta=64)
        rep = verify_radiation_bounds(build_initial_data(zero_seed(), PARAMS, grid))
        assert (rep.sup_lbar, rep.sup_lbar2, rep.ratio1, rep.ratio2) == (0, 0, 0, 0)
