"""Slice energies, seed-analytic initial energies, and the scattering probe."""
from __future__ import annotations

import json
import math

import numpy as np
import pytest

from shocklab import (
    InterpolationRangeError,
    ModelParams,
    SliceInvalidError,
    build_initial_data,
    bump_seed,
    default_grid,
    initial_energy,
    scattering_probe,
    sine_seed,
    slice_energy,
    zero_seed,
)
from shocklab.energy_monitor import energies_over_time, write_energies, write_scattering

PARAMS = ModelParams(g2=1.0, delta=0.05, r0=10.0)


class TestInitialEnergy:
    def test_frozen_sine_value(self):
        grid = default_grid(PARAMS, cells_per_delta=64)
        rec = initial_energy(build_initial_data(sine_seed(1.0), PARAMS, grid))
        # Leading order is 8*pi**3 = 248.05; the rest is the finite-(delta, r0)
        # correction captured by the frozen value.
        assert rec.e0_dtphi == pytest.approx(249.29378516105228, rel=1e-9)
        assert rec.e0_dtphi == pytest.approx(8.0 * math.pi**3, rel=0.01)

    def test_degenerate_energy_is_small(self):
        # E1 measures outgoing radiation content; the data are built to
        # make it vanish at leading order.
        grid = default_grid(PARAMS, cells_per_delta=64)
        rec = initial_energy(build_initial_data(sine_seed(1.0), PARAMS, grid))
        assert rec.e1_dtphi < 1e-5 * rec.e0_dtphi
        assert rec.e1_drphi < 1e-5 * rec.e0_drphi

    def test_trivial_data(self):
        grid = default_grid(PARAMS, cells_per_delta=64)
        rec = initial_energy(build_initial_data(zero_seed(), PARAMS, grid))
        assert (rec.e0_dtphi, rec.e1_dtphi, rec.e0_drphi, rec.e1_drphi) == (0, 0, 0, 0)

    def test_matches_evolved_first_snapshot(self, small_shock_run):
        # Independent routes: seed-profile quadrature vs fan measurement of
        # the evolved grid fields at t0.
        analytic = initial_energy(small_shock_run.data)
        recs = energies_over_time(small_shock_run.traj)
        assert recs[0].t == small_shock_run.traj.t0
        assert recs[0].e0_dtphi == pytest.approx(analytic.e0_dtphi, rel=5e-3)
        assert recs[0].e0_drphi == pytest.approx(analytic.e0_drphi, rel=5e-3)


class TestEnergiesOverTime:
    def test_one_record_per_snapshot(self, small_shock_run):
        recs = energies_over_time(small_shock_run.traj)
        assert len(recs) == len(small_shock_run.traj.snapshots)

    def test_e0_stays_bounded_through_collapse(self, small_shock_run):
        recs = energies_over_time(small_shock_run.traj)
        e0 = np.array([r.e0_dtphi for r in recs])
        assert float(e0.max()) < 1.5 * float(e0[0])
        assert float(e0.min()) > 0.5 * float(e0[0])

    def test_degenerate_energy_stays_subordinate(self, small_shock_run):
        recs = energies_over_time(small_shock_run.traj)
        e0 = max(r.e0_dtphi for r in recs)
        e1 = max(r.e1_dtphi for r in recs)
        assert e1 < 1e-4 * e0


class TestSliceEnergyValidation:
    def test_u_outside_fan_range(self, small_shock_run):
        traj = small_shock_run.traj
        with pytest.raises(InterpolationRangeError):
            slice_energy(traj.snapshots[0], traj.fan, 10.0 * traj.params.delta)
        with pytest.raises(InterpolationRangeError):
            slice_energy(traj.snapshots[0], traj.fan, -0.01)

    def test_time_must_match_a_measurement(self, small_shock_run):
        import dataclasses

        traj = small_shock_run.traj
        off_time = dataclasses.replace(traj.snapshots[0], t=traj.t0 + 1e-4)
        with pytest.raises(SliceInvalidError):
            slice_energy(off_time, traj.fan, traj.params.delta)


@pytest.fixture(scope="module")
def table():
    return scattering_probe(bump_seed(1.0), 0.05, [10.0, 20.0, 40.0, 80.0])


class TestScatteringProbe:

    def test_frozen_limit(self, table):
        assert table.limit_tpsi_sq == pytest.approx(82.01625687959124, rel=1e-9)

    def test_first_order_convergence_in_r0(self, table):
        # Consecutive r0-doublings halve the distance to the limit.
        ratios = table.rel_error[:-1] / table.rel_error[1:]
        assert np.all(np.abs(ratios - 2.0) < 0.1)

    def test_rel_error_identity(self, table):
        rel = (table.tpsi_sq - table.limit_tpsi_sq) / table.limit_tpsi_sq
        assert np.max(np.abs(rel - table.rel_error)) < 1e-12

    def test_table_echo(self, table):
        assert table.delta == 0.05
        assert np.array_equal(table.r0, [10.0, 20.0, 40.0, 80.0])
        assert np.all(np.isfinite(table.e0_dtphi))
        assert np.all(np.diff(table.tpsi_sq) < 0.0)  # decreasing toward limit


class TestWriters:
    def test_energies_csv(self, small_shock_run, tmp_path):
        recs = energies_over_time(small_shock_run.traj)
        path = tmp_path / "energies.csv"
        write_energies(recs, str(path))
        first = path.read_bytes()
        write_energies(recs, str(path))
        assert path.read_bytes() == first
        rows = np.genfromtxt(path, delimiter=",", names=True)
        assert rows.shape[0] == len(recs)
        assert rows["t"][0] == recs[0].t
        assert rows["E0_dtphi"][-1] == pytest.approx(recs[-1].e0_dtphi, rel=1e-15)

    def test_scattering_json(self, tmp_path):
        table = scattering_probe(bump_seed(1.0), 0.1, [5.0, 10.0, 20.0], n_samples=1025)
        path = tmp_path / "scattering.json"
        write_scattering(table, str(path))
        doc = json.loads(path.read_text())
        assert doc["delta"] == 0.1
        assert doc["r0"] == [5.0, 10.0, 20.0]
        assert len(doc["rel_error"]) == 3

    def test_scattering_needs_three_points(self):
        from shocklab import InvalidModelError

        with pytest.raises(InvalidModelError):
            scattering_probe(bump_seed(1.0), 0.1, [5.0, 10.0])
