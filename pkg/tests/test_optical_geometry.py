"""Label-space differencing, interpolation, and fan invariants."""
from __future__ import annotations

import numpy as np
import pytest

from shocklab import FanResolutionError, InterpolationRangeError
from shocklab.optical_geometry import (
    FanTracer,
    inverse_density,
    interp4_uniform,
    label_derivative,
    mu_from_positions,
    slice_quantities,
    trace_fan,
    transport_mu,
    trchib_diagnostics,
    write_fan,
)


class TestLabelDerivative:
    def test_quadratic_exact_everywhere(self):
        h = 0.37
        u = h * np.arange(12)
        d = label_derivative(3.0 * u**2 - u + 2.0, h)
        assert np.max(np.abs(d - (6.0 * u - 1.0))) < 1e-10

    def test_quartic_exact_in_interior(self):
        h = 0.2
        u = h * np.arange(15)
        d = label_derivative(u**4, h)
        assert np.max(np.abs(d[2:-2] - 4.0 * u[2:-2] ** 3)) < 1e-9

    def test_periodic_fourth_order(self):
        jump = 2.0
        errs = []
        for n in (64, 128):
            h = 1.0 / n
            u = h * np.arange(n)
            vals = jump * u + np.sin(2.0 * np.pi * u)
            d = label_derivative(vals, h, periodic_jump=jump)
            exact = jump + 2.0 * np.pi * np.cos(2.0 * np.pi * u)
            errs.append(np.max(np.abs(d - exact)))
        assert errs[0] < 1e-4
        assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.2)

    def test_second_order_fallback(self):
        h = 0.5
        u = h * np.arange(9)
        d = label_derivative(u**2, h, order=2)
        assert np.max(np.abs(d - 2.0 * u)) < 1e-10

    def test_too_few_samples(self):
        with pytest.raises(FanResolutionError):
            label_derivative(np.array([1.0, 2.0]), 0.1)

    def test_bad_spacing(self):
        with pytest.raises(FanResolutionError):
            label_derivative(np.arange(5.0), 0.0)

    def test_batched_rows(self):
        h = 0.1
        u = h * np.arange(10)
        vals = np.stack([u**2, 2.0 * u**2])
        d = label_derivative(vals, h)
        assert np.max(np.abs(d[0] - 2.0 * u)) < 1e-10
        assert np.max(np.abs(d[1] - 4.0 * u)) < 1e-10


class TestInterp4:
    def test_cubic_exact(self):
        x0, dx = -2.0, 0.3
        nodes = x0 + dx * np.arange(20)
        f = lambda x: x**3 - 2.0 * x**2 + 0.5 * x - 7.0
        x = np.linspace(nodes[0], nodes[-1], 173)
        assert np.max(np.abs(interp4_uniform(x0, dx, f(nodes), x) - f(x))) < 1e-11

    def test_exact_at_nodes(self):
        x0, dx = 1.0, 0.25
        vals = np.random.default_rng(7).normal(size=16)
        got = interp4_uniform(x0, dx, vals, x0 + dx * np.arange(16))
        assert np.max(np.abs(got - vals)) < 1e-13

    def test_fourth_order_on_sine(self):
        errs = []
        for n in (32, 64):
            dx = 1.0 / n
            nodes = dx * np.arange(n + 1)
            x = np.linspace(0.05, 0.95, 301)
            got = interp4_uniform(0.0, dx, np.sin(2.0 * np.pi * nodes), x)
            errs.append(np.max(np.abs(got - np.sin(2.0 * np.pi * x))))
        assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.35)


class TestMuFromPositions:
    def test_linear_fan_exact(self):
        # Rays x = u * (1 - t) compress uniformly: mu = 1 - t for unit weight.
        h = 0.01
        u = h * np.arange(101)
        for t in (0.0, 0.5, 0.9):
            mu = mu_from_positions(u * (1.0 - t), h, 1.0)
            assert np.max(np.abs(mu - (1.0 - t))) < 1e-12

    def test_weights_scale(self):
        h = 0.1
        u = h * np.arange(21)
        w = np.linspace(0.5, 1.0, 21)
        mu = mu_from_positions(u.copy(), h, w)
        assert np.max(np.abs(mu - w)) < 1e-12


class TestSliceQuantities:
    def test_zero_fields(self):
        r = np.linspace(4.0, 5.0, 101)
        out = slice_quantities(r, np.zeros(101), np.zeros(101), 1.0)
        assert np.all(out["c"] == 1.0)
        for key in ("dtp", "dtq", "lbar_rho", "m_per_kappa", "e"):
            assert not out[key].any()

    def test_constant_fields(self):
        r = np.linspace(4.0, 5.0, 201)
        a, b, g2 = 0.2, 0.1, 1.0
        out = slice_quantities(r, np.full(201, a), np.full(201, b), g2)
        c2 = 1.0 / (1.0 + 3.0 * g2 * a * a)
        dtp = c2 * 2.0 * b / r
        assert np.max(np.abs(out["dtp"] - dtp)) < 1e-12
        assert np.max(np.abs(out["lbar_rho"] - 2.0 * a * dtp)) < 1e-12
        # Edge stencils leave roundoff-scale residue on constant fields.
        assert np.max(np.abs(out["m_per_kappa"])) < 1e-12


class TestFanInvariants:
    def test_time_axis(self, small_shock_run):
        fan = small_shock_run.traj.fan
        assert fan.t[0] == small_shock_run.traj.t0
        assert np.all(np.diff(fan.t) > 0.0)

    def test_initial_density_is_unity(self, small_shock_run):
        # kappa = 1 on the data slice, so mu = c there.
        fan = small_shock_run.traj.fan
        nr = fan.n_report
        assert np.max(np.abs(fan.mu_geom[0, :nr] - fan.c[0, :nr])) < 1e-9

    def test_report_labels_span_pulse(self, small_shock_run):
        fan = small_shock_run.traj.fan
        u = fan.u_report
        delta = small_shock_run.params.delta
        assert u[0] == 0.0
        assert u[-1] == pytest.approx(delta, rel=1e-12)
        assert fan.labels.size > fan.n_report  # buffer rays exist

    def test_no_reported_ray_truncates(self, small_shock_run):
        fan = small_shock_run.traj.fan
        assert not fan.truncated[: fan.n_report].any()

    def test_mu_min_series_reaches_stop(self, small_shock_run):
        t, mu = small_shock_run.traj.fan.mu_min_series()
        assert mu[-1] < 0.05
        assert np.all(mu <= 1.0)

    def test_rays_do_not_cross_before_stop(self, small_shock_run):
        assert small_shock_run.traj.fan.first_crossing_t is None

    def test_index_at_bounds(self, small_shock_run):
        fan = small_shock_run.traj.fan
        assert fan.index_at(fan.t[0]) == 0
        assert fan.index_at(fan.t[-1]) == fan.t.size - 1
        with pytest.raises(InterpolationRangeError):
            fan.index_at(fan.t[0] - 1.0)

    def test_inverse_density_matches_cached_column(self, small_shock_run):
        fan = small_shock_run.traj.fan
        t_mid = float(fan.t[fan.t.size // 2])
        u, mu = inverse_density(fan, t_mid)
        k = fan.index_at(t_mid)
        assert np.array_equal(u, fan.u_report)
        assert np.max(np.abs(mu - fan.mu_geom[k, : fan.n_report])) < 1e-12

    def test_transport_shapes(self, small_shock_run):
        fan = small_shock_run.traj.fan
        mu_tr, lb = transport_mu(fan)
        assert mu_tr.shape == (fan.t.size, fan.n_report)
        assert lb.shape == mu_tr.shape

    def test_trchib_transport_agrees(self, small_shock_run):
        d = trchib_diagnostics(small_shock_run.traj.fan)
        scale = float(np.max(np.abs(d.trchib)))
        assert d.max_residual < 1e-3 * scale

    def test_trchib_prime_is_small(self, small_shock_run):
        # The ingoing expansion stays within O(delta^(1/2)) of the
        # reference cone value -2/(u - t).
        d = trchib_diagnostics(small_shock_run.traj.fan)
        assert np.max(np.abs(d.trchib_prime)) < 0.1 * np.max(np.abs(d.trchib))

    def test_min_ray_count(self, small_shock_run):
        with pytest.raises(FanResolutionError):
            FanTracer(small_shock_run.params, n_rays=2)


class TestOfflineTrace:
    def test_offline_matches_online(self, small_shock_run):
        """Re-trace from snapshots and compare the compression records."""
        traj = small_shock_run.traj
        off = trace_fan(traj, n_rays=33)
        t_on, m_on = traj.fan.mu_min_series()
        t_off, m_off = off.mu_min_series()
        m_ref = np.interp(t_off, t_on, m_on)
        broad = m_ref >= 0.8
        late = m_ref >= 0.5
        assert broad.sum() > 20
        rel_broad = np.max(np.abs(m_off[broad] - m_ref[broad]) / m_ref[broad])
        rel_late = np.max(np.abs(m_off[late] - m_ref[late]) / m_ref[late])
        # The snapshot cadence bounds offline fidelity; see trace_fan notes.
        assert rel_broad < 0.025, f"broad-fan disagreement {rel_broad:.4f}"
        assert rel_late < 0.15, f"mid-collapse disagreement {rel_late:.4f}"

    def test_needs_two_snapshots(self, small_shock_run):
        import dataclasses

        traj = small_shock_run.traj
        crippled = dataclasses.replace(traj, snapshots=traj.snapshots[:1])
        with pytest.raises(InterpolationRangeError):
            trace_fan(crippled)


class TestWriteFan:
    def test_round_trip_and_determinism(self, small_shock_run, tmp_path):
        fan = small_shock_run.traj.fan
        path = tmp_path / "fan.csv"
        write_fan(fan, str(path), max_times=40)
        first = path.read_bytes()
        write_fan(fan, str(path), max_times=40)
        assert path.read_bytes() == first

        rows = np.genfromtxt(path, delimiter=",", names=True)
        nr = fan.n_report
        assert rows.shape[0] <= 40 * nr
        assert rows.shape[0] % nr == 0
        # First block is the first measurement; spot-check one column.
        got_mu = rows["mu_geom"][:nr]
        assert np.max(np.abs(got_mu - fan.mu_geom[0, :nr])) < 1e-12
        assert rows["t"][0] == fan.t[0]
        assert rows["t"][-1] == fan.t[-1]
