import numpy as np
import pytest

import picrom.diagnostics as dg


class TestPeriodicDifference:
    def test_plain_difference_inside_domain(self):
        d = dg.periodic_difference(np.array([0.2]), np.array([0.1]), 1.0)
        assert d[0] == pytest.approx(0.1)

    def test_wraps_to_minimal_image(self):
        d = dg.periodic_difference(np.array([0.95]), np.array([0.05]), 1.0)
        assert d[0] == pytest.approx(-0.1)

    def test_antisymmetric(self, rng):
        a = rng.uniform(0, 4, size=50)
        b = rng.uniform(0, 4, size=50)
        assert np.allclose(dg.periodic_difference(a, b, 4.0),
                           -dg.periodic_difference(b, a, 4.0))

    def test_magnitude_at_most_half_domain(self, rng):
        a = rng.uniform(0, 7, size=200)
        b = rng.uniform(0, 7, size=200)
        assert np.all(np.abs(dg.periodic_difference(a, b, 7.0)) <= 3.5)


class TestRelativeErrors:
    def make_traj(self, rng, n=20, steps=5):
        x = rng.uniform(0, 4, size=(n, steps))
        v = rng.standard_normal((n, steps))
        return np.vstack([x, v])

    def test_identical_is_zero(self, rng):
        ref = self.make_traj(rng)
        rep = dg.relative_errors(ref, ref, domain_length=4.0)
        assert rep.err_x_mu == 0.0
        assert rep.err_v_mu == 0.0
        assert np.all(rep.err_x_t == 0) and np.all(rep.err_v_t == 0)

    def test_velocity_closed_form_ratio(self, rng):
        ref = self.make_traj(rng)
        test = ref.copy()
        n = ref.shape[0] // 2
        delta = 0.25
        test[n:] = ref[n:] + delta
        rep = dg.relative_errors(ref, test, domain_length=4.0)
        for j in range(ref.shape[1]):
            expected = delta * np.sqrt(n) / np.linalg.norm(ref[n:, j])
            assert rep.err_v_t[j] == pytest.approx(expected, rel=1e-12)
        assert rep.err_x_mu == 0.0
        expected_mu = delta * np.sqrt(n * ref.shape[1]) / np.linalg.norm(ref[n:])
        assert rep.err_v_mu == pytest.approx(expected_mu, rel=1e-12)

    def test_position_error_uses_periodic_distance(self, rng):
        ref = self.make_traj(rng)
        test = ref.copy()
        n = ref.shape[0] // 2
        test[:n] = np.mod(ref[:n] + 4.0, 4.0)  # full wrap: same physical points
        rep = dg.relative_errors(ref, test, domain_length=4.0)
        assert rep.err_x_mu < 1e-12

    def test_particle_permutation_changes_error(self, rng):
        # errors are particle-wise, not distribution-wise: permuting
        # labels of the test trajectory must register as error
        ref = self.make_traj(rng)
        test = ref.copy()
        n = ref.shape[0] // 2
        perm = rng.permutation(n)
        test[:n] = test[:n][perm]
        rep = dg.relative_errors(ref, test, domain_length=4.0)
        assert rep.err_x_mu > 1e-3

    def test_shape_mismatch_rejected(self, rng):
        ref = self.make_traj(rng)
        with pytest.raises(ValueError):
            dg.relative_errors(ref, ref[:, :-1], domain_length=4.0)

    def test_aggregate_over_parameters(self, rng):
        reps = [dg.relative_errors(self.make_traj(rng),
                                   self.make_traj(rng), 4.0) for _ in range(3)]
        agg = dg.aggregate_over_parameters(reps)
        stacked = np.stack([r.err_x_t for r in reps])
        assert np.allclose(agg["err_mean_x_t"], stacked.mean(axis=0))
        assert np.allclose(agg["err_max_x_t"], stacked.max(axis=0))
        assert np.allclose(agg["err_min_x_t"], stacked.min(axis=0))


class TestFitRate:
    def test_synthetic_damped_oscillation(self):
        t = np.linspace(0, 20, 4001)
        energy = np.exp(-0.3 * t) * (1 + 0.5 * np.cos(7 * t)) ** 2
        fit = dg.fit_rate(t, energy, window=(1.0, 18.0))
        assert fit.slope == pytest.approx(-0.3, rel=0.02)
        assert fit.r_squared > 0.99

    def test_growth_rate_sign(self):
        t = np.linspace(0, 10, 2001)
        energy = np.exp(0.4 * t) * (1 + 0.3 * np.sin(5 * t)) ** 2
        fit = dg.fit_rate(t, energy, window=(0.5, 9.5))
        assert fit.slope == pytest.approx(0.4, rel=0.05)

    def test_constant_energy_slope_zero(self):
        t = np.linspace(0, 5, 100)
        fit = dg.fit_rate(t, np.full_like(t, 2.0), window=(0.0, 5.0))
        assert abs(fit.slope) < 1e-14

    def test_positive_scaling_invariance(self):
        t = np.linspace(0, 20, 4001)
        energy = np.exp(-0.3 * t) * (1 + 0.5 * np.cos(7 * t)) ** 2
        f1 = dg.fit_rate(t, energy, window=(1.0, 18.0))
        f2 = dg.fit_rate(t, 137.0 * energy, window=(1.0, 18.0))
        assert abs(f1.slope - f2.slope) < 1e-12

    def test_too_few_peaks_raises(self):
        t = np.linspace(0, 1, 50)
        energy = np.exp(-t)  # monotone: no interior maxima
        with pytest.raises(ValueError):
            dg.fit_rate(t, energy, window=(0.0, 1.0))

    def test_window_restricts_peaks(self):
        t = np.linspace(0, 20, 4001)
        energy = np.exp(-0.3 * t) * (1 + 0.5 * np.cos(7 * t)) ** 2
        fit = dg.fit_rate(t, energy, window=(5.0, 15.0))
        peak_times = np.array([p[0] for p in fit.peaks])
        assert np.all(peak_times >= 5.0) and np.all(peak_times <= 15.0)


class TestHistogram:
    def test_unit_mass(self, rng):
        x = rng.uniform(0, 4, 1000)
        v = rng.standard_normal(1000)
        h = dg.phase_space_histogram(x, v, 16, 16, 4.0)
        assert h.sum() == pytest.approx(1.0)

    def test_single_cell_delta(self):
        x = np.full(10, 0.1)
        v = np.full(10, 0.0)
        h = dg.phase_space_histogram(x, v, 4, 4, 4.0, v_range=(-2, 2))
        assert np.count_nonzero(h) == 1
        assert h[0, 2] == pytest.approx(1.0)  # first x bin, v = 0 in bin 2

    def test_positions_wrapped_into_domain(self):
        x = np.array([4.1, -0.1])  # same two physical points as [0.1, 3.9]
        v = np.zeros(2)
        h1 = dg.phase_space_histogram(x, v, 8, 4, 4.0)
        h2 = dg.phase_space_histogram(np.array([0.1, 3.9]), v, 8, 4, 4.0)
        assert np.array_equal(h1, h2)

    def test_uniform_flat_marginal(self, rng):
        n, bins = 400_000, 8
        x = rng.uniform(0, 4, n)
        v = rng.standard_normal(n)
        h = dg.phase_space_histogram(x, v, bins, 16, 4.0)
        marginal = h.sum(axis=1)
        assert marginal.std() / marginal.mean() < 0.02
