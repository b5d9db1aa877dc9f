import numpy as np
import pytest
from scipy import stats

import picrom.quiet_start as qs
from picrom.pic import PhysicalConstants
from picrom.quiet_start import ScenarioSpec


class TestHammersley:
    def test_radical_inverse_first_values(self):
        vals = qs.hammersley(3, dim_index=1)
        assert vals == pytest.approx([0.5, 0.25, 0.75])

    def test_equispaced_dimension(self):
        assert qs.hammersley(4, dim_index=0) == pytest.approx(
            [0.125, 0.375, 0.625, 0.875])

    def test_distinct_in_unit_interval(self):
        for dim in (0, 1):
            v = qs.hammersley(1000, dim_index=dim)
            assert np.all((v >= 0) & (v < 1))
            assert np.unique(v).size == 1000


class TestInversePosition:
    def test_small_alpha_limit(self):
        u = np.linspace(0.05, 0.95, 7)
        x = qs.inverse_cdf_position(u, alpha=1e-12, k=0.5)
        assert x == pytest.approx(2 * np.pi * u / 0.5, abs=1e-9)

    def test_endpoints(self):
        assert qs.inverse_cdf_position(np.array([0.0]), 0.3, 0.5)[0] == pytest.approx(0.0, abs=1e-12)
        x = qs.inverse_cdf_position(np.array([1.0 - 1e-12]), 0.3, 0.5)[0]
        assert x == pytest.approx(2 * np.pi / 0.5, rel=1e-9)

    def test_against_bisection_oracle(self):
        alpha, k, u = 0.5, 0.5, 0.3
        x = float(qs.inverse_cdf_position(np.array([u]), alpha, k)[0])
        lo, hi = 0.0, 2 * np.pi / k
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if (k * mid + alpha * np.sin(k * mid)) / (2 * np.pi) < u:
                lo = mid
            else:
                hi = mid
        assert abs(x - 0.5 * (lo + hi)) < 1e-12
        # residual contract
        assert abs((k * x + alpha * np.sin(k * x)) / (2 * np.pi) - u) <= 1e-12

    def test_strictly_increasing(self):
        u = np.linspace(0, 1, 10_000, endpoint=False)
        x = qs.inverse_cdf_position(u, alpha=0.465, k=0.5)
        assert np.all(np.diff(x) > 0)


class TestInverseVelocity:
    def test_median_is_zero(self):
        assert qs.inverse_cdf_velocity(np.array([0.5]), 1.0, "linear-landau")[0] == pytest.approx(0.0, abs=1e-14)

    def test_one_sigma_quantile(self):
        v = qs.inverse_cdf_velocity(np.array([0.841344746]), 1.0, "linear-landau")[0]
        assert v == pytest.approx(1.0, abs=1e-8)

    def test_two_stream_first_component_median(self):
        v = qs.inverse_cdf_velocity(np.array([0.25]), 1.0, "two-stream")[0]
        assert v == pytest.approx(-3.0, abs=1e-14)

    def test_degenerate_u_rejected(self):
        for bad in (0.0, 1.0):
            with pytest.raises(ValueError):
                qs.inverse_cdf_velocity(np.array([bad]), 1.0, "linear-landau")

    def test_clamped_to_velocity_domain(self):
        v = qs.inverse_cdf_velocity(np.array([1 - 1e-16]), 1.0, "linear-landau")
        assert v[0] <= qs.V_DOMAIN[1]


class TestQuietStart:
    def spec(self, **kw):
        base = dict(case="linear-landau", alpha=0.03, sigma=1.0, k=0.5,
                    n_particles=10_000, T=1.0, dt=0.01)
        base.update(kw)
        return ScenarioSpec(**base)

    def test_deterministic(self):
        s1 = qs.quiet_start(self.spec())
        s2 = qs.quiet_start(self.spec())
        assert np.array_equal(s1.x, s2.x) and np.array_equal(s1.v, s2.v)

    def test_density_mode_amplitude(self):
        spec = self.spec()
        state = qs.quiet_start(spec)
        L = spec.grid.domain_length
        hist, _ = np.histogram(state.x, bins=48, range=(0, L))
        density = hist / hist.mean() - 1.0
        coeff = np.fft.rfft(density) / density.size
        amp = 2 * np.abs(coeff[1])  # amplitude of mode k (one period in the box)
        assert amp == pytest.approx(spec.alpha, rel=0.2)

    def test_velocity_mean_small(self):
        state = qs.quiet_start(self.spec())
        assert abs(state.v.mean()) <= 1e-3 * 1.0

    def test_kolmogorov_smirnov_marginals(self):
        n = 100_000
        spec = self.spec(n_particles=n)
        state = qs.quiet_start(spec)
        k, alpha = spec.k, spec.alpha

        def pos_cdf(x):
            return (k * x + alpha * np.sin(k * x)) / (2 * np.pi)

        d_x = stats.kstest(np.sort(state.x), pos_cdf).statistic
        d_v = stats.kstest(np.sort(state.v), stats.norm(scale=spec.sigma).cdf).statistic
        assert d_x <= 2 / np.sqrt(n)
        assert d_v <= 2 / np.sqrt(n)

    def test_two_stream_populations(self):
        spec = self.spec(case="two-stream", sigma=1.0, k=0.2, n_particles=2000)
        state = qs.quiet_start(spec)
        # stratified 50/50 split up to Gaussian tail overlap across v = 0
        assert abs(np.sum(state.v < 0) - 1000) <= 10
        assert np.mean(state.v[state.v < 0]) == pytest.approx(-3.0, abs=0.1)
        assert np.mean(state.v[state.v > 0]) == pytest.approx(3.0, abs=0.1)


def test_scenario_spec_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(case="linear-landau", alpha=0.03, sigma=1.0, k=0.5,
                     n_particles=100, T=1.0, dt=0.3)  # T/dt not integral
    with pytest.raises(ValueError):
        ScenarioSpec(case="bogus", alpha=0.03, sigma=1.0, k=0.5,
                     n_particles=100, T=1.0, dt=0.1)
