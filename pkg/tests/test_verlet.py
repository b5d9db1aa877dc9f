import numpy as np
import pytest

from picrom.verlet import SeparableSystem, integrate, verlet_step

from conftest import rel_err


def harmonic():
    return SeparableSystem(grad_potential=lambda x: x,
                           grad_kinetic=lambda v: v, dim=1)


class TestVerletStep:
    def test_harmonic_closed_form(self):
        dt = 0.1
        x, v = verlet_step(np.array([1.0]), np.array([0.0]), harmonic(), dt)
        assert x[0] == pytest.approx(1 - dt**2 / 2, rel=1e-14)
        assert v[0] == pytest.approx(-dt + dt**3 / 4, rel=1e-14)

    def test_pure_drift(self, rng):
        sys = SeparableSystem(grad_potential=lambda x: np.zeros_like(x),
                              grad_kinetic=lambda v: v, dim=5)
        x0, v0 = rng.standard_normal(5), rng.standard_normal(5)
        x, v = verlet_step(x0, v0, sys, 0.25)
        assert rel_err(x, x0 + 0.25 * v0) < 1e-14
        assert np.array_equal(v, v0)

    def test_time_reversibility(self, rng):
        x0, v0 = rng.standard_normal(1), rng.standard_normal(1)
        x1, v1 = verlet_step(x0, v0, harmonic(), 0.05)
        # reverse: flip velocity, step, flip again
        x2, v2 = verlet_step(x1, -v1, harmonic(), 0.05)
        assert rel_err(x2, x0) < 1e-12
        assert rel_err(-v2, v0) < 1e-12

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValueError):
            verlet_step(np.array([1.0]), np.array([0.0]), harmonic(), 0.0)

    def test_nonfinite_state_rejected(self):
        sys = SeparableSystem(grad_potential=lambda x: np.full_like(x, np.inf),
                              grad_kinetic=lambda v: v, dim=1)
        with pytest.raises(FloatingPointError):
            verlet_step(np.array([1.0]), np.array([0.0]), sys, 0.1)


class TestIntegrate:
    def test_zero_steps_identity(self, rng):
        x0, v0 = rng.standard_normal(3), rng.standard_normal(3)
        x, v = integrate(x0, v0, harmonic(), 0.1, 0)
        assert np.array_equal(x, x0) and np.array_equal(v, v0)

    def test_energy_oscillation_bound(self):
        x, v = np.array([1.0]), np.array([0.0])
        h0 = 0.5 * (x @ x + v @ v)
        x, v = integrate(x, v, harmonic(), 1e-2, 10_000)
        h = 0.5 * (x @ x + v @ v)
        assert abs(h - h0) / h0 <= 1e-4

    def test_observer_capture_count_and_stride(self):
        seen = []
        integrate(np.array([1.0]), np.array([0.0]), harmonic(), 0.01, 100,
                  observer=lambda s, x, v: seen.append(s), observer_stride=7)
        assert seen == [0] + [s for s in range(1, 101) if s % 7 == 0]

    def test_second_order_convergence(self):
        # global error vs exact cos(t) should drop ~4x when dt halves
        def err(dt):
            n = round(2.0 / dt)
            x, v = integrate(np.array([1.0]), np.array([0.0]), harmonic(), dt, n)
            return abs(x[0] - np.cos(2.0))

        ratio = err(0.01) / err(0.005)
        assert 3.5 <= ratio <= 4.5

    def test_momentum_conserved_when_forces_balance(self, rng):
        # interaction force with zero sum: pairwise spring around the mean
        def grad(x):
            return x - x.mean()

        sys = SeparableSystem(grad_potential=grad, grad_kinetic=lambda v: v, dim=6)
        x0, v0 = rng.standard_normal(6), rng.standard_normal(6)
        p0 = v0.sum()
        x, v = integrate(x0, v0, sys, 0.01, 500)
        assert abs(v.sum() - p0) <= 1e-12 * max(abs(p0), 1.0) * 500


def test_symplecticity_of_step_jacobian():
    # finite-difference Jacobian of one step for a 1-dof nonlinear system
    sys = SeparableSystem(grad_potential=lambda x: np.sin(x),
                          grad_kinetic=lambda v: v, dim=1)
    dt, eps = 1e-2, 1e-6
    z0 = np.array([0.7, -0.3])

    def step(z):
        x, v = verlet_step(np.array([z[0]]), np.array([z[1]]), sys, dt)
        return np.array([x[0], v[0]])

    J = np.empty((2, 2))
    for j in range(2):
        zp, zm = z0.copy(), z0.copy()
        zp[j] += eps
        zm[j] -= eps
        J[:, j] = (step(zp) - step(zm)) / (2 * eps)
    J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.max(np.abs(J.T @ J2 @ J - J2)) <= 1e-8


def test_wrap_applied_in_drift():
    L = 1.0
    sys = SeparableSystem(grad_potential=lambda x: np.zeros_like(x),
                          grad_kinetic=lambda v: v, dim=1,
                          wrap=lambda x: np.mod(x, L))
    x, v = verlet_step(np.array([0.9]), np.array([1.0]), sys, 0.2)
    assert 0.0 <= x[0] < L
    assert x[0] == pytest.approx(0.1, rel=1e-12)
