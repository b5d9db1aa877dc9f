import numpy as np
import pytest

import picrom.pic as pic
import picrom.psd as psd
import picrom.simulate as sim
from picrom.quiet_start import ScenarioSpec


def tiny_spec(**kw):
    base = dict(case="linear-landau", alpha=0.05, sigma=0.9, k=0.5,
                n_particles=400, T=0.5, dt=0.025, n_x=16)
    base.update(kw)
    return ScenarioSpec(**base)


class TestRunSimulation:
    def test_shapes_and_bookkeeping(self):
        spec = tiny_spec()
        res = sim.run_simulation(spec, stride=5, energy_stride=2)
        n_steps = spec.n_steps
        assert res.snapshots.full.shape == (2 * spec.n_particles, n_steps // 5 + 1)
        assert res.snapshot_steps.tolist() == list(range(0, n_steps + 1, 5))
        assert res.energy_steps.tolist() == list(range(0, n_steps + 1, 2))
        assert res.electric_energy.shape == res.energy_steps.shape
        assert res.hamiltonian.shape == res.energy_steps.shape
        assert res.snapshot_times[-1] == pytest.approx(0.5)

    def test_determinism(self):
        spec = tiny_spec()
        a = sim.run_simulation(spec, stride=10)
        b = sim.run_simulation(spec, stride=10)
        assert np.array_equal(a.snapshots.full, b.snapshots.full)
        assert np.array_equal(a.hamiltonian, b.hamiltonian)

    def test_first_snapshot_is_quiet_start(self):
        spec = tiny_spec()
        res = sim.run_simulation(spec, stride=10)
        from picrom.quiet_start import quiet_start
        state0 = quiet_start(spec, pic.PhysicalConstants())
        u0 = np.concatenate([state0.x, state0.v])
        assert np.array_equal(res.snapshots.full[:, 0], u0)

    def test_hamiltonian_drift_small_at_tiny_scale(self):
        spec = tiny_spec(n_particles=2000, T=1.0, dt=0.01)
        res = sim.run_simulation(spec, stride=20)
        h = res.hamiltonian
        assert np.max(np.abs(h - h[0])) / abs(h[0]) < 1e-3

    def test_unwrapped_positions_bounded_by_ballistic_envelope(self):
        # snapshots store unwrapped positions: each particle can drift at
        # most |v|_max * T (plus its start) away from the domain
        spec = tiny_spec()
        res = sim.run_simulation(spec, stride=5)
        n = spec.n_particles
        x, v = res.snapshots.full[:n], res.snapshots.full[n:]
        L = spec.grid.domain_length
        vmax = np.abs(v).max()
        assert np.all(x > -vmax * spec.T - 1e-9)
        assert np.all(x < L + vmax * spec.T + 1e-9)

    def test_wrapped_dynamics_match_unwrapped_modulo_domain(self):
        # the periodic wrap is a gauge choice: forces depend on x mod L
        # only, so the unwrapped trajectory reduced mod L must equal the
        # trajectory of a system that wraps at every drift
        spec = tiny_spec(T=0.25)
        res = sim.run_simulation(spec, stride=1)
        grid = spec.grid
        consts = pic.PhysicalConstants()
        from picrom.quiet_start import quiet_start
        from picrom.verlet import SeparableSystem, integrate

        def grad_pot(x):
            st = pic.ParticleState(x=pic.wrap_positions(x, grid), v=np.zeros_like(x))
            return pic.potential_gradient(st, grid, consts)

        wrapped_system = SeparableSystem(
            grad_potential=grad_pot, grad_kinetic=lambda v: v,
            dim=spec.n_particles, wrap=lambda x: pic.wrap_positions(x, grid))
        st0 = quiet_start(spec, consts)
        xw, vw = integrate(st0.x, st0.v, wrapped_system, spec.dt, spec.n_steps)
        n = spec.n_particles
        xu, vu = res.snapshots.full[:n, -1], res.snapshots.full[n:, -1]
        assert np.allclose(pic.wrap_positions(xu.copy(), grid), xw, atol=1e-9)
        assert np.allclose(vu, vw, atol=1e-12)

    def test_bad_stride_rejected(self):
        with pytest.raises(ValueError):
            sim.run_simulation(tiny_spec(), stride=0)

    def test_meta_records_scenario(self):
        spec = tiny_spec()
        res = sim.run_simulation(spec, stride=10)
        assert res.snapshots.meta["case"] == "linear-landau"
        assert res.snapshots.meta["dt"] == pytest.approx(spec.dt)


class TestRunProjected:
    def test_matches_post_hoc_projection(self):
        spec = tiny_spec()
        res = sim.run_simulation(spec, stride=1)
        basis = psd.build_basis_from_snapshots(res.snapshots, n_modes=4)
        reduced = sim.run_projected(spec, basis, stride=1)
        expected = basis.project(res.snapshots.full).T
        assert reduced.shape == expected.shape
        assert np.allclose(reduced, expected, atol=1e-10)

    def test_stride_rows(self):
        spec = tiny_spec()
        res = sim.run_simulation(spec, stride=1)
        basis = psd.build_basis_from_snapshots(res.snapshots, n_modes=3)
        reduced = sim.run_projected(spec, basis, stride=4)
        assert reduced.shape == (spec.n_steps // 4 + 1, 6)
