"""End-to-end reduction: PIC ensemble -> symplectic basis -> trained surrogate.

A miniature version of the full workflow: simulate a small parameter
ensemble, build a proper-symplectic-decomposition basis, train the
autoencoder + Hamiltonian-network surrogate on the reduced trajectories,
then predict a full trajectory from its initial condition alone and
compare against the reference run.  Deliberately tiny so it finishes in
a few minutes; expect modest accuracy at this scale.

Usage: python3 demos/reduction_pipeline.py
"""

import time

import numpy as np

import picrom.diagnostics as dg
import picrom.networks as nn
import picrom.psd as psd
import picrom.rom as rom
import picrom.simulate as sim
import picrom.training as tr
from picrom.quiet_start import ScenarioSpec


def spec_for(alpha, sigma):
    return ScenarioSpec(case="linear-landau", alpha=alpha, sigma=sigma, k=0.5,
                        n_particles=4_000, n_x=32, T=10.0, dt=5e-3)


t0 = time.time()
train_mus = [(a, s) for a in (0.03, 0.06) for s in (0.8, 1.0)]
test_mu = (0.045, 0.9)

print(f"1. simulating {len(train_mus)} training runs + 1 test run ...")
train_runs = [sim.run_simulation(spec_for(*mu), stride=20) for mu in train_mus]
test_run = sim.run_simulation(spec_for(*test_mu), stride=20)

print("2. building the symplectic basis (M = 24 mode pairs) ...")
full = np.concatenate([r.snapshots.full for r in train_runs], axis=1)
basis = psd.build_basis_from_snapshots(
    psd.SnapshotSet(full=full, meta={}, stride=20), 24)
m = basis.n_modes
print(f"   kept {m} modes, symplectic defect {basis.symplectic_defect():.2e}")

print("3. projecting stride-1 training trajectories ...")
scaling = tr.preprocess_scaling(basis.singular_values)
trajs = [tr.preprocess(sim.run_projected(spec_for(*mu), basis, stride=1), scaling)
         for mu in train_mus]
ds = tr.ReducedDataset(trajectories=trajs, scaling=scaling, dt=5e-3)

print("4. training the autoencoder + Hamiltonian network (a few minutes) ...")
params = nn.build_dense_networks(m, 3, [32, 12], [16, 8], seed=1,
                                 ae_activation="elu")
cfg = tr.TrainingConfig(watch_duration=4, batch_size=32, rho0=1e-3,
                        stage1_max_steps=2000, stage2_steps=3000,
                        plateau_window=300, seed=0, dt=5e-3, log_every=500)
report = tr.train(ds, params, cfg)
print("   final losses:",
      {k: f"{v:.2e}" for k, v in report.final_losses.items() if v is not None})

print("5. predicting the held-out run from its initial state only ...")
pipe = rom.RomPipeline(basis=basis, scaling=scaling, params=params, dt=5e-3)
_, recon = rom.predict_trajectory(pipe, test_run.snapshots.full[:, 0],
                                  test_run.spec.n_steps, stride=20)
errs = dg.relative_errors(test_run.snapshots.full, recon,
                          domain_length=test_run.spec.grid.domain_length)
print(f"   held-out relative errors: positions {errs.err_x_mu:.3f}, "
      f"velocities {errs.err_v_mu:.3f}")
print(f"total wall time {time.time() - t0:.0f} s")
