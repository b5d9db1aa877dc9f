"""Command-line interface: each pipeline phase is its own subcommand, and
phases communicate only through files."""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import diagnostics, fileio, networks, psd, rom, simulate, training
from .config import ConfigError, FullConfig, parse_config, validate
from .pic import PhysicalConstants


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--out-dir", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None,
                   help="worker count (default: env PICROM_THREADS or 1)")
    p.add_argument("--deterministic", action="store_true",
                   help="force single-threaded, bit-reproducible mode")
    p.add_argument("--stride", type=int, default=None, help="snapshot stride override")


def _load_config(args) -> FullConfig:
    cfg = parse_config(args.config) if args.config else validate({})
    if args.seed is not None:
        cfg.run["seed"] = args.seed
        cfg.training["seed"] = args.seed
    if args.threads is not None:
        cfg.run["threads"] = args.threads
    elif "PICROM_THREADS" in os.environ:
        cfg.run["threads"] = int(os.environ["PICROM_THREADS"])
    if args.deterministic:
        cfg.run["deterministic"] = True
    if cfg.run["deterministic"]:
        cfg.run["threads"] = 1
    if args.stride is not None:
        cfg.sampling["stride"] = args.stride
    if args.out_dir is not None:
        cfg.run["out_dir"] = args.out_dir
    os.makedirs(cfg.run["out_dir"], exist_ok=True)
    return cfg


def _out(cfg: FullConfig, name: str) -> str:
    return os.path.join(cfg.run["out_dir"], name)


def _write_csv(path: str, columns: dict) -> None:
    keys = list(columns)
    rows = zip(*(np.atleast_1d(columns[k]) for k in keys))
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(keys)
        w.writerows(rows)


def _manifest(cfg: FullConfig, command: str) -> fileio.RunManifest:
    return fileio.RunManifest(
        command=command,
        scenario=dict(cfg.scenario),
        seeds={"run": cfg.run["seed"], "training": cfg.training["seed"]},
        strides=dict(cfg.sampling),
        notes={"deterministic": cfg.run["deterministic"],
               "threads": cfg.run["threads"],
               "rate_series": "amplitude 0.5*||E||_2 (log-slope is half the "
                              "energy-series slope)"},
    )


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    spec = cfg.scenario_spec()
    res = simulate.run_simulation(
        spec, stride=int(cfg.sampling["stride"]),
        energy_stride=int(cfg.sampling["energy_stride"]),
        n_workers=int(cfg.run["threads"]),
    )
    snap_path = _out(cfg, "snapshots.vpsn")
    fileio.write_snapshots(snap_path, res.snapshots)
    energy_path = _out(cfg, "energy.csv")
    _write_csv(energy_path, {
        "t": res.energy_times,
        "electric_energy": res.electric_energy,
        "amplitude": np.sqrt(res.electric_energy),
        "hamiltonian": res.hamiltonian,
    })
    man = _manifest(cfg, "simulate")
    man.timings["integrate"] = res.wall_time
    man.add_output(snap_path)
    man.add_output(energy_path)
    man.write(_out(cfg, "simulate_manifest.json"))
    drift = abs(res.hamiltonian[-1] - res.hamiltonian[0]) / abs(res.hamiltonian[0])
    print(f"simulate: {res.snapshots.n_snapshots} snapshots, "
          f"H drift {drift:.3e}, wall {res.wall_time:.2f}s")
    return 0


def cmd_build_psd(args) -> int:
    cfg = _load_config(args)
    sets = [fileio.read_snapshots(p) for p in args.snapshots]
    full = np.concatenate([s.full for s in sets], axis=1)
    merged = psd.SnapshotSet(full=full, meta=sets[0].meta, stride=sets[0].stride)
    t0 = time.perf_counter()
    basis = psd.build_basis_from_snapshots(merged, int(cfg.reduction["n_modes"]))
    wall = time.perf_counter() - t0
    basis_path = _out(cfg, "basis.psdb")
    fileio.write_basis(basis_path, basis)
    man = _manifest(cfg, "build-psd")
    for p in args.snapshots:
        man.add_input(p)
    man.add_output(basis_path)
    man.timings["svd"] = wall
    man.write(_out(cfg, "build_psd_manifest.json"))
    err = psd.reconstruction_error(basis, merged)
    print(f"build-psd: M={basis.n_modes}, defect {basis.symplectic_defect():.2e}, "
          f"reconstruction error {err:.3e}")
    return 0


def cmd_project(args) -> int:
    cfg = _load_config(args)
    basis = fileio.read_basis(args.basis)
    man = _manifest(cfg, "project")
    man.add_input(args.basis)
    for path in args.snapshots:
        snaps = fileio.read_snapshots(path)
        reduced = basis.project(snaps.full)
        meta = dict(snaps.meta)
        meta["dt_row"] = snaps.stride * meta.get("dt", cfg.scenario["dt"])
        out = _out(cfg, "reduced_" + os.path.basename(path))
        fileio.write_snapshots(out, psd.SnapshotSet(full=reduced, meta=meta,
                                                    stride=snaps.stride))
        man.add_input(path)
        man.add_output(out)
    man.write(_out(cfg, "project_manifest.json"))
    print(f"project: {len(args.snapshots)} file(s) -> 2M = {2 * basis.n_modes} rows")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    basis = fileio.read_basis(args.basis)
    scaling = training.preprocess_scaling(basis.singular_values)
    trajs, dt_rows = [], []
    for path in args.data:
        snaps = fileio.read_snapshots(path)
        trajs.append(training.preprocess(snaps.full.T, scaling))
        dt_rows.append(snaps.meta.get("dt_row", cfg.scenario["dt"]))
    if len(set(dt_rows)) != 1:
        raise ConfigError("training files disagree on the row time step")
    dataset = training.ReducedDataset(trajectories=trajs, scaling=scaling,
                                      dt=float(dt_rows[0]))
    t = cfg.training
    params = networks.build_networks(
        m=basis.n_modes, k=int(t["reduced_dim"]), conv_blocks=int(t["conv_blocks"]),
        dense_sizes=list(t["dense_sizes"]), hnn_widths=list(t["hnn_widths"]),
        seed=int(t["seed"]),
    )
    tcfg = training.TrainingConfig(
        rho0=float(t["rho0"]), batch_size=int(t["batch_size"]),
        stage1_max_steps=int(t["stage1_max_steps"]),
        stage2_steps=int(t["stage2_steps"]),
        watch_duration=int(t["watch_duration"]),
        watch_ramp=[tuple(x) for x in t["watch_ramp"]],
        plateau_window=int(t["plateau_window"]), seed=int(t["seed"]),
        dt=dataset.dt, log_every=int(t["log_every"]),
        checkpoint_every=int(t["checkpoint_every"]),
    )
    arch = {"builder": "conv", "m": basis.n_modes, "k": int(t["reduced_dim"]),
            "conv_blocks": int(t["conv_blocks"]),
            "dense_sizes": list(t["dense_sizes"]),
            "hnn_widths": list(t["hnn_widths"]), "seed": int(t["seed"])}

    def checkpoint(step, p):
        fileio.write_weights(_out(cfg, f"checkpoint_{step}.aehn"), p, arch, scaling)

    t0 = time.perf_counter()
    report = training.train(dataset, params, tcfg, checkpoint_cb=checkpoint)
    wall = time.perf_counter() - t0
    weights_path = _out(cfg, "weights.aehn")
    fileio.write_weights(weights_path, params, arch, scaling,
                         extra={"dt": dataset.dt,
                                "final_losses": report.final_losses})
    report_path = _out(cfg, "training_report.csv")
    with open(report_path, "w") as f:
        f.write(report.to_csv())
    man = _manifest(cfg, "train")
    man.add_input(args.basis)
    for p in args.data:
        man.add_input(p)
    man.add_output(weights_path)
    man.add_output(report_path)
    man.timings["train"] = wall
    man.write(_out(cfg, "train_manifest.json"))
    print(f"train: final losses {report.final_losses}, wall {wall:.1f}s")
    return 0


def _load_pipeline(basis_path: str, weights_path: str) -> rom.RomPipeline:
    basis = fileio.read_basis(basis_path)
    params, _, scaling, extra = fileio.read_weights(weights_path)
    return rom.RomPipeline(basis=basis, scaling=scaling, params=params,
                           dt=float(extra.get("dt", 2.5e-3)))


def cmd_predict(args) -> int:
    cfg = _load_config(args)
    pipeline = _load_pipeline(args.basis, args.weights)
    init_snaps = fileio.read_snapshots(args.init)
    u_init = init_snaps.full[:, 0]
    n_steps = args.n_steps
    if n_steps is None:
        n_steps = round(cfg.scenario["T"] / pipeline.dt)
    stride = int(cfg.sampling["stride"])
    spec = cfg.scenario_spec()
    t0 = time.perf_counter()
    steps, recon = rom.predict_trajectory(
        pipeline, u_init, n_steps, stride=stride,
        domain_length=spec.grid.domain_length,
    )
    wall = time.perf_counter() - t0
    out = _out(cfg, "predicted.vpsn")
    meta = dict(init_snaps.meta)
    meta["predicted"] = True
    fileio.write_snapshots(out, psd.SnapshotSet(full=recon, meta=meta, stride=stride))
    man = _manifest(cfg, "predict")
    man.add_input(args.basis)
    man.add_input(args.weights)
    man.add_input(args.init)
    man.add_output(out)
    man.timings["rollout"] = wall
    man.write(_out(cfg, "predict_manifest.json"))
    print(f"predict: {recon.shape[1]} snapshots in {wall:.2f}s")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    ref = fileio.read_snapshots(args.ref)
    test = fileio.read_snapshots(args.test)
    spec = cfg.scenario_spec()
    rep = diagnostics.relative_errors(ref.full, test.full,
                                      domain_length=spec.grid.domain_length)
    out = _out(cfg, "errors.csv")
    stride = ref.stride or 1
    times = np.arange(ref.n_snapshots) * stride * cfg.scenario["dt"]
    _write_csv(out, {"t": times, "err_x_t": rep.err_x_t, "err_v_t": rep.err_v_t})
    print(f"evaluate: err_x_mu {rep.err_x_mu:.4e}, err_v_mu {rep.err_v_mu:.4e}")
    return 0


def cmd_rates(args) -> int:
    cfg = _load_config(args)
    with open(args.energy) as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    t = np.array([float(r["t"]) for r in rows])
    col = args.series
    series = np.array([float(r[col]) for r in rows])
    fit = diagnostics.fit_rate(t, series, (args.window[0], args.window[1]))
    out = _out(cfg, "rates.csv")
    _write_csv(out, {
        "series": [col], "t0": [fit.window[0]], "t1": [fit.window[1]],
        "slope": [fit.slope], "intercept": [fit.intercept],
        "r_squared": [fit.r_squared], "n_peaks": [len(fit.peaks)],
    })
    print(f"rates: {col} slope {fit.slope:.4e} (r2 {fit.r_squared:.4f}, "
          f"{len(fit.peaks)} peaks)")
    return 0


def cmd_hist(args) -> int:
    cfg = _load_config(args)
    snaps = fileio.read_snapshots(args.snapshots)
    n = snaps.full.shape[0] // 2
    col = snaps.full[:, args.index]
    spec = cfg.scenario_spec()
    grid = diagnostics.phase_space_histogram(
        col[:n], col[n:], args.bins_x, args.bins_v,
        domain_length=spec.grid.domain_length,
    )
    out = _out(cfg, "hist.csv")
    np.savetxt(out, grid, delimiter=",")
    print(f"hist: {args.bins_x}x{args.bins_v} grid, mass {grid.sum():.6f}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    results = []
    n_steps = args.steps
    for n_part in (cfg.scenario["n_particles"],
                   max(cfg.scenario["n_particles"] // 10, 100)):
        spec = cfg.scenario_spec(n_particles=int(n_part),
                                 T=n_steps * cfg.scenario["dt"])
        res = simulate.run_simulation(spec, stride=max(n_steps, 1),
                                      energy_stride=max(n_steps, 1),
                                      n_workers=int(cfg.run["threads"]))
        results.append(("fom", int(n_part), res.wall_time / n_steps))
    rom_time = None
    if args.basis and args.weights:
        pipeline = _load_pipeline(args.basis, args.weights)
        spec = cfg.scenario_spec()
        from .quiet_start import quiet_start
        st = quiet_start(spec, PhysicalConstants())
        u_init = np.concatenate([st.x, st.v])
        state0 = rom.encode_full(pipeline, u_init)
        rom.rollout(pipeline, state0, 10)  # warm up
        t0 = time.perf_counter()
        rom.rollout(pipeline, state0, n_steps)
        rom_time = (time.perf_counter() - t0) / n_steps
        results.append(("rom", spec.n_particles, rom_time))
    out = _out(cfg, "bench.csv")
    _write_csv(out, {
        "kind": [r[0] for r in results],
        "n_particles": [r[1] for r in results],
        "seconds_per_step": [r[2] for r in results],
    })
    for kind, n_part, per in results:
        print(f"bench: {kind} N={n_part} {per * 1e3:.3f} ms/step")
    if rom_time is not None:
        speedup = results[0][2] / rom_time
        print(f"bench: rom speedup {speedup:.2f}x vs N={results[0][1]} fom")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="picrom",
        description="Structure-preserving reduced-order models for 1D-1V "
                    "Vlasov-Poisson (PIC + PSD + AE-HNN)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(fn=fn)
        return p

    add("simulate", cmd_simulate, "run the full-order model, write snapshots")

    p = add("build-psd", cmd_build_psd, "build a symplectic basis from snapshots")
    p.add_argument("snapshots", nargs="+")

    p = add("project", cmd_project, "project snapshot files to reduced coordinates")
    p.add_argument("--basis", required=True)
    p.add_argument("snapshots", nargs="+")

    p = add("train", cmd_train, "train the autoencoder + Hamiltonian network")
    p.add_argument("--basis", required=True)
    p.add_argument("data", nargs="+", help="projected trajectory files")

    p = add("predict", cmd_predict, "integrate the reduced model and decode")
    p.add_argument("--basis", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--init", required=True, help="snapshot file; column 0 is u_init")
    p.add_argument("--n-steps", type=int, default=None)

    p = add("evaluate", cmd_evaluate, "relative errors between two snapshot files")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)

    p = add("rates", cmd_rates, "fit an exponential rate to an energy series")
    p.add_argument("--energy", required=True, help="CSV from `simulate`")
    p.add_argument("--window", type=float, nargs=2, required=True)
    p.add_argument("--series", default="amplitude",
                   choices=["amplitude", "electric_energy"])

    p = add("hist", cmd_hist, "phase-space density histogram of one snapshot")
    p.add_argument("--snapshots", required=True)
    p.add_argument("--index", type=int, default=-1)
    p.add_argument("--bins-x", type=int, default=64)
    p.add_argument("--bins-v", type=int, default=64)

    p = add("bench", cmd_bench, "per-step timing of FOM vs reduced model")
    p.add_argument("--basis")
    p.add_argument("--weights")
    p.add_argument("--steps", type=int, default=100)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, fileio.FileFormatError) as exc:
        print(f"error:{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError, OSError) as exc:
        print(f"error:{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
