"""Offline training of the autoencoder + Hamiltonian network on reduced snapshots.

Losses operate in the preprocessed (singular-value scaled) intermediate
coordinates.  Training has two stages: the autoencoder alone until its
reconstruction loss enters the exit band, then all four losses jointly
with the watch-duration ramp.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import networks as nn

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

STAGE2_WEIGHTS = {"ae": 1.0, "pred_reduced": 10.0, "stability": 1e-4, "pred_full": 1.0}


@dataclass
class TrainingConfig:
    weights: dict = field(default_factory=lambda: dict(STAGE2_WEIGHTS))
    watch_duration: int = 16
    watch_ramp: list = field(default_factory=list)  # [(step, s), ...] milestones in stage 2
    rho0: float = 1e-3
    batch_size: int = 64
    stage1_exit_band: tuple = (5e-3, 1e-2)
    stage1_max_steps: int = 5000
    stage2_steps: int = 20000
    plateau_window: int = 500
    seed: int = 0
    dt: float = 2.5e-3
    log_every: int = 50
    checkpoint_every: int = 0

    def __post_init__(self):
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("loss weights must be >= 0")
        if self.watch_duration < 1:
            raise ValueError("watch duration s must be >= 1")
        lo, hi = self.stage1_exit_band
        if not (0 < lo < hi < 1):
            raise ValueError("stage-1 exit band must lie inside (0, 1)")


@dataclass
class ReducedDataset:
    """Preprocessed intermediate states per trajectory, plus the scaling used.

    trajectories[i] is an (n_steps+1, 2M) array in scaled coordinates;
    pairs for the prediction losses are only ever formed within one
    trajectory.
    """

    trajectories: list
    scaling: np.ndarray  # length 2M, multiply raw coords by this
    dt: float = 2.5e-3

    def __post_init__(self):
        if np.any(self.scaling <= 0):
            raise ValueError("scaling must be strictly positive")
        dims = {t.shape[1] for t in self.trajectories}
        if len(dims) != 1:
            raise ValueError("trajectories disagree on state dimension")

    @property
    def dim(self) -> int:
        return self.trajectories[0].shape[1]


def preprocess_scaling(singular_values: np.ndarray, floor_ratio: float = 1e-8) -> np.ndarray:
    """Coordinate scaling sigma_k^(-1/2), mode-wise for both blocks.

    Position and velocity coordinates of mode k share sigma_k; sigma is
    floored at floor_ratio * sigma_1 to avoid amplifying noise modes.
    """
    sv = np.asarray(singular_values, dtype=np.float64)
    if np.any(sv <= 0):
        raise ValueError("singular values must be positive")
    sv = np.maximum(sv, floor_ratio * sv[0])
    half = sv ** -0.5
    return np.concatenate([half, half])


def preprocess(u_tilde: np.ndarray, scaling: np.ndarray) -> np.ndarray:
    """Scale intermediate states; u_tilde has the 2M axis last (or is 1D)."""
    return u_tilde * scaling


def postprocess(u_scaled: np.ndarray, scaling: np.ndarray) -> np.ndarray:
    return u_scaled / scaling


def _split(u: ad.Tensor):
    k = u.shape[-1] // 2
    return u[:, :k], u[:, k:]


def encode(params: nn.NetworkParams, u: ad.Tensor, pp: dict | None = None):
    x, v = _split(ad.as_tensor(u))
    xe = nn.forward(params.encoder_x, x, pp and pp["encoder_x"])
    ve = nn.forward(params.encoder_v, v, pp and pp["encoder_v"])
    return xe, ve


def decode(params: nn.NetworkParams, x_bar, v_bar, pp: dict | None = None) -> ad.Tensor:
    xd = nn.forward(params.decoder_x, ad.as_tensor(x_bar), pp and pp["decoder_x"])
    vd = nn.forward(params.decoder_v, ad.as_tensor(v_bar), pp and pp["decoder_v"])
    return ad.concatenate([xd, vd], axis=1)


def prediction_operator(params: nn.NetworkParams, x_bar, v_bar, s: int, dt: float,
                        pp: dict | None = None):
    """s Stoermer-Verlet steps driven by the HNN input gradient, differentiable."""
    x, v = ad.as_tensor(x_bar), ad.as_tensor(v_bar)
    pot = pp and pp["hnn_pot"]
    kin = pp and pp["hnn_kin"]
    for _ in range(s):
        gx, _ = nn.hnn_input_gradient(params, x, v, pot, kin)
        v_half = v - (0.5 * dt) * gx
        _, gv = nn.hnn_input_gradient(params, x, v_half, pot, kin)
        x = x + dt * gv
        gx, _ = nn.hnn_input_gradient(params, x, v_half, pot, kin)
        v = v_half - (0.5 * dt) * gx
    return x, v


def _mean_sq(t: ad.Tensor) -> ad.Tensor:
    # mean over batch and coordinates, so loss weights are batch- and
    # dimension-invariant
    return ad.tmean(ad.square(t))


def loss_ae(params: nn.NetworkParams, batch: np.ndarray, pp: dict | None = None) -> ad.Tensor:
    """Mean squared reconstruction error of the split autoencoder."""
    u = ad.as_tensor(batch)
    x_bar, v_bar = encode(params, u, pp)
    recon = decode(params, x_bar, v_bar, pp)
    return _mean_sq(recon - u)


def loss_pred_reduced(params: nn.NetworkParams, first: np.ndarray, second: np.ndarray,
                      s: int, dt: float, pp: dict | None = None) -> ad.Tensor:
    """Mean squared mismatch between E(u^{n+s}) and s integrator steps from E(u^n)."""
    xb0, vb0 = encode(params, ad.as_tensor(first), pp)
    xbs, vbs = encode(params, ad.as_tensor(second), pp)
    xps, vps = prediction_operator(params, xb0, vb0, s, dt, pp)
    return _mean_sq(ad.concatenate([xbs - xps, vbs - vps], axis=1))


def loss_stability(params: nn.NetworkParams, first: np.ndarray, second: np.ndarray,
                   pp: dict | None = None) -> ad.Tensor:
    """Mean squared drift of the learned Hamiltonian between encoded pair states."""
    xb0, vb0 = encode(params, ad.as_tensor(first), pp)
    xbs, vbs = encode(params, ad.as_tensor(second), pp)
    pot = pp and pp["hnn_pot"]
    kin = pp and pp["hnn_kin"]
    h0 = nn.hnn_value(params, xb0, vb0, pot, kin)
    hs = nn.hnn_value(params, xbs, vbs, pot, kin)
    return _mean_sq(hs - h0)


def loss_pred_full(params: nn.NetworkParams, first: np.ndarray, second: np.ndarray,
                   s: int, dt: float, pp: dict | None = None) -> ad.Tensor:
    """Mean squared end-to-end prediction error: encode, integrate s steps, decode."""
    xb0, vb0 = encode(params, ad.as_tensor(first), pp)
    xps, vps = prediction_operator(params, xb0, vb0, s, dt, pp)
    recon = decode(params, xps, vps, pp)
    return _mean_sq(recon - ad.as_tensor(second))


def total_loss(params: nn.NetworkParams, first: np.ndarray, second: np.ndarray,
               weights: dict, s: int, dt: float, pp: dict | None = None):
    """Weighted sum of the four losses; zero-weight terms are skipped entirely."""
    parts = {}
    total = ad.Tensor(0.0)
    if weights.get("ae", 0.0) > 0:
        parts["ae"] = loss_ae(params, first, pp)
        total = total + weights["ae"] * parts["ae"]
    if weights.get("pred_reduced", 0.0) > 0:
        parts["pred_reduced"] = loss_pred_reduced(params, first, second, s, dt, pp)
        total = total + weights["pred_reduced"] * parts["pred_reduced"]
    if weights.get("stability", 0.0) > 0:
        parts["stability"] = loss_stability(params, first, second, pp)
        total = total + weights["stability"] * parts["stability"]
    if weights.get("pred_full", 0.0) > 0:
        parts["pred_full"] = loss_pred_full(params, first, second, s, dt, pp)
        total = total + weights["pred_full"] * parts["pred_full"]
    return total, parts


def lr_schedule(k: int, rho0: float) -> float:
    """Stepwise exponential decay: rho0 * 0.99^(k // 150)."""
    if k < 0:
        raise ValueError("training step must be >= 0")
    return rho0 * 0.99 ** (k // 150)


class AdamState:
    def __init__(self, flat_params: dict):
        self.m = {k: np.zeros_like(v) for k, v in flat_params.items()}
        self.v = {k: np.zeros_like(v) for k, v in flat_params.items()}
        self.t = 0


def adam_step(flat_params: dict, grads: dict, state: AdamState, lr: float) -> dict:
    """Standard Adam update with bias correction; mutates state, returns new params."""
    state.t += 1
    t = state.t
    out = {}
    for key, p in flat_params.items():
        g = grads[key]
        state.m[key] = ADAM_BETA1 * state.m[key] + (1 - ADAM_BETA1) * g
        state.v[key] = ADAM_BETA2 * state.v[key] + (1 - ADAM_BETA2) * g * g
        m_hat = state.m[key] / (1 - ADAM_BETA1**t)
        v_hat = state.v[key] / (1 - ADAM_BETA2**t)
        out[key] = p - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return out


def sample_pairs(dataset: ReducedDataset, s: int, batch_size: int,
                 rng: np.random.Generator):
    """Uniformly sample (u^n, u^{n+s}) pairs; never crosses a trajectory boundary."""
    counts = np.array([max(t.shape[0] - s, 0) for t in dataset.trajectories])
    total = counts.sum()
    if total == 0:
        raise ValueError(f"watch duration s={s} exceeds every trajectory length")
    flat = rng.integers(total, size=batch_size)
    bounds = np.cumsum(counts)
    traj_idx = np.searchsorted(bounds, flat, side="right")
    step_idx = flat - np.concatenate([[0], bounds[:-1]])[traj_idx]
    first = np.stack([dataset.trajectories[ti][si] for ti, si in zip(traj_idx, step_idx)])
    second = np.stack([dataset.trajectories[ti][si + s] for ti, si in zip(traj_idx, step_idx)])
    return first, second


def _leaf_params(params: nn.NetworkParams):
    """Fresh graph leaves for every parameter plus the per-subnet dict view."""
    flat = params.flat_params()
    leaves = {k: ad.Tensor(v) for k, v in flat.items()}
    pp = {
        name: {k.split("/", 1)[1]: leaves[k] for k in leaves if k.startswith(name + "/")}
        for name in params.subnets()
    }
    return flat, leaves, pp


@dataclass
class TrainingReport:
    history: list = field(default_factory=list)  # dict rows
    stage2_start_step: int = -1
    final_losses: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["step", "stage", "lr", "s", "total", "ae", "pred_reduced", "stability", "pred_full"]
        buf.write(",".join(cols) + "\n")
        for row in self.history:
            buf.write(",".join(str(row.get(c, "")) for c in cols) + "\n")
        return buf.getvalue()


def train(dataset: ReducedDataset, params: nn.NetworkParams, cfg: TrainingConfig,
          checkpoint_cb=None) -> TrainingReport:
    """Two-stage training; mutates params in place and returns the report."""
    rng = np.random.default_rng(cfg.seed)
    report = TrainingReport()
    flat = params.flat_params()
    state = AdamState(flat)
    skip_streak = 0
    loss_window: list = []
    lr_anchor = 0  # effective k offset after plateau resets
    initial_total = None

    def step_once(step, stage, weights, s):
        nonlocal flat, skip_streak, lr_anchor, initial_total
        first, second = sample_pairs(dataset, s, cfg.batch_size, rng)
        _, leaves, pp = _leaf_params(params)
        for key, arr in flat.items():
            leaves[key].value = arr  # bind current values
        loss, parts = total_loss(params, first, second, weights, s, cfg.dt, pp)
        if not np.isfinite(loss.value):
            raise FloatingPointError(f"non-finite loss at step {step}")
        grads = nn.loss_gradient(loss, leaves)
        if any(not np.all(np.isfinite(g)) for g in grads.values()):
            skip_streak += 1
            if skip_streak > 10:
                raise FloatingPointError(f"{skip_streak} consecutive non-finite gradients")
            return float(loss.value), parts
        skip_streak = 0
        lr = lr_schedule(max(step - lr_anchor, 0), cfg.rho0)
        flat = adam_step(flat, grads, state, lr)
        params.set_flat_params(flat)
        total = float(loss.value)
        if initial_total is None:
            initial_total = total
        elif total > 1e3 * max(initial_total, 1e-30):
            raise FloatingPointError(
                f"training diverged at step {step}: loss {total:.3e} vs initial {initial_total:.3e}"
            )
        loss_window.append(total)
        if len(loss_window) >= 2 * cfg.plateau_window:
            older = np.median(loss_window[-2 * cfg.plateau_window : -cfg.plateau_window])
            newer = np.median(loss_window[-cfg.plateau_window :])
            if newer > 0.99 * older:
                lr_anchor = step  # plateau: reset the decay clock
                loss_window.clear()
        if step % cfg.log_every == 0 or step == 1:
            row = {"step": step, "stage": stage, "lr": lr, "s": s, "total": total}
            row.update({k: float(v.value) for k, v in parts.items()})
            report.history.append(row)
        if checkpoint_cb and cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
            checkpoint_cb(step, params)
        return total, parts

    # stage 1: autoencoder alone
    stage1_weights = {"ae": 1.0}
    step = 0
    for step in range(1, cfg.stage1_max_steps + 1):
        total, _ = step_once(step, 1, stage1_weights, 1)
        if total <= cfg.stage1_exit_band[1]:
            break
    report.stage2_start_step = step + 1
    loss_window.clear()
    lr_anchor = step
    initial_total = None

    # stage 2: joint training with the watch-duration ramp
    ramp = sorted(cfg.watch_ramp)
    s = cfg.watch_duration
    last_parts = {}
    for k2 in range(cfg.stage2_steps):
        step += 1
        for milestone, new_s in ramp:
            if k2 == milestone:
                s = new_s
        total, last_parts = step_once(step, 2, cfg.weights, s)
    report.final_losses = {k: float(v.value) for k, v in last_parts.items()}
    report.final_losses["total"] = total if cfg.stage2_steps else None
    return report
