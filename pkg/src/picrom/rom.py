"""Online reduced-order model: encode an initial full state, integrate the
learned Hamiltonian dynamics in the 2K-dimensional space, decode back.

The rollout uses a hand-coded numpy gradient of the HNN (no graph), so
the per-step cost is independent of N and n_x.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import networks as nn
from . import training as tr
from .psd import SymplecticBasis
from .verlet import SeparableSystem, integrate


@dataclass
class ReducedState:
    x_bar: np.ndarray
    v_bar: np.ndarray
    t: float = 0.0

    @property
    def k(self) -> int:
        return self.x_bar.size


@dataclass
class RomPipeline:
    """Everything the online phase needs: basis, scaling, networks, time step."""

    basis: SymplecticBasis
    scaling: np.ndarray  # length 2M preprocessing vector
    params: nn.NetworkParams
    dt: float

    def __post_init__(self):
        if self.scaling.size != 2 * self.basis.n_modes:
            raise ValueError(
                f"scaling length {self.scaling.size} != 2M = {2 * self.basis.n_modes}"
            )


def encode_full(pipeline: RomPipeline, u: np.ndarray) -> ReducedState:
    """Project to the intermediate space, preprocess, split-encode."""
    if u.size != 2 * pipeline.basis.n_full:
        raise ValueError(f"state length {u.size} != 2N = {2 * pipeline.basis.n_full}")
    u_tilde = pipeline.basis.project(u)
    scaled = tr.preprocess(u_tilde, pipeline.scaling)
    x_bar, v_bar = tr.encode(pipeline.params, scaled[None, :])
    return ReducedState(x_bar.value[0], v_bar.value[0], t=0.0)


def decode_full(pipeline: RomPipeline, state: ReducedState) -> np.ndarray:
    """Split-decode, undo preprocessing, lift back to the full phase space."""
    scaled = tr.decode(pipeline.params, state.x_bar[None, :], state.v_bar[None, :]).value[0]
    u_tilde = tr.postprocess(scaled, pipeline.scaling)
    return pipeline.basis.lift(u_tilde)


def decode_full_batch(pipeline: RomPipeline, x_bars: np.ndarray, v_bars: np.ndarray) -> np.ndarray:
    """Decode a whole reduced trajectory at once; returns 2N x S columns."""
    scaled = tr.decode(pipeline.params, x_bars, v_bars).value
    u_tilde = tr.postprocess(scaled, pipeline.scaling)
    return pipeline.basis.lift(u_tilde.T)


def reduced_system(pipeline: RomPipeline) -> SeparableSystem:
    grad_pot = nn.dense_gradient_fn(pipeline.params.hnn_pot)
    grad_kin = nn.dense_gradient_fn(pipeline.params.hnn_kin)
    k = pipeline.params.hnn_pot.layers[0].in_size
    return SeparableSystem(
        grad_potential=lambda x: grad_pot(x[None, :])[0],
        grad_kinetic=lambda v: grad_kin(v[None, :])[0],
        dim=k,
    )


def reduced_energy(pipeline: RomPipeline, state: ReducedState) -> float:
    return float(
        nn.hnn_value(pipeline.params, state.x_bar[None, :], state.v_bar[None, :]).value[0, 0]
    )


def rollout(
    pipeline: RomPipeline,
    state0: ReducedState,
    n_steps: int,
    observer: Optional[Callable[[int, ReducedState], None]] = None,
    observer_stride: int = 1,
) -> ReducedState:
    """n_steps Verlet steps in the reduced space; aborts on non-finite states."""
    system = reduced_system(pipeline)

    def obs(step, x, v):
        if observer is not None:
            observer(step, ReducedState(x, v, t=step * pipeline.dt))

    try:
        x, v = integrate(
            state0.x_bar, state0.v_bar, system, pipeline.dt, n_steps,
            observer=obs if observer is not None else None,
            observer_stride=observer_stride,
        )
    except FloatingPointError as exc:
        raise FloatingPointError(f"reduced rollout diverged: {exc}") from exc
    return ReducedState(x, v, t=n_steps * pipeline.dt)


def predict_trajectory(
    pipeline: RomPipeline,
    u_init: np.ndarray,
    n_steps: int,
    stride: int = 1,
    domain_length: float | None = None,
):
    """Full prediction: compress the initial state, integrate, decompress.

    Returns (steps, reconstructed 2N x S matrix); positions are wrapped
    into the periodic domain when domain_length is given.
    """
    state0 = encode_full(pipeline, u_init)
    captured_x, captured_v, steps = [], [], []

    def obs(step, state):
        steps.append(step)
        captured_x.append(state.x_bar)
        captured_v.append(state.v_bar)

    if n_steps == 0:
        obs(0, state0)
    else:
        rollout(pipeline, state0, n_steps, observer=obs, observer_stride=stride)
    recon = decode_full_batch(pipeline, np.stack(captured_x), np.stack(captured_v))
    if domain_length is not None:
        n = recon.shape[0] // 2
        recon[:n] = np.mod(recon[:n], domain_length)
    return np.array(steps), recon
