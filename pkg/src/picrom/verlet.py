"""Stoermer-Verlet integration for separable Hamiltonian systems.

The integrator only sees a pair of gradient callbacks, so the same code
advances the full particle system and the learned reduced dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass
class SeparableSystem:
    """Gradient callbacks of a separable Hamiltonian H(x, v) = H_pot(x) + H_kin(v)."""

    grad_potential: Callable[[np.ndarray], np.ndarray]
    grad_kinetic: Callable[[np.ndarray], np.ndarray]
    dim: int
    wrap: Optional[Callable[[np.ndarray], np.ndarray]] = None


def verlet_step(x: np.ndarray, v: np.ndarray, system: SeparableSystem, dt: float):
    """One kick-drift-kick step; position wrapping is part of the drift."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    v_half = v - 0.5 * dt * system.grad_potential(x)
    x_new = x + dt * system.grad_kinetic(v_half)
    if system.wrap is not None:
        x_new = system.wrap(x_new)
    v_new = v_half - 0.5 * dt * system.grad_potential(x_new)
    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(v_new))):
        raise FloatingPointError(
            f"non-finite state after Verlet step (dt={dt}, "
            f"|x|_max={np.max(np.abs(x_new)):.3e}, |v|_max={np.max(np.abs(v_new)):.3e})"
        )
    return x_new, v_new


def integrate(
    x0: np.ndarray,
    v0: np.ndarray,
    system: SeparableSystem,
    dt: float,
    n_steps: int,
    observer: Optional[Callable[[int, np.ndarray, np.ndarray], None]] = None,
    observer_stride: int = 1,
):
    """Apply n_steps Verlet steps, invoking observer(step, x, v) at a stride.

    The observer sees the initial state (step 0) and every stride-th step,
    giving floor(n_steps/stride) + 1 captures.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    x, v = np.array(x0, dtype=np.float64), np.array(v0, dtype=np.float64)
    if observer is not None:
        observer(0, x, v)
    for step in range(1, n_steps + 1):
        x, v = verlet_step(x, v, system, dt)
        if observer is not None and step % observer_stride == 0:
            observer(step, x, v)
    return x, v
