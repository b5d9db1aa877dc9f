"""Error metrics, exponential-rate fits and phase-space histograms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ErrorReport:
    """Relative Frobenius errors per parameter and aggregates over time."""

    err_x_mu: float
    err_v_mu: float
    err_x_t: np.ndarray  # per-snapshot relative errors
    err_v_t: np.ndarray


@dataclass
class RateFit:
    slope: float
    intercept: float
    window: tuple
    r_squared: float
    peaks: list = field(default_factory=list)  # (t, log energy) pairs


def periodic_difference(a: np.ndarray, b: np.ndarray, domain_length: float) -> np.ndarray:
    """Minimal-image displacement a - b on a periodic domain."""
    d = a - b
    return d - domain_length * np.round(d / domain_length)


def relative_errors(
    ref: np.ndarray, test: np.ndarray, domain_length: float | None = None
) -> ErrorReport:
    """Frobenius-relative trajectory errors; rows stack (x; v), columns are snapshots.

    Position differences use the minimal periodic displacement when a
    domain length is given.
    """
    if ref.shape != test.shape:
        raise ValueError(f"trajectory shapes differ: {ref.shape} vs {test.shape}")
    n = ref.shape[0] // 2
    if domain_length is not None:
        dx = periodic_difference(test[:n], ref[:n], domain_length)
    else:
        dx = test[:n] - ref[:n]
    dv = test[n:] - ref[n:]
    ref_x, ref_v = ref[:n], ref[n:]
    err_x_mu = float(np.linalg.norm(dx) / np.linalg.norm(ref_x))
    err_v_mu = float(np.linalg.norm(dv) / np.linalg.norm(ref_v))
    err_x_t = np.linalg.norm(dx, axis=0) / np.linalg.norm(ref_x, axis=0)
    err_v_t = np.linalg.norm(dv, axis=0) / np.linalg.norm(ref_v, axis=0)
    return ErrorReport(err_x_mu, err_v_mu, err_x_t, err_v_t)


def aggregate_over_parameters(reports: list) -> dict:
    """Mean/min/max of the per-time error curves across a parameter grid."""
    ex = np.stack([r.err_x_t for r in reports])
    ev = np.stack([r.err_v_t for r in reports])
    return {
        "err_mean_x_t": ex.mean(axis=0), "err_min_x_t": ex.min(axis=0), "err_max_x_t": ex.max(axis=0),
        "err_mean_v_t": ev.mean(axis=0), "err_min_v_t": ev.min(axis=0), "err_max_v_t": ev.max(axis=0),
    }


def fit_rate(times: np.ndarray, energy: np.ndarray, window: tuple) -> RateFit:
    """Exponential rate from a least-squares line through the energy peaks.

    Strict local maxima of the series inside the window are used (fitting
    peaks removes the oscillation bias); the slope of ln(E_peak) vs t_peak
    is the reported rate.
    """
    times = np.asarray(times, dtype=np.float64)
    energy = np.asarray(energy, dtype=np.float64)
    t0, t1 = window
    mask = (times >= t0) & (times <= t1)
    t_w, e_w = times[mask], energy[mask]
    if np.any(e_w <= 0):
        raise ValueError("energy series must be positive inside the fit window")
    interior = (e_w[1:-1] > e_w[:-2]) & (e_w[1:-1] > e_w[2:])
    idx = np.where(interior)[0] + 1
    if idx.size < 3:
        # flat series has no strict maxima: fall back to all samples, which
        # is exact for a constant and still an error for <3 usable points
        if idx.size == 0 and e_w.size >= 3 and np.ptp(e_w) <= 1e-12 * np.max(e_w):
            idx = np.arange(e_w.size)
        else:
            raise ValueError(
                f"only {idx.size} energy peaks in window [{t0}, {t1}]; widen the window"
            )
    t_p, loge_p = t_w[idx], np.log(e_w[idx])
    slope, intercept = np.polyfit(t_p, loge_p, 1)
    fitted = slope * t_p + intercept
    ss_res = float(np.sum((loge_p - fitted) ** 2))
    ss_tot = float(np.sum((loge_p - loge_p.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), (t0, t1), r2,
                   peaks=list(zip(t_p.tolist(), loge_p.tolist())))


def phase_space_histogram(
    x: np.ndarray,
    v: np.ndarray,
    bins_x: int,
    bins_v: int,
    domain_length: float,
    v_range: tuple = (-6.0, 6.0),
) -> np.ndarray:
    """Unit-mass 2D histogram of the particle distribution, periodic in x."""
    if bins_x < 2 or bins_v < 2:
        raise ValueError("need at least 2 bins per axis")
    grid, _, _ = np.histogram2d(
        np.mod(x, domain_length), v,
        bins=(bins_x, bins_v),
        range=((0.0, domain_length), v_range),
    )
    total = grid.sum()
    return grid / total if total > 0 else grid
