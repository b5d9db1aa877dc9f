"""Symplectic model reduction via complex SVD of position/velocity snapshots.

The basis A = [[Phi, -Psi], [Psi, Phi]] lies on the symplectic Stiefel
manifold (A^T J A = J) and is only ever stored and applied through its
N x M blocks; the dense 2N x 2M matrix is never materialized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


@dataclass
class SnapshotSet:
    """Time/parameter-indexed matrix of full states, one (x; v) column per snapshot."""

    full: np.ndarray  # 2N x S
    meta: list = field(default_factory=list)  # per-column (mu, step) tuples
    stride: int = 1

    def __post_init__(self):
        self.full = np.asarray(self.full, dtype=np.float64)
        if self.full.ndim != 2 or self.full.shape[0] % 2 != 0:
            raise ValueError("snapshot matrix must be 2D with an even row count")
        if not np.all(np.isfinite(self.full)):
            raise ValueError("snapshot matrix contains non-finite entries")

    @property
    def n_half(self) -> int:
        return self.full.shape[0] // 2

    @property
    def n_snapshots(self) -> int:
        return self.full.shape[1]

    @property
    def positions(self) -> np.ndarray:
        return self.full[: self.n_half]

    @property
    def velocities(self) -> np.ndarray:
        return self.full[self.n_half :]


@dataclass
class SymplecticBasis:
    """PSD basis stored as (Phi, Psi) blocks plus the leading singular values."""

    Phi: np.ndarray  # N x M
    Psi: np.ndarray  # N x M
    singular_values: np.ndarray  # length M, descending

    def __post_init__(self):
        self.Phi = np.asarray(self.Phi, dtype=np.float64)
        self.Psi = np.asarray(self.Psi, dtype=np.float64)
        self.singular_values = np.asarray(self.singular_values, dtype=np.float64)
        if self.Phi.shape != self.Psi.shape or self.Phi.ndim != 2:
            raise ValueError("Phi and Psi must be N x M arrays of identical shape")
        if self.singular_values.size != self.n_modes:
            raise ValueError("one singular value per mode is required")
        if np.any(np.diff(self.singular_values) > 0) or np.any(self.singular_values <= 0):
            raise ValueError("singular values must be positive and non-increasing")

    @property
    def n_full(self) -> int:
        return self.Phi.shape[0]

    @property
    def n_modes(self) -> int:
        return self.Phi.shape[1]

    def symplectic_defect(self) -> float:
        """|| A^T J_{2N} A - J_{2M} ||_F, computed blockwise."""
        P, S = self.Phi, self.Psi
        # A^T J A = [[P^T S - S^T P, P^T P + S^T S], [-(P^T P + S^T S), P^T S - S^T P]]
        skew = P.T @ S - S.T @ P
        gram = P.T @ P + S.T @ S
        eye = np.eye(self.n_modes)
        return float(np.sqrt(2.0 * np.sum(skew**2) + 2.0 * np.sum((gram - eye) ** 2)))

    def project(self, u: np.ndarray) -> np.ndarray:
        """A+ u, four N x M block products; u stacks (x; v), possibly batched columns."""
        x, v = u[: self.n_full], u[self.n_full :]
        # A+ = J_{2M}^T A^T J_{2N} = [[Phi^T, Psi^T], [-Psi^T, Phi^T]]
        return np.concatenate(
            [self.Phi.T @ x + self.Psi.T @ v, -self.Psi.T @ x + self.Phi.T @ v], axis=0
        )

    def lift(self, u_tilde: np.ndarray) -> np.ndarray:
        """A u_tilde back to the full 2N phase space."""
        m = self.n_modes
        xt, vt = u_tilde[:m], u_tilde[m:]
        return np.concatenate(
            [self.Phi @ xt - self.Psi @ vt, self.Psi @ xt + self.Phi @ vt], axis=0
        )


def assemble_complex_snapshots(snapshots: SnapshotSet) -> np.ndarray:
    """Stack snapshots into the complex N x S matrix X + i V."""
    if snapshots.n_snapshots == 0:
        raise ValueError("empty snapshot set")
    return snapshots.positions + 1j * snapshots.velocities


def truncated_complex_svd(U: np.ndarray, n_modes: int, oversample: int = 10):
    """Leading n_modes left singular triplets of a complex matrix.

    Uses the eigen-decomposition of the S x S Gram matrix when S <= 4096
    (the N >> S regime), otherwise a randomized range-finder with two
    power iterations.  Returns (W, sigma, V) with W^*W = I.
    """
    U = np.ascontiguousarray(U)
    n, s = U.shape
    if n_modes < 1 or n_modes > min(n, s):
        raise ValueError(f"target rank {n_modes} out of range for a {n}x{s} matrix")
    if s <= 4096:
        gram = U.conj().T @ U
        evals, evecs = scipy.linalg.eigh(gram)
        evals, evecs = evals[::-1], evecs[:, ::-1]
        tol = max(n, s) * np.finfo(float).eps * max(evals[0], 0.0)
        rank = int(np.sum(evals > tol))
        if rank < n_modes:
            warnings.warn(
                f"requested {n_modes} modes but numerical rank is {rank}; truncating",
                stacklevel=2,
            )
            n_modes = rank
        sigma = np.sqrt(evals[:n_modes])
        V = evecs[:, :n_modes]
        W = (U @ V) / sigma
        # With a large dynamic range in sigma the Gram route loses a few
        # digits of orthonormality on trailing modes; QR restores it while
        # changing the near-orthonormal columns only at that same level.
        W, r = np.linalg.qr(W)
        phases = np.where(np.abs(r.diagonal()) > 0, r.diagonal(), 1.0)
        W = W * (phases / np.abs(phases))
    else:
        rng = np.random.default_rng(0)
        sketch = rng.standard_normal((s, n_modes + oversample))
        Q = np.linalg.qr(U @ sketch)[0]
        for _ in range(2):
            Q = np.linalg.qr(U.conj().T @ Q)[0]
            Q = np.linalg.qr(U @ Q)[0]
        Wb, sigma, Vh = np.linalg.svd(Q.conj().T @ U, full_matrices=False)
        W = (Q @ Wb)[:, :n_modes]
        sigma = sigma[:n_modes]
        V = Vh.conj().T[:, :n_modes]
    return W, sigma, V


def build_symplectic_basis(W: np.ndarray, sigma: np.ndarray) -> SymplecticBasis:
    """Split W = Phi + i Psi into the real symplectic basis blocks."""
    ortho_defect = np.linalg.norm(W.conj().T @ W - np.eye(W.shape[1]))
    if ortho_defect > 1e-8:
        raise ValueError(f"W columns are not orthonormal (defect {ortho_defect:.3e})")
    basis = SymplecticBasis(Phi=W.real.copy(), Psi=W.imag.copy(), singular_values=sigma)
    defect = basis.symplectic_defect()
    if defect > 1e-8:
        raise ValueError(f"symplectic condition violated (defect {defect:.3e})")
    return basis


def build_basis_from_snapshots(snapshots: SnapshotSet, n_modes: int) -> SymplecticBasis:
    W, sigma, _ = truncated_complex_svd(assemble_complex_snapshots(snapshots), n_modes)
    return build_symplectic_basis(W, sigma)


def psd_reduced_gradient(basis: SymplecticBasis, u_tilde: np.ndarray, grad_full):
    """Separable reduced gradient split: lift, evaluate, project back.

    grad_full(x, v) must return (grad_pot, grad_kin) in the full space.
    Returns (reduced grad_pot block, reduced grad_kin block), i.e. the
    gradient of H(A .) with respect to (x_tilde, v_tilde).
    """
    m = basis.n_modes
    u = basis.lift(u_tilde)
    gx, gv = grad_full(u[: basis.n_full], u[basis.n_full :])
    # grad of H(A u~) = A^T grad H; block rows of A^T applied to (gx; gv)
    grad_xt = basis.Phi.T @ gx + basis.Psi.T @ gv
    grad_vt = -basis.Psi.T @ gx + basis.Phi.T @ gv
    return grad_xt, grad_vt


def reconstruction_error(basis: SymplecticBasis, snapshots: SnapshotSet) -> float:
    """Relative Frobenius error || U - A A+ U ||_F / || U ||_F, blockwise."""
    U = snapshots.full
    recon = basis.lift(basis.project(U))
    return float(np.linalg.norm(U - recon) / np.linalg.norm(U))
