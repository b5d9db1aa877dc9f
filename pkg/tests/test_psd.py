import numpy as np
import pytest

from picrom import psd
from picrom.psd import SnapshotSet, SymplecticBasis

from conftest import rel_err


def random_snapshots(rng, n=40, s=30):
    return SnapshotSet(full=rng.standard_normal((2 * n, s)), meta={}, stride=1)


def dense_A(basis):
    return np.block([[basis.Phi, -basis.Psi], [basis.Psi, basis.Phi]])


def dense_Aplus(basis):
    return np.block([[basis.Phi.T, basis.Psi.T], [-basis.Psi.T, basis.Phi.T]])


class TestAssemble:
    def test_real_column(self):
        snaps = SnapshotSet(full=np.concatenate([np.ones((3, 1)), np.zeros((3, 1))]),
                            meta={}, stride=1)
        U = psd.assemble_complex_snapshots(snaps)
        assert np.array_equal(U, np.ones((3, 1), dtype=complex))

    def test_imaginary_column(self):
        snaps = SnapshotSet(full=np.concatenate([np.zeros((3, 1)), np.ones((3, 1))]),
                            meta={}, stride=1)
        U = psd.assemble_complex_snapshots(snaps)
        assert np.array_equal(U, 1j * np.ones((3, 1)))

    def test_round_trip_bitwise(self, rng):
        snaps = random_snapshots(rng, n=5, s=4)
        U = psd.assemble_complex_snapshots(snaps)
        assert np.array_equal(U.real, snaps.positions)
        assert np.array_equal(U.imag, snaps.velocities)


class TestTruncatedSvd:
    def test_diagonal_case(self):
        U = np.array([[3.0, 0.0], [0.0, 2.0j]])
        W, sigma, _ = psd.truncated_complex_svd(U, 1)
        assert sigma[0] == pytest.approx(3.0, rel=1e-12)
        assert abs(W[0, 0]) == pytest.approx(1.0, rel=1e-12)
        assert abs(W[1, 0]) < 1e-12

    def test_matches_dense_oracle(self, rng):
        U = rng.standard_normal((40, 60)) + 1j * rng.standard_normal((40, 60))
        W, sigma, _ = psd.truncated_complex_svd(U, 10)
        _, s_ref, _ = np.linalg.svd(U)
        assert np.max(np.abs(sigma - s_ref[:10])) < 1e-10
        # projector comparison (basis is only unique up to phase)
        Wd, _, _ = np.linalg.svd(U, full_matrices=False)
        P_ref = Wd[:, :10] @ Wd[:, :10].conj().T
        assert np.max(np.abs(W @ W.conj().T - P_ref)) < 1e-8
        assert np.max(np.abs(W.conj().T @ W - np.eye(10))) < 1e-10

    def test_duplicated_columns_rank_deficient(self, rng):
        col = rng.standard_normal((8, 1)) + 1j * rng.standard_normal((8, 1))
        U = np.tile(col, (1, 6))
        with pytest.warns(UserWarning):
            W, sigma, _ = psd.truncated_complex_svd(U, 4)
        assert W.shape[1] < 4


class TestSymplecticBasis:
    def test_real_basis_transpose_inverse(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((6, 3)))
        basis = psd.build_symplectic_basis(Q.astype(complex), np.array([3.0, 2.0, 1.0]))
        assert np.max(np.abs(basis.Psi)) == 0.0
        A = dense_A(basis)
        assert rel_err(dense_Aplus(basis), A.T) < 1e-14

    def test_hand_checked_complex_mode(self):
        W = np.zeros((2, 1), dtype=complex)
        W[0, 0] = 1 / np.sqrt(2)
        W[1, 0] = 1j / np.sqrt(2)
        basis = psd.build_symplectic_basis(W, np.array([1.0]))
        A = dense_A(basis)
        expected = np.array([[1, 0], [0, -1], [0, 1], [1, 0]]) / np.sqrt(2)
        assert rel_err(A, expected) < 1e-14
        assert rel_err(dense_Aplus(basis) @ A, np.eye(2)) < 1e-12

    def test_constructed_basis_invariants(self, rng):
        snaps = random_snapshots(rng)
        basis = psd.build_basis_from_snapshots(snaps, 6)
        assert basis.symplectic_defect() <= 1e-10
        A = dense_A(basis)
        assert np.linalg.norm(dense_Aplus(basis) @ A - np.eye(12)) <= 1e-10
        assert np.all(np.diff(basis.singular_values) <= 1e-12)

    def test_broken_orthonormality_rejected(self, rng):
        W = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
        with pytest.raises(ValueError):
            psd.build_symplectic_basis(W, np.array([3.0, 2.0, 1.0]))


class TestProjectLift:
    def test_lift_then_project_identity(self, rng):
        basis = psd.build_basis_from_snapshots(random_snapshots(rng), 5)
        ut = rng.standard_normal(10)
        assert rel_err(basis.project(basis.lift(ut)), ut) < 1e-10

    def test_span_fixed_point(self, rng):
        basis = psd.build_basis_from_snapshots(random_snapshots(rng), 5)
        u = basis.lift(rng.standard_normal(10))
        recon = basis.lift(basis.project(u))
        assert rel_err(recon, u) < 1e-9

    def test_orthogonal_complement_error(self, rng):
        basis = psd.build_basis_from_snapshots(random_snapshots(rng, n=8, s=6), 2)
        A = dense_A(basis)
        u = rng.standard_normal(16)
        recon = basis.lift(basis.project(u))
        proj_dense = A @ np.linalg.solve(A.T @ A, A.T @ u)
        # A+ = pseudo-inverse here because A has orthonormal columns
        assert rel_err(recon, proj_dense) < 1e-9

    def test_batched_columns(self, rng):
        basis = psd.build_basis_from_snapshots(random_snapshots(rng), 4)
        U = rng.standard_normal((80, 7))
        cols = np.stack([basis.project(U[:, j]) for j in range(7)], axis=1)
        assert rel_err(basis.project(U), cols) < 1e-13


class TestReducedGradient:
    def test_dense_oracle_small_system(self, rng):
        basis = psd.build_basis_from_snapshots(random_snapshots(rng, n=8, s=6), 2)
        A = dense_A(basis)
        H = rng.standard_normal((16, 16))
        H = H @ H.T  # quadratic Hamiltonian hessian

        def grad_full(x, v):
            g = H @ np.concatenate([x, v])
            return g[:8], g[8:]

        ut = rng.standard_normal(4)
        gx, gv = psd.psd_reduced_gradient(basis, ut, grad_full)
        ref = A.T @ (H @ (A @ ut))
        assert rel_err(np.concatenate([gx, gv]), ref) < 1e-10

    def test_zero_velocity_block_real_basis(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((8, 2)))
        basis = psd.build_symplectic_basis(Q.astype(complex), np.array([2.0, 1.0]))

        def grad_full(x, v):
            return np.zeros(8), v  # kinetic gradient only

        ut = np.concatenate([rng.standard_normal(2), np.zeros(2)])
        gx, gv = psd.psd_reduced_gradient(basis, ut, grad_full)
        assert np.max(np.abs(gx)) < 1e-14
        assert np.max(np.abs(gv)) < 1e-14  # v block of lift is zero here


class TestReconstructionError:
    def test_full_rank_error_tiny(self, rng):
        snaps = random_snapshots(rng, n=10, s=8)
        basis = psd.build_basis_from_snapshots(snaps, 8)
        assert psd.reconstruction_error(basis, snaps) <= 1e-9

    def test_monotone_in_modes(self, rng):
        snaps = random_snapshots(rng, n=32, s=24)
        errs = [psd.reconstruction_error(psd.build_basis_from_snapshots(snaps, m), snaps)
                for m in (2, 4, 8, 16)]
        assert all(errs[i + 1] <= errs[i] + 1e-12 for i in range(len(errs) - 1))

    def test_zero_modes_rejected(self, rng):
        snaps = random_snapshots(rng, n=8, s=6)
        with pytest.raises(ValueError):
            psd.build_basis_from_snapshots(snaps, 0)
