import numpy as np
import pytest

from qls.algebra import (
    Delta,
    du_blocks,
    factor_flat_gram,
    flat_adjoint,
    flat_unitary_residual,
    is_doubled_up,
    is_symplectic,
    jmat,
    sigma_swap,
    vacuum_basis_transform,
    williamson,
)
from qls.sampling import random_pure_input, random_symplectic


def random_du(rng, rows, cols, scale=1.0):
    z = lambda: scale * (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))
    return Delta(z(), z())


class TestFlatAdjoint:
    def test_identity_and_j_fixed_points(self):
        eye = np.eye(4, dtype=complex)
        assert np.allclose(flat_adjoint(eye), eye)
        J = jmat(2)
        assert np.allclose(flat_adjoint(J), J)

    def test_involution(self, rng):
        for _ in range(10):
            M = random_du(rng, 2, 3)
            assert np.allclose(flat_adjoint(flat_adjoint(M)), M)

    def test_product_rule(self, rng):
        for _ in range(10):
            A = random_du(rng, 2, 3)
            B = random_du(rng, 3, 2)
            assert np.allclose(flat_adjoint(A @ B), flat_adjoint(B) @ flat_adjoint(A), atol=1e-10)


class TestIsSymplectic:
    def test_identity(self):
        assert is_symplectic(np.eye(4, dtype=complex))

    def test_one_mode_squeezer(self):
        r = 0.7
        S = Delta([[np.cosh(r)]], [[np.sinh(r)]])
        assert is_symplectic(S)

    def test_scaling_fails(self):
        assert not is_symplectic(Delta([[2.0]], [[0.0]]))

    def test_odd_dimension_raises(self):
        with pytest.raises(ValueError):
            is_symplectic(np.eye(3))

    def test_random_exponentials(self, rng):
        for n in (1, 2, 3):
            assert is_symplectic(random_symplectic(rng, n), tol=1e-10)


class TestWilliamson:
    def test_vacuum(self):
        V = np.diag([1.0, 1.0, 0.0, 0.0]).astype(complex)
        res = williamson(V, 2)
        assert np.allclose(res.symplectic_eigenvalues, 0.0, atol=1e-12)

    def test_pure_squeezed_input(self, rng):
        N, M = random_pure_input(rng, 2)
        V = np.block([[N.T + np.eye(2), M], [M.conj().T, N]])
        res = williamson(V, 2)
        assert np.max(res.symplectic_eigenvalues) < 1e-10
        D = res.transform @ V @ res.transform.conj().T
        assert np.linalg.norm(D - np.diag(np.diag(D))) < 1e-9
        assert is_symplectic(res.transform, tol=1e-8)

    def test_thermal_diagonal(self):
        nvals = np.array([0.3, 1.7])
        V = np.block(
            [
                [np.diag(nvals) + np.eye(2), np.zeros((2, 2))],
                [np.zeros((2, 2)), np.diag(nvals)],
            ]
        )
        res = williamson(V, 2)
        assert np.allclose(res.symplectic_eigenvalues, nvals, atol=1e-12)

    def test_symplectic_invariance(self, rng):
        nvals = np.array([0.2, 0.9, 2.5])
        V = np.block(
            [
                [np.diag(nvals) + np.eye(3), np.zeros((3, 3))],
                [np.zeros((3, 3)), np.diag(nvals)],
            ]
        )
        for _ in range(5):
            S = random_symplectic(rng, 3)
            res = williamson(S @ V @ S.conj().T, 3)
            assert np.allclose(np.sort(res.symplectic_eigenvalues), nvals, atol=1e-8)

    def test_nonphysical_raises(self):
        V = np.diag([0.3, 0.3, -0.7, -0.7]).astype(complex)  # n_i = -0.7
        with pytest.raises(ValueError):
            williamson(V, 2)


class TestVacuumBasisTransform:
    def test_vacuum_gives_identity(self):
        S = vacuum_basis_transform(np.zeros((2, 2)), np.zeros((2, 2)))
        assert np.allclose(S, np.eye(4), atol=1e-12)

    def test_one_mode_closed_form(self):
        n = 1.2
        m = np.sqrt(n * (n + 1.0))
        S = vacuum_basis_transform([[n]], [[m]])
        assert np.allclose(S, Delta([[np.sqrt(n + 1)]], [[m / np.sqrt(n + 1)]]), atol=1e-12)

    def test_random_pure_roundtrip(self, rng):
        for m in (1, 2):
            N, M = random_pure_input(rng, m)
            S = vacuum_basis_transform(N, M)
            assert is_symplectic(S, tol=1e-10)
            Vvac = np.zeros((2 * m, 2 * m), dtype=complex)
            Vvac[:m, :m] = np.eye(m)
            V = np.block([[N.T + np.eye(m), M], [M.conj().T, N]])
            assert np.linalg.norm(S @ Vvac @ S.conj().T - V) < 1e-9

    def test_mixed_input_raises(self):
        with pytest.raises(ValueError):
            vacuum_basis_transform([[0.5]], [[0.0]])  # thermal: mixed


class TestFactorFlatGram:
    def test_identity(self):
        T = factor_flat_gram(np.eye(4, dtype=complex))
        assert np.allclose(T, np.eye(4), atol=1e-12)

    def test_positive_scalar_pair(self):
        lam = 2.5
        T = factor_flat_gram(lam * np.eye(2, dtype=complex))
        assert np.allclose(T, np.sqrt(lam) * np.eye(2), atol=1e-12)

    def test_negative_pair_uses_active_factor(self):
        G = -1.5 * np.eye(2, dtype=complex)
        T = factor_flat_gram(G)
        assert np.linalg.norm(flat_adjoint(T) @ T - G) < 1e-10
        # the factor must be genuinely active (off-diagonal block)
        minus, plus = du_blocks(T)
        assert np.linalg.norm(minus) < 1e-10
        assert np.linalg.norm(plus) > 1.0

    def test_random_flat_gram_residual(self, rng):
        for n in (1, 2, 3):
            for _ in range(10):
                N = random_du(rng, n, n)
                G = flat_adjoint(N) @ N
                T = factor_flat_gram(G)
                assert is_doubled_up(T)
                resid = np.linalg.norm(flat_adjoint(T) @ T - G) / np.linalg.norm(G)
                assert resid < 1e-8

    def test_singular_raises(self):
        with pytest.raises(ValueError):
            factor_flat_gram(np.zeros((2, 2), dtype=complex))

    def test_scalar_identity_multiples_factor_in_closed_form(self):
        # fully degenerate but canonical: scalar multiples of the identity
        T = factor_flat_gram(2.0 * np.eye(4, dtype=complex))
        assert np.allclose(T, np.sqrt(2.0) * np.eye(4), atol=1e-12)
        G = -2.0 * np.eye(4, dtype=complex)
        T = factor_flat_gram(G)
        assert np.linalg.norm(flat_adjoint(T) @ T - G) < 1e-10

    def test_degenerate_complex_eigenvalues_raise(self):
        # two identical complex two-mode blocks: eigenvalue multiplicity four
        mu, nu = 1.0, 2.0
        sig = np.array([[0.0, -1j], [1j, 0.0]])
        N1 = mu * np.eye(4)
        N2 = np.zeros((4, 4), dtype=complex)
        N2[:2, :2] = -nu * sig
        N2[2:, 2:] = -nu * sig
        G = Delta(N1, N2)
        with pytest.raises(ValueError):
            factor_flat_gram(G)

    def test_not_flat_self_adjoint_raises(self, rng):
        M = random_du(rng, 2, 2)
        with pytest.raises(ValueError):
            factor_flat_gram(M + np.eye(4) * 5)


def test_sigma_and_j_anticommute():
    n = 3
    assert np.allclose(jmat(n) @ sigma_swap(n), -sigma_swap(n) @ jmat(n))


def test_flat_unitary_residual_of_symplectic(rng):
    S = random_symplectic(rng, 2)
    assert flat_unitary_residual(S) < 1e-10
