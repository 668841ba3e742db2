import numpy as np
import pytest

from qls.algebra import jmat, williamson
from qls.model import QLSystem, default_grid, gauge_transform, series_product, tf_equal
from qls.sampling import random_pure_input, random_qlsystem, random_symplectic
from qls.stationary import (
    InputCovariance,
    is_globally_minimal,
    power_spectrum,
    ps_cascade_embedding,
    pure_mixed_split,
    siso_passive_gm,
    solve_lyapunov,
    vacuum_covariance,
)

from conftest import absorber_two_mode_example, active_one_mode_example, cavity, gm2_system, squeezed_input


class TestInputCovariance:
    def test_vacuum_is_pure(self):
        assert InputCovariance.vacuum(2).is_pure

    def test_thermal_is_mixed(self):
        assert not InputCovariance([[0.5]], [[0.0]]).is_pure

    def test_squeezed_purity_condition(self):
        assert squeezed_input(0.8).is_pure

    def test_nonphysical_rejected(self):
        with pytest.raises(ValueError):
            InputCovariance([[0.1]], [[5.0]])  # |M|^2 >> N(N+1)

    def test_structure_validation(self):
        with pytest.raises(ValueError):
            InputCovariance([[0.1 + 1j]], [[0.0]])


class TestSolveLyapunov:
    def test_passive_vacuum_settles_to_vacuum(self):
        st = solve_lyapunov(cavity(), InputCovariance.vacuum(1))
        assert np.linalg.norm(st.P - vacuum_covariance(1)) < 1e-12
        assert np.max(st.symplectic_spectrum) < 1e-10

    def test_absorber_example_entries(self):
        # stationary covariance of the worked two-mode example
        st = solve_lyapunov(absorber_two_mode_example(), InputCovariance.vacuum(1))
        assert abs(st.P[0, 0] - 1.1067) < 5e-5
        assert abs(st.P[0, 1] - (-0.0799 - 0.1952j)) < 5e-5
        assert np.allclose(np.sort(st.symplectic_spectrum), [0.0022, 0.3623], atol=5e-5)

    def test_random_residuals(self, rng):
        for _ in range(10):
            sys = random_qlsystem(rng, 3, 2)
            N, M = random_pure_input(rng, 2)
            st = solve_lyapunov(sys, InputCovariance(N, M))
            assert st.residual < 1e-8

    def test_non_hurwitz_raises(self):
        sys = QLSystem.from_blocks([[0.0]], [[0.0]], [[1.0]], [[0.0]])
        with pytest.raises(ValueError):
            solve_lyapunov(sys, InputCovariance.vacuum(1))


class TestPowerSpectrum:
    def test_passive_vacuum_trivial(self, rng):
        sys = random_qlsystem(rng, 2, 2, passive=True)
        vac = InputCovariance.vacuum(2)
        for s in default_grid(sys, 11):
            assert np.linalg.norm(power_spectrum(sys, vac, s) - vacuum_covariance(2)) < 1e-9

    def test_one_mode_example_rational_structure(self):
        # Psi(s) J of the worked one-mode system is rational with poles at
        # +/- lambda, +/- conj(lambda), lambda = -24 + i sqrt(3); its (2,2)
        # entry is a constant over the monic quartic denominator
        sys = active_one_mode_example()
        lam = -24.0 + 1j * np.sqrt(3.0)
        den = np.poly([lam, np.conj(lam), -lam, -np.conj(lam)])
        vac = InputCovariance.vacuum(1)
        J = jmat(1)
        values = []
        for s in (0.3 + 0.8j, -1.1 + 0.4j, 2.0 - 3.0j):
            PsiJ = power_spectrum(sys, vac, s) @ J
            values.append(PsiJ[1, 1] * np.polyval(den, s))
        assert np.allclose(values, -3088.0, atol=1e-8)
        # (1,1) entry tends to 1 at infinity
        s = 1e6 + 1e5j
        assert abs((power_spectrum(sys, vac, s) @ J)[0, 0] - 1.0) < 1e-6

    def test_gauge_invariance(self, rng):
        sys = random_qlsystem(rng, 2, 1)
        out = gauge_transform(sys, random_symplectic(rng, 2))
        V = InputCovariance(*random_pure_input(rng, 1))
        for s in default_grid(sys, 11):
            assert np.linalg.norm(
                power_spectrum(sys, V, s) - power_spectrum(out, V, s)
            ) < 1e-9

    def test_axis_values_are_covariances(self, rng):
        sys = random_qlsystem(rng, 2, 1)
        V = InputCovariance(*random_pure_input(rng, 1))
        for w in (0.0, 0.7, -2.3):
            Psi = power_spectrum(sys, V, -1j * w)
            nus = williamson(Psi, 1).symplectic_eigenvalues
            assert np.min(nus) > -1e-9

    def test_mixed_inputs_accepted(self, rng):
        sys = random_qlsystem(rng, 1, 1)
        thermal = InputCovariance([[0.7]], [[0.0]])
        Psi = power_spectrum(sys, thermal, -0.5j)
        assert Psi.shape == (2, 2)


class TestGlobalMinimality:
    def test_passive_vacuum_not_gm(self, rng):
        sys = random_qlsystem(rng, 2, 1, passive=True)
        assert not is_globally_minimal(sys, InputCovariance.vacuum(1))

    def test_one_mode_example_gm(self):
        assert is_globally_minimal(active_one_mode_example(), InputCovariance.vacuum(1))

    def test_gm2_family_verdicts(self):
        V = squeezed_input(0.5)
        for x, expected in ((0.0, True), (8.0, True), (-1.0, False), (-4.0, False)):
            assert is_globally_minimal(gm2_system(x), V) == expected

    def test_mixed_input_rejected(self, rng):
        sys = random_qlsystem(rng, 1, 1)
        with pytest.raises(ValueError):
            is_globally_minimal(sys, InputCovariance([[0.4]], [[0.0]]))


class TestSisoPassiveGm:
    def test_detuned_cavity_gm(self):
        out = siso_passive_gm(cavity(kappa=1.0, omega0=2.0), squeezed_input(0.5))
        assert out["globally_minimal"]
        assert out["reducible_eigs"] == []

    def test_gm2_reducible_sets(self):
        V = squeezed_input(0.5)
        out = siso_passive_gm(gm2_system(-1.0), V)
        assert not out["globally_minimal"]
        assert len(out["reducible_eigs"]) == 1
        assert abs(out["reducible_eigs"][0].imag) < 1e-9  # one real eigenvalue
        out = siso_passive_gm(gm2_system(-4.0), V)
        assert len(out["reducible_eigs"]) == 2  # conjugate pair

    def test_opposite_detuning_pair_reducible(self):
        c, om = 1.1, 0.9
        first = cavity(kappa=c * c, omega0=om)
        second = cavity(kappa=c * c, omega0=-om)
        casc = series_product(first, second)
        out = siso_passive_gm(casc, squeezed_input(0.3))
        assert not out["globally_minimal"]
        assert len(out["reducible_eigs"]) == 2

    def test_vacuum_input_rejected(self):
        with pytest.raises(ValueError):
            siso_passive_gm(cavity(), InputCovariance.vacuum(1))


class TestPureMixedSplit:
    def test_gm_system_has_empty_pure_part(self):
        out = pure_mixed_split(active_one_mode_example(), InputCovariance.vacuum(1))
        assert out["pure"] is None
        assert out["mixed"].n == 1

    def test_gm2_dimensions(self):
        V = squeezed_input(0.5)
        out = pure_mixed_split(gm2_system(-4.0), V)
        assert out["pure"].n == 2 and out["mixed"] is None
        out = pure_mixed_split(gm2_system(-1.0), V)
        assert out["pure"].n == 1 and out["mixed"].n == 1

    def test_split_reconstructs_tf_and_ps(self):
        V = squeezed_input(0.5)
        out = pure_mixed_split(gm2_system(-1.0), V)
        casc = series_product(out["pure"], out["mixed"])
        assert tf_equal(casc, out["rotated"], tol=1e-6)
        # the mixed stage alone carries the whole (vacuum-basis) power spectrum
        vac = InputCovariance.vacuum(1)
        for s in default_grid(out["rotated"], 11):
            assert np.linalg.norm(
                power_spectrum(out["mixed"], vac, s) - power_spectrum(out["rotated"], vac, s)
            ) < 1e-7

    def test_pure_component_is_passive(self):
        out = pure_mixed_split(gm2_system(-4.0), squeezed_input(0.5))
        assert out["pure"].is_passive

    def test_split_consistent_with_gm(self, rng):
        vac1 = InputCovariance.vacuum(1)
        for _ in range(10):
            sys = random_qlsystem(rng, 2, 1)
            gm = is_globally_minimal(sys, vac1)
            out = pure_mixed_split(sys, vac1)
            assert (out["pure"] is None) == gm


class TestPsCascadeEmbedding:
    def test_uncoupled_embedding_constant(self):
        sys = QLSystem.from_blocks([[0.0]], [[0.0]], [[0.0]], [[0.0]])
        emb = ps_cascade_embedding(sys, InputCovariance.vacuum(1))
        for s in (0.3 + 1j, -2.0j, 1.5):
            assert np.linalg.norm(emb.transfer(s) - vacuum_covariance(1)) < 1e-12

    def test_one_mode_example_matches_psj(self):
        sys = active_one_mode_example()
        vac = InputCovariance.vacuum(1)
        emb = ps_cascade_embedding(sys, vac)
        J = jmat(1)
        for s in default_grid(sys, 21):
            PsiJ = power_spectrum(sys, vac, s) @ J
            assert np.linalg.norm(emb.transfer(s) - PsiJ) < 1e-6

    def test_embedding_drift_is_proper_lbt(self):
        sys = active_one_mode_example()
        emb = ps_cascade_embedding(sys, InputCovariance.vacuum(1))
        n2 = sys.A.shape[0]
        assert np.linalg.norm(emb.A[:n2, n2:]) < 1e-12
        top = np.linalg.eigvals(emb.A[:n2, :n2])
        bottom = np.linalg.eigvals(emb.A[n2:, n2:])
        assert np.min(top.real) > 0
        assert np.max(bottom.real) < 0

    def test_minimality_iff_global_minimality(self, rng):
        from qls.model import controllability_matrix, observability_matrix

        hits = {True: 0, False: 0}
        for k in range(20):
            if k % 2:
                sys = gm2_system(-1.0 if k % 4 == 1 else -4.0)
                V = squeezed_input(0.5)
            else:
                sys = random_qlsystem(rng, 2, 1)
                V = InputCovariance.vacuum(1)
            gm = is_globally_minimal(sys, V)
            emb = ps_cascade_embedding(sys, V)
            ctrb = controllability_matrix(emb.A, emb.B)
            obsv = observability_matrix(emb.C, emb.A)
            sv_c = np.linalg.svd(ctrb, compute_uv=False)
            sv_o = np.linalg.svd(obsv, compute_uv=False)
            minimal = (
                np.sum(sv_c > 1e-9 * sv_c[0]) == emb.A.shape[0]
                and np.sum(sv_o > 1e-9 * sv_o[0]) == emb.A.shape[0]
            )
            assert minimal == gm, f"case {k}"
            hits[gm] += 1
        assert hits[True] and hits[False]
