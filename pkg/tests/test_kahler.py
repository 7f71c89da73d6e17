import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as hst

from conftest import boson_G, boson_J, fermion_pair
from gaussk import errors
from gaussk.kahler import (
    BOSON,
    FERMION,
    Convention,
    block_standard_form,
    cartan_decompose,
    complete_triple,
    generator_between,
    is_algebra_element,
    is_group_element,
    killing_form,
    matrix_function,
    relative_structure,
    split_pm,
    standard_structures,
    std_symplectic,
    validate_identities,
)
from gaussk.sampling import (
    random_compatible_triple,
    random_group_element,
    random_squeeze_generator,
    random_unitary_generator,
)

A1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
seeds = hst.integers(0, 2**32 - 1)
modes = hst.integers(1, 4)
both = hst.sampled_from([BOSON, FERMION])


def _algebra(rng, stats, N):
    a = rng.normal(size=(2 * N, 2 * N))
    if stats is FERMION:
        return a - a.T
    s = a + a.T
    return std_symplectic(N) @ s


class TestStandardStructures:
    @pytest.mark.parametrize("stats", ["boson", "fermion"])
    def test_single_mode_qp(self, stats):
        t = standard_structures(stats, 1)
        assert np.array_equal(t.G, np.eye(2))
        assert np.array_equal(t.Omega, A1)
        assert np.array_equal(t.J, A1)
        assert t.compatible

    def test_aadag_view(self):
        t = standard_structures("boson", 1, Convention.AADAG)
        assert np.allclose(t.Omega, [[0, -1j], [1j, 0]], atol=1e-15)
        assert np.allclose(t.J, [[-1j, 0], [0, 1j]], atol=1e-15)

    def test_aadag_round_trip(self):
        t = standard_structures("fermion", 3)
        back = t.to_convention("AAdag").to_convention("QP")
        assert np.allclose(back.J, t.J, atol=1e-15)

    def test_rejects_zero_modes(self):
        with pytest.raises(errors.DimensionMismatch):
            standard_structures("boson", 0)


class TestCompleteTriple:
    def test_standard_pair_gives_standard_J(self):
        t = complete_triple("boson", G=np.eye(2), Omega=A1)
        assert np.allclose(t.J, A1)

    @pytest.mark.parametrize("rho,phi", [(0.3, 0.0), (1.0, 1.2), (0.7, np.pi / 2)])
    def test_single_mode_boson_example(self, rho, phi):
        t = complete_triple("boson", G=boson_G(rho, phi), Omega=A1)
        assert np.abs(t.J - boson_J(rho, phi)).max() < 1e-12
        assert t.compatible

    def test_mixed_fermion_flagged(self):
        b = 0.6
        t = complete_triple("fermion", G=np.eye(2), Omega=np.tanh(b) * A1)
        assert not t.compatible
        assert np.allclose(t.J @ t.J, -np.tanh(b) ** 2 * np.eye(2))
        with pytest.raises(errors.IncompatiblePair):
            complete_triple("fermion", G=np.eye(2), Omega=np.tanh(b) * A1, strict=True)

    def test_singular_structure(self):
        with pytest.raises(errors.SingularStructure):
            complete_triple("boson", G=np.eye(2), Omega=np.zeros((2, 2)))

    def test_bad_symmetry(self):
        with pytest.raises(errors.IncompatiblePair):
            complete_triple("boson", G=np.array([[1.0, 0.5], [0.0, 1.0]]), Omega=A1)

    @given(seeds, modes, both)
    def test_two_out_of_three(self, seed, N, stats):
        t = random_compatible_triple(np.random.default_rng(seed), stats, N)
        for kw, missing in (({"G": t.G, "Omega": t.Omega}, "J"), ({"G": t.G, "J": t.J}, "Omega"), ({"Omega": t.Omega, "J": t.J}, "G")):
            t2 = complete_triple(stats, **kw)
            ref = getattr(t, missing)
            assert np.abs(getattr(t2, missing) - ref).max() < 1e-10 * max(1.0, np.abs(ref).max())


class TestGroupAndAlgebra:
    @pytest.mark.parametrize("stats", ["boson", "fermion"])
    def test_identity(self, stats):
        assert is_group_element(np.eye(4), stats)

    @given(seeds, modes, both)
    def test_exponentials(self, seed, N, stats):
        rng = np.random.default_rng(seed)
        K = 0.3 * _algebra(rng, stats, N)
        assert is_algebra_element(K, stats)
        assert is_group_element(sla.expm(K), stats)

    def test_scaling_is_not_symplectic(self):
        assert not is_group_element(np.diag([2.0, 1.0]), "boson")

    def test_dimension_mismatch(self):
        with pytest.raises(errors.DimensionMismatch):
            is_group_element(np.eye(3), "boson")


class TestKillingAndSplit:
    def test_standard_J(self):
        assert killing_form(A1, A1, "boson") == pytest.approx(-8.0)
        assert killing_form(np.zeros((2, 2)), A1, "boson") == 0.0

    def test_commuting_K(self):
        K = random_unitary_generator(np.random.default_rng(3), 3)
        Kp, Km = split_pm(K, std_symplectic(3))
        assert np.abs(Kp).max() < 1e-14
        assert np.allclose(Km, K)

    @given(seeds, modes, both)
    def test_split_properties(self, seed, N, stats):
        rng = np.random.default_rng(seed)
        J = std_symplectic(N)
        K = _algebra(rng, stats, N)
        Kp, Km = split_pm(K, J)
        assert np.abs(Kp @ J + J @ Kp).max() < 1e-12 * max(1, np.abs(K).max())
        assert np.abs(Km @ J - J @ Km).max() < 1e-12 * max(1, np.abs(K).max())
        assert np.allclose(Kp + Km, K)
        assert abs(np.trace(Kp @ Km)) < 1e-9 * max(1, np.abs(K).max() ** 2)
        assert abs(killing_form(Kp, Km, stats)) < 1e-9 * max(1, np.abs(K).max() ** 2)

    @pytest.mark.parametrize("stats,N", [(BOSON, 1), (BOSON, 3), (FERMION, 2), (FERMION, 4)])
    def test_tangent_dimension(self, stats, N):
        """Rank of K_+ -> [K_+, J] J over anticommuting generators."""
        rng = np.random.default_rng(N)
        J = std_symplectic(N)
        d = 2 * N
        basis = []
        for i in range(d):
            for j in range(d):
                E = np.zeros((d, d))
                E[i, j] = 1.0
                S = E + E.T if stats is BOSON else E - E.T
                K = std_symplectic(N) @ S if stats is BOSON else S
                basis.append(split_pm(K, J)[0])
        M = sla.expm(0.2 * _algebra(rng, stats, N)) if stats is FERMION else np.eye(d)
        Jm = M @ J @ np.linalg.inv(M)
        images = [((M @ Kp @ np.linalg.inv(M)) @ Jm - Jm @ (M @ Kp @ np.linalg.inv(M))) @ Jm for Kp in basis]
        rank = np.linalg.matrix_rank(np.array([x.ravel() for x in images]), tol=1e-8)
        assert rank == (N * (N + 1) if stats is BOSON else N * (N - 1))


class TestRelativeStructure:
    def test_identical(self):
        J = std_symplectic(2)
        rel = relative_structure(J, J, "boson")
        assert np.allclose(rel.Delta, np.eye(4))
        assert np.allclose(rel.spectrum, 0)

    def test_boson_single_mode(self):
        rho = 0.8
        rel = relative_structure(A1, boson_J(rho, np.pi / 2), "boson")
        assert np.allclose(np.sort(rel.eigenvalues), [np.exp(-rho), np.exp(rho)], atol=1e-12)
        assert rel.spectrum[0] == pytest.approx(rho, abs=1e-12)

    def test_fermion_pair(self):
        th = 1.1
        rel = relative_structure(std_symplectic(2), fermion_pair(th, 0.4).J, "fermion")
        w = rel.eigenvalues
        assert np.abs(np.sort(np.angle(w)) - np.array([-th, -th, th, th])).max() < 1e-10
        assert np.abs(np.abs(w) - 1).max() < 1e-12
        assert rel.spectrum[0] == pytest.approx(th, abs=1e-10)
        assert not rel.has_odd_minus_one_pairs

    def test_fermion_opposite_parity(self):
        rel = relative_structure(A1, -A1, "fermion")
        assert rel.has_odd_minus_one_pairs

    def test_invalid_input(self):
        with pytest.raises(errors.SpectrumClassificationFailure):
            relative_structure(A1, np.array([[0.0, 2.0], [-1.0, 0.5]]), "boson")

    @given(seeds, modes, both)
    def test_spectrum_pairing(self, seed, N, stats):
        rng = np.random.default_rng(seed)
        J = std_symplectic(N)
        M = random_group_element(rng, stats, N)
        rel = relative_structure(J, M @ J @ np.linalg.inv(M), stats)
        if stats is BOSON:
            w = np.sort(rel.eigenvalues)
            assert np.allclose(w * w[::-1], 1, atol=1e-10)
        else:
            assert np.abs(np.abs(rel.eigenvalues) - 1).max() < 1e-10


class TestCartan:
    def test_unitary_input(self):
        J = std_symplectic(2)
        u = sla.expm(random_unitary_generator(np.random.default_rng(0), 2))
        cd = cartan_decompose(u, J, "boson")
        assert np.abs(cd.T - np.eye(4)).max() < 1e-10

    def test_single_mode_squeeze(self):
        rho = 0.9
        M = np.diag([np.exp(rho / 2), np.exp(-rho / 2)])
        cd = cartan_decompose(M, A1, "boson")
        assert np.allclose(np.sort(np.linalg.eigvals(cd.T).real), [np.exp(-rho / 2), np.exp(rho / 2)])

    def test_fermion_obstruction(self):
        with pytest.raises(errors.NoCartanDecomposition):
            cartan_decompose(np.diag([1.0, -1.0]), A1, "fermion")

    def test_not_group_element(self):
        with pytest.raises(errors.NotGroupElement):
            cartan_decompose(np.diag([2.0, 1.0]), A1, "boson")

    def test_non_unique_warning(self):
        # squeezing angle pi on a mode pair: Delta has a -1 quadruple
        K = 0.5 * np.pi * np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0.0]])
        M = sla.expm(K)
        J = std_symplectic(2)
        with pytest.warns(errors.NonUniqueWarning):
            cd = cartan_decompose(M, J, "fermion")
        assert cd.non_unique
        assert np.abs(cd.T @ J @ cd.T - J).max() < 1e-9
        assert np.abs(cd.T @ cd.u - M).max() < 1e-9

    @given(seeds, modes, both)
    def test_residuals(self, seed, N, stats):
        rng = np.random.default_rng(seed)
        J = std_symplectic(N)
        M = random_group_element(rng, stats, N)
        cd = cartan_decompose(M, J, stats)
        Delta = -M @ J @ np.linalg.inv(M) @ J
        assert np.abs(cd.T @ cd.T - Delta).max() < 1e-9
        assert np.abs(cd.T @ J @ cd.T - J).max() < 1e-9
        assert np.abs(cd.u @ J - J @ cd.u).max() < 1e-9
        assert np.abs(cd.T @ cd.u - M).max() < 1e-9
        assert is_group_element(cd.u, stats, tol=1e-9)


class TestGenerator:
    def test_identical(self):
        assert np.abs(generator_between(A1, A1, "boson")).max() < 1e-14

    @pytest.mark.parametrize("rho,phi", [(0.4, 0.0), (1.0, 0.7), (0.6, 2.5)])
    def test_boson_single_mode(self, rho, phi):
        # half the log of the covariance in polar coordinates
        K = generator_between(A1, boson_J(rho, phi), "boson")
        expected = 0.5 * rho * np.array([[np.cos(phi), np.sin(phi)], [np.sin(phi), -np.cos(phi)]])
        assert np.abs(K - expected).max() < 1e-10

    def test_fermion_pair(self):
        th, phi = 0.9, 0.6
        K = generator_between(std_symplectic(2), fermion_pair(th, phi).J, "fermion")
        c, s = np.cos(phi), np.sin(phi)
        expected = 0.5 * th * np.array([[0, c, 0, s], [-c, 0, -s, 0], [0, s, 0, -c], [-s, 0, c, 0]])
        assert np.abs(K - expected).max() < 1e-10

    @given(seeds, modes, both)
    def test_round_trip(self, seed, N, stats):
        rng = np.random.default_rng(seed)
        J = std_symplectic(N)
        M = random_group_element(rng, stats, N)
        Jt = M @ J @ np.linalg.inv(M)
        K = generator_between(J, Jt, stats)
        assert np.abs(K @ J + J @ K).max() < 1e-9
        E = sla.expm(K)
        assert np.abs(E @ J @ np.linalg.inv(E) - Jt).max() < 1e-9


class TestBlockStandardForm:
    def test_already_standard(self):
        h = np.diag([2.0, 1.0, 2.0, 1.0])
        sf = block_standard_form(h, "boson")
        assert np.allclose(sf.params, [2.0, 1.0])

    def test_oscillator(self):
        w = 1.7
        sf = block_standard_form(np.diag([w**2, 1.0]), "boson")
        assert sf.params[0] == pytest.approx(w, abs=1e-12)

    def test_errors(self):
        with pytest.raises(errors.NotPositiveDefinite):
            block_standard_form(np.diag([1.0, -1.0]), "boson")
        with pytest.raises(errors.DegenerateForm):
            block_standard_form(np.zeros((2, 2)), "fermion")

    @given(seeds, modes, both)
    def test_random(self, seed, N, stats):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(2 * N, 2 * N))
        h = a @ a.T + 0.5 * np.eye(2 * N) if stats is BOSON else a - a.T
        sf = block_standard_form(h, stats)
        E = np.diag(sf.params)
        Z = np.zeros((N, N))
        std = np.block([[Z, E], [-E, Z]])
        F = std_symplectic(N) if stats is BOSON else np.eye(2 * N)
        K = F @ h
        M = sf.M
        assert is_group_element(M, stats, tol=1e-9)
        assert np.abs(np.linalg.solve(M, K @ M) - std).max() < 1e-9 * max(1, np.abs(K).max())
        assert np.all(np.diff(sf.params) <= 1e-12)
        if stats is BOSON:
            assert np.abs(M.T @ h @ M - np.diag(np.concatenate([sf.params] * 2))).max() < 1e-9 * np.abs(h).max()


class TestMatrixFunction:
    def test_exp_zero(self):
        assert np.array_equal(matrix_function(np.zeros((2, 2)), "exp"), np.eye(2))

    def test_sqrt_of_delta(self):
        rho = 1.2
        D = -boson_J(rho, 0.3) @ A1
        T = matrix_function(D, "sqrt")
        assert np.allclose(np.sort(np.linalg.eigvals(T).real), [np.exp(-rho / 2), np.exp(rho / 2)])
        assert np.abs(T @ T - D).max() < 1e-12

    def test_branch_violation(self):
        with pytest.raises(errors.BranchViolation):
            matrix_function(-np.eye(2), "sqrt")

    def test_real_storage(self):
        out = matrix_function(0.5 * A1, "exp")
        assert np.isrealobj(out)
        assert np.allclose(out, sla.expm(0.5 * A1))

    @given(seeds, modes, both)
    def test_log_exp(self, seed, N, stats):
        rng = np.random.default_rng(seed)
        K = 0.4 * _algebra(rng, stats, N)
        back = matrix_function(matrix_function(K, "exp"), "log")
        assert np.abs(back - K).max() < 1e-9


class TestIdentities:
    def test_standard_exact(self):
        rep = validate_identities(standard_structures("boson", 3))
        assert rep.max_residual == 0.0
        assert rep.passed

    @given(seeds, modes, both)
    def test_random_triples(self, seed, N, stats):
        t = random_compatible_triple(np.random.default_rng(seed), stats, N)
        assert validate_identities(t).max_residual < 1e-10

    def test_squeezed_completion(self):
        rng = np.random.default_rng(5)
        S = sla.expm(random_squeeze_generator(rng, 2, 0.8))
        t = complete_triple("boson", G=S @ S.T, Omega=std_symplectic(2))
        assert validate_identities(t).max_residual < 1e-10

    def test_corruption_detected(self):
        t = standard_structures("boson", 2)
        G = np.array(t.G)
        G[0, 0] += 1e-3
        from gaussk.kahler import KahlerTriple

        bad = KahlerTriple("boson", 2, G, t.Omega, t.J)
        assert validate_identities(bad).max_residual > 1e-4
