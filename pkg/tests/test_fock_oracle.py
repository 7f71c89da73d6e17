from math import factorial

import numpy as np
import pytest

from gaussk import errors
from gaussk import fock_oracle as fo
from gaussk import states as st
from gaussk.policy import use_policy
from gaussk.sampling import random_mixed_state, random_pure_state

from conftest import fermion_pair


def comm(a, b):
    return a @ b - b @ a


def acomm(a, b):
    return a @ b + b @ a


class TestOperators:
    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_car_exact(self, N):
        rep = fo.build("fermion", N)
        X = rep.xi_ops
        for a in range(2 * N):
            for b in range(2 * N):
                assert np.abs(acomm(X[a], X[b]) - (a == b) * np.eye(rep.dim)).max() < 1e-14
        for i, ai in enumerate(rep.annihilators):
            for j, aj in enumerate(rep.annihilators):
                assert np.abs(acomm(ai, aj)).max() < 1e-14
                assert np.abs(acomm(ai, aj.T) - (i == j) * np.eye(rep.dim)).max() < 1e-14

    def test_ccr_interior(self):
        rep = fo.build("boson", 2, 6)
        q0, q1, p0, p1 = rep.xi_ops
        inner = np.all(rep.occupations() < 5, axis=1)
        block = np.ix_(inner, inner)
        assert np.abs(comm(q0, p0)[block] - 1j * np.eye(inner.sum())).max() < 1e-14
        assert np.abs(comm(q0, p1)).max() < 1e-14
        assert np.abs(comm(q0, q1)).max() < 1e-14

    def test_hermitian(self):
        for rep in (fo.build("boson", 2, 5), fo.build("fermion", 2)):
            for X in rep.xi_ops:
                assert np.abs(X - X.conj().T).max() < 1e-15

    def test_jordan_wigner_order(self):
        rep = fo.build("fermion", 2)
        # mode 0 is the leading tensor factor
        assert rep.annihilators[0][0, 2] == 1.0
        assert rep.annihilators[1][0, 1] == 1.0

    def test_budget(self):
        with use_policy(fermion_max_modes=3):
            with pytest.raises(errors.BudgetExceeded):
                fo.build("fermion", 4)
        with pytest.raises(errors.BudgetExceeded):
            fo.build("boson", 4, 20)


class TestStateVector:
    @pytest.mark.parametrize("stats", ["boson", "fermion"])
    def test_vacuum(self, stats):
        rep = fo.build(stats, 2, 6 if stats == "boson" else None)
        v = fo.state_vector(rep, st.vacuum(stats, 2))
        assert abs(abs(v[0]) - 1) < 1e-14
        assert np.abs(v[1:]).max() < 1e-14

    @pytest.mark.parametrize("rho", [0.2, 0.6, 1.0])
    def test_squeezed_amplitudes(self, rho):
        J = np.array([[0.0, np.exp(-rho)], [-np.exp(rho), 0.0]])
        rep = fo.build("boson", 1, 60)
        v = fo.state_vector(rep, st.pure_state("boson", J))
        v = v * np.exp(-1j * np.angle(v[0]))
        t = np.tanh(rho / 2)
        for n in range(10):
            expect = np.sqrt(factorial(2 * n)) / (2**n * factorial(n)) * (-t) ** n / np.sqrt(np.cosh(rho / 2))
            assert abs(v[2 * n] - expect) < 1e-8
            assert abs(v[2 * n + 1]) < 1e-12

    def test_coherent_amplitudes(self):
        z = np.array([0.4, -0.3])
        alpha = (z[0] + 1j * z[1]) / np.sqrt(2)
        rep = fo.build("boson", 1, 40)
        v = fo.state_vector(rep, st.pure_state("boson", np.array([[0.0, 1.0], [-1.0, 0.0]]), z))
        v = v * np.exp(-1j * np.angle(v[0]))
        for n in range(8):
            expect = np.exp(-abs(alpha) ** 2 / 2) * alpha**n / np.sqrt(factorial(n))
            assert abs(v[n] - expect) < 1e-12

    @pytest.mark.parametrize("sign", [1, -1])
    def test_fermion_pair(self, sign):
        theta, phi = 0.9, 0.4
        rep = fo.build("fermion", 2)
        v = fo.state_vector(rep, fermion_pair(theta, phi, sign))
        i0, i1 = (0, 3) if sign == 1 else (2, 1)
        amps = np.abs(v)
        assert amps[i0] == pytest.approx(np.cos(theta / 2), abs=1e-12)
        assert amps[i1] == pytest.approx(np.sin(theta / 2), abs=1e-12)
        assert amps.sum() == pytest.approx(amps[i0] + amps[i1], abs=1e-12)

    @pytest.mark.parametrize("stats", ["boson", "fermion"])
    def test_annihilated(self, stats):
        rng = np.random.default_rng(11)
        s = random_pure_state(rng, stats, 2, max_rho=0.4)
        rep = fo.build(stats, 2, 30 if stats == "boson" else None)
        v = fo.state_vector(rep, s)
        P = 0.5 * (np.eye(4) + 1j * s.J)
        inner = np.all(rep.occupations() < 20, axis=1) if stats == "boson" else slice(None)
        for a in range(4):
            op = sum(P[a, b] * (rep.xi_ops[b] - s.z[b] * np.eye(rep.dim)) for b in range(4))
            assert np.abs((op @ v)[inner]).max() < 1e-8

    def test_covariance_matches(self):
        s = random_pure_state(np.random.default_rng(4), "boson", 2, max_rho=0.4)
        rep = fo.build("boson", 2, 30)
        C = fo.covariance_from(rep, fo.state_vector(rep, s), s.z)
        assert np.abs(C - st.two_point(s).C2).max() < 1e-8

    def test_truncation_too_small(self):
        J = np.array([[0.0, np.exp(-2.0)], [-np.exp(2.0), 0.0]])
        rep = fo.build("boson", 1, 8)
        with pytest.raises(errors.TruncationTooSmall):
            fo.state_vector(rep, st.pure_state("boson", J))
        assert fo.boson_tail_mass(st.pure_state("boson", J), 8) > 1e-3


class TestMixed:
    def test_fermion_density_matrix(self):
        s = random_mixed_state(np.random.default_rng(2), "fermion", 3)
        rep = fo.build("fermion", 3)
        rho = fo.density_matrix(rep, s)
        assert np.trace(rho).real == pytest.approx(1.0)
        assert np.abs(fo.covariance_from(rep, rho) - st.two_point(s).C2).max() < 1e-10

    def test_boson_density_matrix(self):
        s = random_mixed_state(np.random.default_rng(3), "boson", 1, beta_range=(1.0, 2.0), max_rho=0.3)
        rep = fo.build("boson", 1, 50)
        rho = fo.density_matrix(rep, s)
        assert np.abs(fo.covariance_from(rep, rho, s.z) - st.two_point(s).C2).max() < 1e-8

    def test_partial_trace_pure(self):
        rng = np.random.default_rng(8)
        s = random_pure_state(rng, "fermion", 3)
        rep = fo.build("fermion", 3)
        v = fo.state_vector(rep, s)
        rA = fo.partial_trace(rep, v, [0, 2])
        rB = fo.partial_trace(rep, v, [1])
        assert fo.entropy(rA) == pytest.approx(fo.entropy(rB), abs=1e-12)
        assert np.trace(rA).real == pytest.approx(1.0)

    def test_relative_entropy(self):
        rep = fo.build("fermion", 2)
        rho = fo.density_matrix(rep, random_mixed_state(np.random.default_rng(0), "fermion", 2))
        assert fo.relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)
        sig = fo.density_matrix(rep, random_mixed_state(np.random.default_rng(1), "fermion", 2))
        assert fo.relative_entropy(rho, sig) > 0
