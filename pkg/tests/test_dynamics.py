import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from gaussk import dynamics as dyn
from gaussk import errors
from gaussk import fock_oracle as fo
from gaussk import io as gio
from gaussk import states as st
from gaussk.kahler import std_symplectic
from gaussk.sampling import random_hamiltonian, random_pure_state

A1 = std_symplectic(1)
seeds = hst.integers(0, 2**32 - 1)
H_BOSON = np.array([[2.0, 0.3, 0.1, 0.0], [0.3, 1.5, 0.0, 0.2], [0.1, 0.0, 1.2, -0.1], [0.0, 0.2, -0.1, 0.9]])
F_BOSON = np.array([0.1, -0.2, 0.3, 0.05])


def oscillator(w):
    return dyn.hamiltonian("boson", np.diag([w**2, 1.0]))


def ramp(eps, N=1, coupling=0.0):
    return gio.harmonic_chain(N, 1.0, coupling, ramp={"rate": eps})


class TestHamiltonian:
    def test_symmetrized(self):
        H = dyn.hamiltonian("boson", np.array([[1.0, 0.4], [0.0, 1.0]]))
        assert np.allclose(H.h, H.h.T)
        assert H.stable

    def test_unstable(self):
        H = dyn.hamiltonian("boson", np.diag([-1.0, 1.0]))
        assert not H.stable
        with pytest.raises(errors.UnstableHamiltonian):
            dyn.ground_state(H)

    def test_generator(self):
        h, f = random_hamiltonian(np.random.default_rng(0), "boson", 3)
        assert dyn.hamiltonian("boson", h, f).check_generator()

    def test_sampler_failure_reports_time(self):
        def bad(t):
            if t > 0.3:
                raise RuntimeError("boom")
            return np.eye(2), None

        Hd = dyn.DrivenHamiltonian("boson", 1, bad)
        with pytest.raises(errors.SamplerFailure) as info:
            dyn.evolve_driven(st.vacuum("boson", 1), Hd, 0.0, 1.0, 0.1)
        assert info.value.t > 0.3


class TestEnergy:
    @pytest.mark.parametrize("w", [0.5, 1.0, 2.3])
    def test_oscillator(self, w):
        H = oscillator(w)
        assert dyn.energy(st.vacuum("boson", 1), H) == pytest.approx((w**2 + 1) / 4)
        assert dyn.vacuum_energy(H) == pytest.approx(w / 2)
        assert dyn.energy(dyn.ground_state(H), H) == pytest.approx(w / 2, abs=1e-12)

    def test_displaced(self):
        w = 1.4
        H = oscillator(w)
        z = np.array([0.3, -0.2])
        gs = dyn.ground_state(H)
        s = st.pure_state("boson", gs.J, z)
        assert dyn.energy(s, H) == pytest.approx(w / 2 + 0.5 * z @ H.h @ z, abs=1e-12)

    def test_linear_shift(self):
        h = np.diag([2.0, 1.0])
        f = np.array([0.3, -0.4])
        E0 = dyn.vacuum_energy(dyn.hamiltonian("boson", h, f))
        assert E0 == pytest.approx(np.sqrt(2) / 2 - 0.5 * f @ np.linalg.solve(h, f), abs=1e-12)

    def test_frozen_boson(self):
        H = dyn.hamiltonian("boson", H_BOSON, F_BOSON)
        assert dyn.vacuum_energy(H) == pytest.approx(1.2725314013095292, abs=1e-9)

    def test_frozen_kitaev(self):
        H = gio.kitaev_chain(4, 0.7, 1.0, 0.6).at(0.0)
        assert dyn.vacuum_energy(H) == pytest.approx(-2.6855132985204264, abs=1e-12)

    def test_fermion_standard_block(self):
        eps = 1.3
        H = dyn.hamiltonian("fermion", -eps * A1)
        rep = fo.build("fermion", 1)
        E, _ = fo.ground_state(fo.hamiltonian_operator(rep, H.h))
        assert dyn.vacuum_energy(H) == pytest.approx(E, abs=1e-14)
        assert dyn.vacuum_energy(H) == pytest.approx(-eps / 2, abs=1e-14)

    @given(seeds, hst.integers(1, 4))
    @settings(max_examples=15)
    def test_fermion_oracle(self, seed, N):
        rng = np.random.default_rng(seed)
        H = dyn.hamiltonian("fermion", random_hamiltonian(rng, "fermion", N)[0])
        rep = fo.build("fermion", N)
        Hop = fo.hamiltonian_operator(rep, H.h)
        E, v = fo.ground_state(Hop)
        assert dyn.vacuum_energy(H) == pytest.approx(E, abs=1e-10)
        gs = dyn.ground_state(H)
        assert np.abs(fo.covariance_from(rep, v) - st.two_point(gs).C2).max() < 1e-10
        s = random_pure_state(rng, "fermion", N)
        exact = fo.expectation(Hop, fo.state_vector(rep, s)).real
        assert dyn.energy(s, H) == pytest.approx(exact, abs=1e-10)

    def test_boson_oracle(self):
        H = dyn.hamiltonian("boson", H_BOSON, F_BOSON)
        rep = fo.build("boson", 2, 30)
        Hop = fo.hamiltonian_operator(rep, H.h, H.f)
        s = random_pure_state(np.random.default_rng(3), "boson", 2, max_rho=0.3, displacement=0.2)
        exact = fo.expectation(Hop, fo.state_vector(rep, s)).real
        assert dyn.energy(s, H) == pytest.approx(exact, abs=1e-8)


class TestGroundState:
    def test_standard_form(self):
        H = dyn.hamiltonian("boson", np.eye(4))
        assert np.abs(dyn.ground_state(H).J - std_symplectic(2)).max() < 1e-14

    def test_oscillator(self):
        H = oscillator(1.7)
        gs = dyn.ground_state(H)
        assert gs.triple.complex_structure_residual() < 1e-12
        assert np.abs(H.K @ gs.J - gs.J @ H.K).max() < 1e-12
        rep = fo.build("boson", 1, 40)
        _, v = fo.ground_state(fo.hamiltonian_operator(rep, H.h))
        assert np.abs(fo.covariance_from(rep, v) - st.two_point(gs).C2).max() < 1e-8

    def test_single_particle_energies(self):
        H = gio.harmonic_chain(3, 1.0, 0.5).at(0.0)
        eps = dyn.single_particle_energies(H)
        lap = np.linalg.eigvalsh(gio.chain_laplacian(3))
        assert np.allclose(np.sort(eps), np.sqrt(1 + 0.5 * lap))
        assert np.all(np.diff(eps) <= 0)


class TestEvolveConst:
    def test_zero_time(self):
        s = random_pure_state(np.random.default_rng(1), "boson", 2)
        H = dyn.hamiltonian("boson", H_BOSON, F_BOSON)
        out = dyn.evolve_const(s, H, 0.0)
        assert np.abs(out.J - s.J).max() < 1e-15
        assert np.abs(out.z - s.z).max() < 1e-15

    def test_stationary_ground_state(self):
        H = dyn.hamiltonian("boson", H_BOSON, F_BOSON)
        gs = dyn.ground_state(H)
        for t in (0.5, 3.0, 10.0):
            out = dyn.evolve_const(gs, H, t)
            assert np.abs(out.J - gs.J).max() < 1e-10
            assert np.abs(out.z - gs.z).max() < 1e-10

    @pytest.mark.parametrize("stats", ["boson", "fermion"])
    def test_energy_conserved(self, stats):
        rng = np.random.default_rng(7)
        h, f = random_hamiltonian(rng, stats, 3)
        H = dyn.hamiltonian(stats, h, f if stats == "boson" else None)
        s = random_pure_state(rng, stats, 3, max_rho=0.5)
        E = dyn.energy(s, H)
        for t in np.linspace(0, 10, 21):
            assert abs(dyn.energy(dyn.evolve_const(s, H, t), H) - E) < 1e-10 * max(1, abs(E))

    def test_oracle(self):
        rng = np.random.default_rng(2)
        h, f = random_hamiltonian(rng, "fermion", 3)
        H = dyn.hamiltonian("fermion", h)
        s = random_pure_state(rng, "fermion", 3)
        rep = fo.build("fermion", 3)
        v = fo.evolve(rep, fo.hamiltonian_operator(rep, H.h), 0.8, fo.state_vector(rep, s))
        out = dyn.evolve_const(s, H, 0.8)
        assert np.abs(fo.covariance_from(rep, v) - st.two_point(out).C2).max() < 1e-10


class TestEvolveDriven:
    def test_constant_matches_exact(self):
        rng = np.random.default_rng(5)
        h, f = random_hamiltonian(rng, "boson", 2)
        H = dyn.hamiltonian("boson", h, f)
        s = random_pure_state(rng, "boson", 2, max_rho=0.5)
        res = dyn.evolve_driven(s, dyn.constant_driven(H), 0.0, 2.0, 0.1)
        exact = dyn.evolve_const(s, H, 2.0)
        assert np.abs(res.states[-1].J - exact.J).max() < 1e-10
        assert np.abs(res.states[-1].z - exact.z).max() < 1e-10

    def test_grid_ends_at_t1(self):
        res = dyn.evolve_driven(st.vacuum("boson", 1), ramp(0.1), 0.0, 1.05, 0.1)
        assert res.times[-1] == 1.05
        assert np.allclose(np.diff(res.times), res.times[1] - res.times[0])

    def test_residuals(self):
        res = dyn.evolve_driven(st.vacuum("boson", 2), ramp(0.2, 2, 0.4), 0.0, 5.0, 0.05)
        assert res.complex_structure_residuals.max() < 1e-9
        assert res.group_residuals.max() < 1e-9

    def test_fermion_parity(self):
        rng = np.random.default_rng(9)
        A0, A1_ = (random_hamiltonian(rng, "fermion", 2)[0] for _ in range(2))
        Hd = dyn.DrivenHamiltonian("fermion", 2, lambda t: (A0 + np.cos(t) * A1_, None))
        even = st.vacuum("fermion", 2)
        odd = random_pure_state(rng, "fermion", 2, odd=True)
        res = dyn.evolve_driven(even, Hd, 0.0, 2.0, 0.1)
        for s in res.states:
            assert st.overlap_abs2(s, odd) == 0.0

    def test_midpoint_order(self):
        Hd = ramp(0.3)
        s = random_pure_state(np.random.default_rng(4), "boson", 1, max_rho=0.4)
        ref = dyn.evolve_driven(s, Hd, 0.0, 2.0, 0.002).states[-1].J
        errs = [np.abs(dyn.evolve_driven(s, Hd, 0.0, 2.0, dt).states[-1].J - ref).max() for dt in (0.1, 0.05)]
        assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.3)

    def test_fermion_oracle(self):
        rng = np.random.default_rng(13)
        A0, A1_ = (random_hamiltonian(rng, "fermion", 3)[0] for _ in range(2))
        sampler = lambda t: (A0 + np.sin(t) * A1_, None)
        Hd = dyn.DrivenHamiltonian("fermion", 3, sampler)
        s = random_pure_state(rng, "fermion", 3)
        res = dyn.evolve_driven(s, Hd, 0.0, 1.0, 0.05)
        rep = fo.build("fermion", 3)
        v = fo.state_vector(rep, s)
        for ta, tb in zip(res.times[:-1], res.times[1:]):
            v = fo.evolve(rep, fo.hamiltonian_operator(rep, sampler(0.5 * (ta + tb))[0]), tb - ta, v)
        assert np.abs(fo.covariance_from(rep, v) - st.two_point(res.states[-1]).C2).max() < 1e-9

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            dyn.time_grid(1.0, 0.0, 0.1)
        with pytest.raises(ValueError):
            dyn.time_grid(0.0, 1.0, 0.0)


class TestAdiabatic:
    def test_static_series_vanishes(self):
        for stats, H in (
            ("boson", dyn.hamiltonian("boson", H_BOSON, F_BOSON)),
            ("fermion", gio.kitaev_chain(3, 0.4, 1.0, 0.5).at(0.0)),
        ):
            av = dyn.adiabatic_vacuum(dyn.constant_driven(H), 0.0, 4)
            assert all(np.abs(A).max() < 1e-12 for A in av.A)
            assert all(np.abs(zz).max() < 1e-12 for zz in av.zeta)
            assert np.abs(av.state.J - dyn.ground_state(H).J).max() < 1e-10

    def test_order_zero_is_instantaneous(self):
        Hd = ramp(0.2, 2, 0.3)
        av = dyn.adiabatic_vacuum(Hd, 1.5, 0)
        assert np.abs(av.state.J - dyn.instantaneous_vacuum(Hd, 1.5).J).max() < 1e-12
        assert av.A == []

    def test_instantaneous_oracle(self):
        Hd = ramp(0.5)
        rep = fo.build("boson", 1, 40)
        for t in (0.0, 0.7):
            gs = dyn.instantaneous_vacuum(Hd, t)
            _, v = fo.ground_state(fo.hamiltonian_operator(rep, Hd.at(t).h))
            assert np.abs(fo.covariance_from(rep, v) - st.two_point(gs).C2).max() < 1e-8

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_defining_equations(self, m):
        av = dyn.adiabatic_vacuum(ramp(0.05, 2, 0.3), 1.0, m)
        assert av.commutator_residuals.max() < 1e-9
        assert av.anticommutator_residuals.max() < 1e-9

    def test_first_order_analytic(self):
        # A_1 solves [K, A_1] = dJ0/dt; compare with a finite difference of J0
        Hd = ramp(0.1)
        t, h = 0.4, 1e-4
        dJ = (dyn.instantaneous_vacuum(Hd, t + h).J - dyn.instantaneous_vacuum(Hd, t - h).J) / (2 * h)
        av = dyn.adiabatic_vacuum(Hd, t, 1)
        K = Hd.at(t).K
        assert np.abs(K @ av.A[0] - av.A[0] @ K - dJ).max() < 1e-7

    def test_finite_difference_derivatives(self):
        # no analytic derivative: the sampler alone drives the Taylor jets
        base = ramp(0.05)
        Hd = dyn.DrivenHamiltonian("boson", 1, base.sampler)
        a = dyn.adiabatic_vacuum(Hd, 0.5, 2)
        b = dyn.adiabatic_vacuum(base, 0.5, 2)
        assert np.abs(a.J_raw - b.J_raw).max() < 1e-8

    def test_order_improvement(self):
        excitation = {}
        for eps in (0.1, 0.025):
            Hd = ramp(eps)
            T = 1 / eps
            for m in (0, 1):
                res = dyn.evolve_driven(dyn.adiabatic_vacuum(Hd, 0.0, m).state, Hd, 0.0, T, 0.02)
                excitation[eps, m] = st.number_expectation(res.states[-1], dyn.adiabatic_vacuum(Hd, T, m).state)
        for eps in (0.1, 0.025):
            assert excitation[eps, 1] < excitation[eps, 0]
        gain0 = excitation[0.1, 0] / excitation[0.025, 0]
        gain1 = excitation[0.1, 1] / excitation[0.025, 1]
        assert gain1 > gain0

    def test_fast_drive_warns(self):
        with pytest.warns(errors.AsymptoticSeriesWarning):
            dyn.adiabatic_vacuum(ramp(1.0), 0.0, 3)

    def test_too_fast_raises(self):
        with pytest.warns(errors.AsymptoticSeriesWarning), pytest.raises(errors.NotAComplexStructure):
            dyn.adiabatic_vacuum(ramp(5.0), 0.0, 3)

    def test_degenerate(self):
        h = np.zeros((4, 4))
        h[0, 2], h[2, 0] = 1.0, -1.0  # second mode has zero energy
        with pytest.raises((errors.DegenerateSpectrum, errors.UnstableHamiltonian)):
            dyn.adiabatic_vacuum(dyn.constant_driven(dyn.hamiltonian("fermion", h)), 0.0, 1)


class TestVacuumSubtraction:
    def test_self(self):
        Hd = ramp(0.1, 2, 0.2)
        av = dyn.adiabatic_vacuum(Hd, 0.5, 0)
        assert dyn.vacuum_subtraction(av.state, Hd, 0.5, 0) == pytest.approx(0.0, abs=1e-12)

    def test_constant(self):
        H = dyn.hamiltonian("boson", H_BOSON, F_BOSON)
        s = random_pure_state(np.random.default_rng(0), "boson", 2)
        val = dyn.vacuum_subtraction(s, dyn.constant_driven(H), 0.0, 2)
        assert val == pytest.approx(dyn.energy(s, H) - dyn.vacuum_energy(H), abs=1e-10)
        Jd = s.J - dyn.ground_state(H).J
        assert dyn.vacuum_subtraction(st.pure_state("boson", s.J, dyn.ground_state(H).z), dyn.constant_driven(H), 0.0, 0) == pytest.approx(
            -0.25 * np.trace(H.K @ Jd), abs=1e-10
        )

    def test_two_routes(self):
        Hd = ramp(0.05, 2, 0.3)
        s = random_pure_state(np.random.default_rng(6), "boson", 2, max_rho=0.3)
        av = dyn.adiabatic_vacuum(Hd, 1.0, 1)
        H = Hd.at(1.0)
        direct = dyn.energy(s, H) - dyn.energy_of(av.J_raw, av.z, H)
        assert dyn.vacuum_subtraction(s, Hd, 1.0, 1) == pytest.approx(direct, abs=1e-10)


class TestRelativeEntropyAdiabatic:
    def test_self(self):
        Hd = ramp(0.1, 2, 0.3)
        av = dyn.adiabatic_vacuum(Hd, 0.0, 0)
        assert float(dyn.relative_entropy_adiabatic(av.state, Hd, 0.0, 0, [0])) == pytest.approx(0.0, abs=1e-10)

    def test_ground_state(self):
        H = gio.harmonic_chain(3, 1.0, 0.5).at(0.0)
        gs = dyn.ground_state(H)
        assert float(dyn.relative_entropy_adiabatic(gs, dyn.constant_driven(H), 0.0, 0, [1])) == pytest.approx(0.0, abs=1e-10)

    def test_quench_oracle(self):
        pre = gio.harmonic_chain(2, 1.0, 0.3).at(0.0)
        Hd = gio.harmonic_chain(2, 0.8, 0.3)
        s = dyn.evolve_const(dyn.ground_state(pre), Hd.at(0.0), 0.7)
        val = float(dyn.relative_entropy_adiabatic(s, Hd, 0.7, 0, [0]))
        assert val >= 0
        rep = fo.build("boson", 2, 30)
        rho = fo.partial_trace(rep, fo.state_vector(rep, s), [0])
        sigma = fo.partial_trace(rep, fo.state_vector(rep, dyn.adiabatic_vacuum(Hd, 0.7, 0).state), [0])
        assert val == pytest.approx(fo.relative_entropy(rho, sigma), abs=1e-7)
