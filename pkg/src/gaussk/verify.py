"""Oracle certification suite: phase-space formulas against the Fock-space
backend on small random instances.

The report is a deterministic function of (modes, cutoff, seed); it holds no
timings so that repeated runs produce identical text.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dynamics as dyn
from . import entanglement as ent
from . import fock_oracle as fo
from . import io as gio
from . import states as st
from .kahler import (
    BOSON,
    FERMION,
    cartan_decompose,
    residual,
    std_symplectic,
    validate_identities,
)
from .policy import get_policy
from .sampling import (
    random_compatible_triple,
    random_group_element,
    random_hamiltonian,
    random_mixed_state,
    random_pure_state,
)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<34s} max_err={self.value:.6e}  tol={self.tol:.1e}"


@dataclass(frozen=True)
class VerifyReport:
    modes: int
    cutoff: int
    seed: int
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def text(self) -> str:
        head = f"gaussk verify modes={self.modes} cutoff={self.cutoff} seed={self.seed}"
        tail = f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed"
        return "\n".join([head] + [c.line() for c in self.checks] + [tail]) + "\n"


def _max(values) -> float:
    return float(max(values, default=0.0))


def _identities(rng, N):
    return _max(
        validate_identities(random_compatible_triple(rng, s, N)).max_residual for s in (BOSON, FERMION) for _ in range(10)
    )


def _cartan(rng, N):
    worst = 0.0
    for stats in (BOSON, FERMION):
        J = std_symplectic(N)
        for _ in range(10):
            M = random_group_element(rng, stats, N)
            cd = cartan_decompose(M, J, stats)
            Delta = -M @ J @ np.linalg.inv(M) @ J
            worst = max(
                worst,
                residual(cd.T @ cd.T, Delta),
                residual(cd.T @ J @ cd.T, J),
                residual(cd.u @ J, J @ cd.u),
                residual(cd.T @ cd.u, M),
            )
    return worst


def _wick_fermion(rng, N):
    rep = fo.build(FERMION, N)
    nmax = 6 if N <= 4 else 4
    worst = 0.0
    for _ in range(3):
        s = random_pure_state(rng, FERMION, N)
        v = fo.state_vector(rep, s)
        for n in range(2, nmax + 1, 2):
            worst = max(worst, float(np.abs(st.wick_table(s, n) - fo.npoint_table(rep, v, n)).max()))
    return worst


def _wick_boson(rng, Nb, cutoff):
    rep = fo.build(BOSON, Nb, cutoff)
    worst = 0.0
    for _ in range(3):
        s = random_pure_state(rng, BOSON, Nb, max_rho=0.5, displacement=0.2)
        v = fo.state_vector(rep, s)
        for n in range(1, 5):
            worst = max(worst, float(np.abs(st.wick_table(s, n) - fo.npoint_table(rep, v, n, s.z)).max()))
    return worst


def _overlaps(rng, N, Nb, cutoff):
    worst = 0.0
    rep = fo.build(FERMION, N)
    for k in range(6):
        a = random_pure_state(rng, FERMION, N)
        b = random_pure_state(rng, FERMION, N, odd=bool(k % 2))
        worst = max(worst, abs(st.overlap_abs2(a, b) - fo.overlap(fo.state_vector(rep, a), fo.state_vector(rep, b))))
    rep = fo.build(BOSON, Nb, cutoff)
    for _ in range(4):
        a = random_pure_state(rng, BOSON, Nb, max_rho=0.5, displacement=0.2)
        b = random_pure_state(rng, BOSON, Nb, max_rho=0.5, displacement=0.2)
        worst = max(worst, abs(st.overlap_abs2(a, b) - fo.overlap(fo.state_vector(rep, a), fo.state_vector(rep, b))))
    return worst


def _entropies(rng, N, Nb, cutoff):
    worst = 0.0
    rep = fo.build(FERMION, N)
    for _ in range(4):
        s = random_pure_state(rng, FERMION, N)
        keep = sorted(rng.choice(N, size=max(1, N // 2), replace=False).tolist())
        rho = fo.partial_trace(rep, fo.state_vector(rep, s), keep)
        worst = max(worst, abs(ent.entanglement_entropy(s, keep) - fo.entropy(rho)))
    rep = fo.build(BOSON, Nb, cutoff)
    for _ in range(2):
        s = random_pure_state(rng, BOSON, Nb, max_rho=0.5, displacement=0.2)
        rho = fo.partial_trace(rep, fo.state_vector(rep, s), [0])
        worst = max(worst, abs(ent.entanglement_entropy(s, [0]) - fo.entropy(rho)))
    return worst


def _mixed(rng, N):
    rep = fo.build(FERMION, N)
    worst = 0.0
    for _ in range(3):
        m = random_mixed_state(rng, FERMION, N)
        rho = fo.density_matrix(rep, m)
        C = np.array([[np.trace(rho @ rep.xi_ops[a] @ rep.xi_ops[b]) for b in range(2 * N)] for a in range(2 * N)])
        worst = max(worst, float(np.abs(C - st.two_point(m).C2).max()), abs(ent.entropy_vn(m) - fo.entropy(rho)))
        spec = np.sort(np.linalg.eigvalsh(rho))
        worst = max(worst, float(np.abs(spec - np.sort(st.gaussian_spectrum(m).weights())).max()))
    return worst


def _relative(rng, N):
    rep = fo.build(FERMION, N)
    worst = 0.0
    for _ in range(3):
        a, b = random_mixed_state(rng, FERMION, N), random_mixed_state(rng, FERMION, N)
        exact = fo.relative_entropy(fo.density_matrix(rep, a), fo.density_matrix(rep, b))
        worst = max(worst, abs(float(ent.relative_entropy(a, b)) - exact) / max(1.0, abs(exact)))
    return worst


def _number(rng, N, Nb, cutoff):
    worst = 0.0
    for stats, n, rep in ((FERMION, N, fo.build(FERMION, N)), (BOSON, Nb, fo.build(BOSON, Nb, cutoff))):
        ref = st.vacuum(stats, n)
        Nop = sum(a.conj().T @ a for a in rep.annihilators)
        for _ in range(3):
            s = random_pure_state(rng, stats, n, max_rho=0.5, displacement=0.2)
            exact = fo.expectation(Nop, fo.state_vector(rep, s)).real
            worst = max(worst, abs(st.number_expectation(s, ref) - exact))
    return worst


def _evolution_fermion(rng, N):
    rep = fo.build(FERMION, N)
    A0 = random_hamiltonian(rng, FERMION, N)[0]
    A1 = random_hamiltonian(rng, FERMION, N)[0]

    def sampler(t):
        return A0 + np.sin(t) * A1, None

    Hd = dyn.DrivenHamiltonian(FERMION, N, sampler)
    s = random_pure_state(rng, FERMION, N)
    res = dyn.evolve_driven(s, Hd, 0.0, 1.0, 0.05)
    v = fo.state_vector(rep, s)
    for ta, tb in zip(res.times[:-1], res.times[1:]):
        v = fo.evolve(rep, fo.hamiltonian_operator(rep, sampler(0.5 * (ta + tb))[0]), tb - ta, v)
    return float(np.abs(fo.covariance_from(rep, v) - st.two_point(res.states[-1]).C2).max())


def _evolution_boson(rng, Nb, cutoff):
    rep = fo.build(BOSON, Nb, cutoff)
    # a mild perturbation of the standard oscillator keeps the squeezing small
    h, f = random_hamiltonian(rng, BOSON, Nb, gap=0.0)
    H = dyn.hamiltonian(BOSON, np.eye(2 * Nb) + 0.1 * h, 0.2 * f)
    s = random_pure_state(rng, BOSON, Nb, max_rho=0.3, displacement=0.1)
    v = fo.evolve(rep, fo.hamiltonian_operator(rep, H.h, H.f), 0.5, fo.state_vector(rep, s))
    s2 = dyn.evolve_const(s, H, 0.5)
    return abs(1.0 - fo.overlap(v, fo.state_vector(rep, s2)))


def _ground(rng, N, Nb, cutoff):
    worst = 0.0
    H = gio.kitaev_chain(N, 0.7, 1.0, 0.6).at(0.0)
    rep = fo.build(FERMION, N)
    E, _ = fo.ground_state(fo.hamiltonian_operator(rep, H.h))
    worst = max(worst, abs(E - dyn.vacuum_energy(H)))
    h, _ = random_hamiltonian(rng, FERMION, N)
    H = dyn.hamiltonian(FERMION, h)
    E, _ = fo.ground_state(fo.hamiltonian_operator(rep, H.h))
    worst = max(worst, abs(E - dyn.vacuum_energy(H)), abs(E - dyn.energy(dyn.ground_state(H), H)))
    H = gio.harmonic_chain(Nb, 1.0, 0.5).at(0.0)
    rep = fo.build(BOSON, Nb, cutoff)
    E, _ = fo.ground_state(fo.hamiltonian_operator(rep, H.h))
    worst = max(worst, abs(E - dyn.vacuum_energy(H)))
    return worst


def run_verify(modes: int = 3, cutoff: int | None = None, seed: int = 0) -> VerifyReport:
    """Run every oracle-equivalence check; fermions use ``modes`` modes,
    bosons min(modes, 2) modes at the given cutoff."""
    if modes < 1:
        raise ValueError("modes must be >= 1")
    cutoff = get_policy().boson_cutoff if cutoff is None else int(cutoff)
    N = min(int(modes), 6)
    Nb = min(int(modes), 2)
    rng = np.random.default_rng(seed)
    table: list[tuple[str, Callable[[], float], float]] = [
        ("kahler_identities", lambda: _identities(rng, N), 1e-10),
        ("cartan_decomposition", lambda: _cartan(rng, N), 1e-9),
        ("wick_fermion", lambda: _wick_fermion(rng, N), 1e-10),
        ("wick_boson", lambda: _wick_boson(rng, Nb, cutoff), 1e-6),
        ("overlap", lambda: _overlaps(rng, N, Nb, cutoff), 1e-8),
        ("entanglement_entropy", lambda: _entropies(rng, N, Nb, cutoff), 1e-7),
        ("mixed_state_fermion", lambda: _mixed(rng, N), 1e-10),
        ("relative_entropy_fermion", lambda: _relative(rng, N), 1e-9),
        ("number_expectation", lambda: _number(rng, N, Nb, cutoff), 1e-7),
        ("evolution_fermion", lambda: _evolution_fermion(rng, N), 1e-9),
        ("evolution_boson", lambda: _evolution_boson(rng, Nb, cutoff), 1e-6),
        ("ground_energy", lambda: _ground(rng, N, Nb, cutoff), 1e-6),
    ]
    checks = tuple(Check(name, float(fn()), tol) for name, fn, tol in table)
    return VerifyReport(int(modes), cutoff, int(seed), checks)
