"""Quadratic Hamiltonians, energies, ground states, time evolution and
adiabatic vacua.

Hamiltonians are H = h_ab xi^a xi^b / 2 + f_a xi^a + c0 (bosons) or
H = (i/2) h_ab xi^a xi^b + c0 (fermions), with h symmetrized
(antisymmetrized) on ingest so that the generator is K = Omega h (G h) and
exp(-iHt) acts on phase space as exp(K t).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    AsymptoticSeriesWarning,
    DegenerateSpectrum,
    DimensionMismatch,
    FermionDisplacement,
    NotAComplexStructure,
    NumericPolicyError,
    SamplerFailure,
    UnstableHamiltonian,
)
from .kahler import (
    BOSON,
    FERMION,
    Statistics,
    background,
    eigen_frame,
    is_algebra_element,
    matrix_function,
    n_modes_of,
    residual,
)
from .policy import get_policy
from .states import PureGaussianState, pure_state


# ---------------------------------------------------------------------------
# Hamiltonians


@dataclass(frozen=True)
class QuadraticHamiltonian:
    stats: Statistics
    h: np.ndarray
    f: np.ndarray
    c0: float = 0.0
    fixed: Optional[np.ndarray] = None
    K: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        stats = Statistics.parse(self.stats)
        object.__setattr__(self, "stats", stats)
        h = np.asarray(self.h, dtype=float)
        N = n_modes_of(h)
        h = (h + h.T) / 2 if stats is BOSON else (h - h.T) / 2
        f = np.zeros(2 * N) if self.f is None else np.asarray(self.f, dtype=float).reshape(-1)
        if f.shape != (2 * N,):
            raise DimensionMismatch("linear term has the wrong length")
        if stats is FERMION and np.any(f != 0):
            raise FermionDisplacement("fermionic Hamiltonians have no linear term")
        F = background(stats, N) if self.fixed is None else np.asarray(self.fixed, dtype=float)
        for name, val in (("h", h), ("f", f), ("fixed", F), ("K", F @ h)):
            val = np.array(val)
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "c0", float(self.c0))

    @property
    def n_modes(self) -> int:
        return self.h.shape[0] // 2

    @property
    def stable(self) -> bool:
        if self.stats is BOSON:
            return bool(np.linalg.eigvalsh(self.h).min() > 0)
        return bool(abs(np.linalg.det(self.h)) > get_policy().structure_tol)

    def check_generator(self) -> bool:
        return is_algebra_element(self.K, self.stats, self.fixed)


def hamiltonian(stats, h, f=None, c0: float = 0.0, fixed=None) -> QuadraticHamiltonian:
    return QuadraticHamiltonian(Statistics.parse(stats), h, f, c0, fixed)


@dataclass(frozen=True)
class DrivenHamiltonian:
    """Time-dependent family t -> (h(t), f(t)).

    ``derivative(t, k)`` may return the exact k-th derivatives (h^(k), f^(k));
    otherwise finite differences are used where derivatives are needed.
    """

    stats: Statistics
    n_modes: int
    sampler: Callable[[float], tuple]
    derivative: Optional[Callable[[float, int], tuple]] = None
    fixed: Optional[np.ndarray] = None

    def at(self, t: float) -> QuadraticHamiltonian:
        try:
            h, f = self.sampler(t)
            H = QuadraticHamiltonian(Statistics.parse(self.stats), h, f, 0.0, self.fixed)
        except SamplerFailure:
            raise
        except Exception as exc:  # noqa: BLE001 - any sampler error is reported with its time
            raise SamplerFailure(t, exc) from exc
        if H.n_modes != self.n_modes:
            raise SamplerFailure(t, DimensionMismatch("sampler returned the wrong size"))
        return H


def constant_driven(H: QuadraticHamiltonian) -> DrivenHamiltonian:
    zero = np.zeros_like(H.h)
    zf = np.zeros_like(H.f)
    return DrivenHamiltonian(
        H.stats,
        H.n_modes,
        lambda t: (H.h, H.f),
        lambda t, k: (H.h, H.f) if k == 0 else (zero, zf),
        H.fixed,
    )


# ---------------------------------------------------------------------------
# energies and ground states


def _check_pair(state, H: QuadraticHamiltonian) -> None:
    if state.stats is not H.stats or state.n_modes != H.n_modes:
        raise DimensionMismatch("state and Hamiltonian differ in statistics or size")


def energy_of(J, z, H: QuadraticHamiltonian) -> float:
    """<H> for the structure J and displacement z (J need not square to -1)."""
    J = np.asarray(J)
    tr = float(np.trace(H.K @ J))
    if H.stats is BOSON:
        z = np.asarray(z)
        return H.c0 - 0.25 * tr + 0.5 * float(z @ H.h @ z) + float(H.f @ z)
    return H.c0 + 0.25 * tr


def energy(state, H: QuadraticHamiltonian) -> float:
    """c0 - Tr(KJ)/4 + z h z/2 + f z (bosons); c0 + Tr(KJ)/4 (fermions)."""
    _check_pair(state, H)
    return energy_of(state.J, state.z, H)


def _require_stable(H: QuadraticHamiltonian, t=None) -> None:
    if not H.stable:
        where = "" if t is None else f" at t={t!r}"
        if H.stats is BOSON:
            raise UnstableHamiltonian(f"bosonic h is not positive definite{where}")
        raise UnstableHamiltonian(f"fermionic h is singular{where}")


def _metric(H: QuadraticHamiltonian) -> np.ndarray:
    return H.h if H.stats is BOSON else np.linalg.inv(H.fixed)


def ground_state(H: QuadraticHamiltonian, t=None) -> PureGaussianState:
    """J0 = |K|^-1 K, z0 = -h^-1 f."""
    _require_stable(H, t)
    J0 = matrix_function(H.K, "sign", _metric(H))
    if H.stats is BOSON:
        z0 = -np.linalg.solve(H.h, H.f)
        return pure_state(BOSON, J0, z0, fixed=H.fixed)
    return pure_state(FERMION, J0, fixed=H.fixed)


def single_particle_energies(H: QuadraticHamiltonian) -> np.ndarray:
    """epsilon_i >= 0 with K having eigenvalues +/- i epsilon_i, descending."""
    w = eigen_frame(H.K, _metric(H)).w
    e = np.sort(np.abs(w.imag))
    return e.reshape(-1, 2).mean(axis=1)[::-1].copy()


def vacuum_energy(H: QuadraticHamiltonian) -> float:
    """c0 + Tr|K|/4 - f h^-1 f/2 (bosons); c0 - Tr|K|/4 (fermions)."""
    _require_stable(H)
    half = 0.5 * float(np.sum(single_particle_energies(H)))
    if H.stats is BOSON:
        return H.c0 + half - 0.5 * float(H.f @ np.linalg.solve(H.h, H.f))
    return H.c0 - half


# ---------------------------------------------------------------------------
# evolution


def _affine_step(K: np.ndarray, c: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Flow of dz/dt = K z + c over time t: z -> M z + v (exact, via an augmented exponential)."""
    n = K.shape[0]
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = K
    A[:n, n] = c
    E = sla.expm(A * t)
    return E[:n, :n], E[:n, n]


def _drive(H: QuadraticHamiltonian) -> np.ndarray:
    return H.fixed @ H.f if H.stats is BOSON else np.zeros(2 * H.n_modes)


def evolve_const(state: PureGaussianState, H: QuadraticHamiltonian, t: float) -> PureGaussianState:
    """J(t) = M J M^-1, z(t) = M z + int_0^t exp(K s) Omega f ds with M = exp(K t)."""
    _check_pair(state, H)
    M, v = _affine_step(H.K, _drive(H), t)
    J = M @ state.J @ np.linalg.inv(M)
    if H.stats is BOSON:
        return pure_state(BOSON, J, M @ state.z + v, fixed=H.fixed)
    return pure_state(FERMION, J, fixed=H.fixed)


@dataclass(frozen=True)
class EvolutionResult:
    times: np.ndarray
    states: list
    M_accum: list
    group_residuals: np.ndarray
    complex_structure_residuals: np.ndarray


def time_grid(t0: float, t1: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    n = max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
    return np.linspace(t0, t1, n + 1)


def evolve_driven(state: PureGaussianState, Hd: DrivenHamiltonian, t0: float, t1: float, dt: float) -> EvolutionResult:
    """Midpoint exponential stepping M <- exp(K(t + dt/2) dt) M.

    The displacement uses the exact affine flow of the midpoint Hamiltonian.
    Steps are uniform; dt is shrunk so that the grid ends exactly at t1.
    """
    if state.stats is not Statistics.parse(Hd.stats) or state.n_modes != Hd.n_modes:
        raise DimensionMismatch("state and Hamiltonian differ in statistics or size")
    times = time_grid(t0, t1, dt)
    n = 2 * state.n_modes
    M = np.eye(n)
    z = np.array(state.z, dtype=float)
    J0 = state.J
    fixed = state.triple.fixed
    states = [state]
    Ms = [M.copy()]
    gres = [0.0]
    jres = [residual(J0 @ J0, -np.eye(n))]
    for ta, tb in zip(times[:-1], times[1:]):
        Hm = Hd.at(0.5 * (ta + tb))
        Ms_step, v = _affine_step(Hm.K, _drive(Hm), tb - ta)
        M = Ms_step @ M
        z = Ms_step @ z + v
        J = M @ J0 @ np.linalg.inv(M)
        F = fixed
        gres.append(residual(M @ F @ M.T, F))
        jres.append(residual(J @ J, -np.eye(n)))
        if state.stats is BOSON:
            st = pure_state(BOSON, J, z, fixed=F)
        else:
            st = pure_state(FERMION, J, fixed=F)
        states.append(st)
        Ms.append(M.copy())
    return EvolutionResult(times, states, Ms, np.array(gres), np.array(jres))


# ---------------------------------------------------------------------------
# instantaneous and adiabatic vacua


def instantaneous_vacuum(Hd: DrivenHamiltonian, t: float) -> PureGaussianState:
    return ground_state(Hd.at(t), t)


def _fd_weights(offsets: np.ndarray, k: int) -> np.ndarray:
    """Finite-difference weights for the k-th derivative at 0 on the given offsets."""
    n = len(offsets)
    V = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[k] = math.factorial(k)
    return np.linalg.solve(V, rhs)


def _taylor_coefficients(Hd: DrivenHamiltonian, t: float, m: int) -> tuple[list, list]:
    """[h_k], [f_k] with h(t + s) = sum_k h_k s^k, k = 0..m."""
    H0 = Hd.at(t)
    hs, fs = [np.array(H0.h)], [np.array(H0.f)]
    if m == 0:
        return hs, fs
    if Hd.derivative is not None:
        for k in range(1, m + 1):
            try:
                dh, df = Hd.derivative(t, k)
            except Exception as exc:  # noqa: BLE001
                raise SamplerFailure(t, exc) from exc
            dh = np.asarray(dh, dtype=float)
            dh = (dh + dh.T) / 2 if H0.stats is BOSON else (dh - dh.T) / 2
            df = np.zeros(2 * H0.n_modes) if df is None else np.asarray(df, dtype=float)
            hs.append(dh / math.factorial(k))
            fs.append(df / math.factorial(k))
        return hs, fs
    pol = get_policy()
    if m > pol.fd_max_order:
        raise ValueError(f"finite-difference derivatives are limited to order {pol.fd_max_order}")
    # time scale from a crude first derivative
    probe = 1e-3
    dh_est = (Hd.at(t + probe).h - Hd.at(t - probe).h) / (2 * probe)
    scale = np.linalg.norm(H0.h) / max(np.linalg.norm(dh_est), 1e-12)
    tau = min(1.0, scale)
    for k in range(1, m + 1):
        p = (k + 1) // 2 + 1
        step = tau * np.finfo(float).eps ** (1.0 / (k + 4)) * 4
        offs = np.arange(-p, p + 1, dtype=float)
        w = _fd_weights(offs, k) / step**k
        samples = [Hd.at(t + o * step) for o in offs]
        dh = sum(wi * s.h for wi, s in zip(w, samples))
        df = sum(wi * s.f for wi, s in zip(w, samples))
        hs.append(dh / math.factorial(k))
        fs.append(df / math.factorial(k))
    return hs, fs


class _PairSolver:
    """Solves [K0, X] = P, {J0, X} = Q in the eigenbasis of K0.

    Entries with equal J0-signs come from the anticommutator, opposite signs
    from the commutator (there K0 eigenvalues differ by i(e_i + e_j) != 0).
    """

    def __init__(self, K0: np.ndarray, metric: np.ndarray):
        frame = eigen_frame(K0, metric)
        d = frame.w
        tol = get_policy().decomposition_tol
        eps = np.abs(d.imag)
        if eps.min() <= tol * max(1.0, eps.max()):
            raise DegenerateSpectrum("K(t) has a vanishing single-particle energy")
        self.V, self.Vi, self.d = frame.V, frame.Vinv, d
        s = 1j * np.sign(d.imag)
        self.s = s
        same = np.equal.outer(np.sign(d.imag), np.sign(d.imag))
        self.same = same
        denom = np.subtract.outer(d, d)
        if np.any(np.abs(denom[~same]) <= tol * max(1.0, eps.max())):
            raise DegenerateSpectrum("commutator equation is singular")
        self.denom = np.where(same, 1.0, denom)
        self.J0 = (self.V * s) @ self.Vi

    def solve(self, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
        Pt = self.Vi @ P @ self.V
        Qt = self.Vi @ Q @ self.V
        X = np.where(self.same, Qt / (2 * self.s[:, None]), Pt / self.denom)
        out = self.V @ X @ self.Vi
        return out.real if np.isrealobj(P) and np.isrealobj(Q) else out


def _comm(a, b):
    return a @ b - b @ a


def _acomm(a, b):
    return a @ b + b @ a


@dataclass(frozen=True)
class AdiabaticVacuum:
    """Order-m adiabatic vacuum at time t.

    ``J_raw`` is the truncated series J0 + sum A_n; ``state`` carries its
    nearest complex structure J_raw (-J_raw^2)^(-1/2).
    """

    t: float
    order: int
    state: PureGaussianState
    J_raw: np.ndarray
    z: np.ndarray
    A: list
    zeta: list
    commutator_residuals: np.ndarray
    anticommutator_residuals: np.ndarray
    complex_structure_residual: float


def adiabatic_vacuum(Hd: DrivenHamiltonian, t: float, m: int) -> AdiabaticVacuum:
    """Solve [K, A_n] = dA_{n-1}/dt and {J0, A_n} = -sum_{0<p<n} A_p A_{n-p}
    order by order, propagating Taylor jets in time around t."""
    if m < 0:
        raise ValueError("order must be >= 0")
    stats = Statistics.parse(Hd.stats)
    H0 = Hd.at(t)
    _require_stable(H0, t)
    F = H0.fixed
    hs, fs = _taylor_coefficients(Hd, t, m)
    Ks = [F @ h for h in hs]
    cs = [F @ f for f in fs] if stats is BOSON else [np.zeros(2 * H0.n_modes)] * (m + 1)
    solver = _PairSolver(Ks[0], _metric(H0))
    n = Ks[0].shape[0]
    # jets[n][k]: k-th Taylor coefficient of A_n (A_0 = J0)
    J0 = [np.real_if_close(solver.J0).real]
    for k in range(1, m + 1):
        P = -sum(_comm(Ks[i], J0[k - i]) for i in range(1, k + 1))
        Q = -sum((J0[i] @ J0[k - i] for i in range(1, k)), np.zeros((n, n)))
        J0.append(solver.solve(P, Q))
    jets = [J0]
    cres = [0.0]
    ares = [0.0]
    for order in range(1, m + 1):
        prev = jets[order - 1]
        cur = []
        for k in range(0, m - order + 1):
            P = (k + 1) * prev[k + 1] - sum((_comm(Ks[i], cur[k - i]) for i in range(1, k + 1)), np.zeros((n, n)))
            Q = -sum(
                (sum((jets[p][i] @ jets[order - p][k - i] for i in range(0, k + 1)), np.zeros((n, n))) for p in range(1, order)),
                np.zeros((n, n)),
            )
            Q = Q - sum((_acomm(J0[i], cur[k - i]) for i in range(1, k + 1)), np.zeros((n, n)))
            cur.append(solver.solve(P, Q))
        jets.append(cur)
        A = cur[0]
        scale = max(1.0, float(np.max(np.abs(prev[1]))))
        cres.append(float(np.max(np.abs(_comm(Ks[0], A) - prev[1]))) / scale)
        rhs = -sum((jets[p][0] @ jets[order - p][0] for p in range(1, order)), np.zeros((n, n)))
        ares.append(float(np.max(np.abs(_acomm(J0[0], A) - rhs))) / max(1.0, float(np.max(np.abs(rhs)))))
    J_raw = sum(jets[k][0] for k in range(m + 1))
    # displacement jets: K z_0 = -Omega f, K z_n = dz_{n-1}/dt
    zeta = []
    z = np.zeros(n)
    if stats is BOSON:
        K0inv = np.linalg.inv(Ks[0])
        zj = []
        for k in range(m + 1):
            rhs = -cs[k] - sum((Ks[i] @ zj[k - i] for i in range(1, k + 1)), np.zeros(n))
            zj.append(K0inv @ rhs)
        zjets = [zj]
        for order in range(1, m + 1):
            prev = zjets[order - 1]
            cur = []
            for k in range(0, m - order + 1):
                rhs = (k + 1) * prev[k + 1] - sum((Ks[i] @ cur[k - i] for i in range(1, k + 1)), np.zeros(n))
                cur.append(K0inv @ rhs)
            zjets.append(cur)
        zeta = [zjets[k][0] for k in range(1, m + 1)]
        z = sum(zjets[k][0] for k in range(m + 1))
    one = np.eye(n)
    cs_res = residual(J_raw @ J_raw, -one)
    if cs_res > get_policy().complex_structure_band:
        warnings.warn(
            f"truncated adiabatic series is far from a complex structure (residual {cs_res:.2e}); the drive is too fast",
            AsymptoticSeriesWarning,
            stacklevel=2,
        )
    try:
        J_pure = J_raw @ matrix_function(-(J_raw @ J_raw), "invsqrt", _metric(H0) if stats is FERMION else None)
    except NumericPolicyError as exc:
        raise NotAComplexStructure("truncated adiabatic series has no nearby complex structure") from exc
    state = pure_state(stats, J_pure, z if stats is BOSON else None, fixed=F)
    A_list = [jets[k][0] for k in range(1, m + 1)]
    return AdiabaticVacuum(
        t, m, state, J_raw, z, A_list, zeta, np.array(cres), np.array(ares), cs_res
    )


def vacuum_subtraction(state: PureGaussianState, Hd: DrivenHamiltonian, t: float, m: int) -> float:
    """delta E = <J(t)|H(t)|J(t)> - <J_t^(m)|H(t)|J_t^(m)> with the truncated series J_t^(m)."""
    H = Hd.at(t)
    av = adiabatic_vacuum(Hd, t, m)
    return energy(state, H) - energy_of(av.J_raw, av.z, H)


def relative_entropy_adiabatic(state: PureGaussianState, Hd: DrivenHamiltonian, t: float, m: int, spec):
    """Relative entropy of the reductions of ``state`` and of the order-m adiabatic vacuum."""
    from .entanglement import reduce, relative_entropy

    av = adiabatic_vacuum(Hd, t, m)
    return relative_entropy(reduce(state, spec), reduce(av.state, spec))
