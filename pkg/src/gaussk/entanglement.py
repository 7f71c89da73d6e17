"""Subsystem restriction and information-theoretic functionals.

All entropies are evaluated from the eigenvalues +/- i lambda of the
(restricted) complex structure; 0 log 0 is taken as 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    InvalidSubsystem,
    NoCartanDecomposition,
    SpectrumOutOfRange,
    WrongStatistics,
)
from .kahler import (
    BOSON,
    FERMION,
    Statistics,
    complete_triple,
    eigen_frame,
    n_modes_of,
    relative_structure,
)
from .policy import get_policy
from .states import (
    MixedGaussianState,
    PureGaussianState,
    _check_lambdas,
    _ij_moduli,
    as_mixed,
    q_from_mixed,
)
from .errors import PureDirection


@dataclass(frozen=True)
class SubsystemSpec:
    mode_indices: tuple

    @classmethod
    def parse(cls, spec: Union[str, Iterable[int], "SubsystemSpec"]) -> "SubsystemSpec":
        if isinstance(spec, SubsystemSpec):
            return spec
        if isinstance(spec, str):
            try:
                idx = [int(s) for s in spec.split(",") if s.strip()]
            except ValueError:
                raise InvalidSubsystem(f"cannot parse subsystem {spec!r}") from None
        else:
            idx = [int(i) for i in spec]
        if not idx:
            raise InvalidSubsystem("subsystem is empty")
        if len(set(idx)) != len(idx):
            raise InvalidSubsystem("subsystem lists a mode twice")
        return cls(tuple(sorted(idx)))

    def phase_space_indices(self, N: int) -> np.ndarray:
        if min(self.mode_indices) < 0 or max(self.mode_indices) >= N:
            raise InvalidSubsystem(f"subsystem modes must lie in 0..{N - 1}")
        m = np.array(self.mode_indices)
        return np.concatenate([m, m + N])

    def complement(self, N: int) -> "SubsystemSpec":
        rest = [k for k in range(N) if k not in self.mode_indices]
        if not rest:
            raise InvalidSubsystem("complement is empty")
        return SubsystemSpec(tuple(rest))


@dataclass(frozen=True)
class RestrictedStructure:
    J_A: np.ndarray
    r_params: np.ndarray
    z_A: np.ndarray


def reduce(state, spec) -> MixedGaussianState:
    """Reduced state on the modes of ``spec``: restrict G, Omega and z."""
    spec = SubsystemSpec.parse(spec)
    idx = spec.phase_space_indices(state.n_modes)
    sub = np.ix_(idx, idx)
    G_A = state.G[sub]
    Om_A = state.Omega[sub]
    if abs(np.linalg.det(Om_A if state.stats is BOSON else G_A)) < get_policy().structure_tol:
        raise InvalidSubsystem("background structure is degenerate on the subsystem")
    triple = complete_triple(state.stats, G=G_A, Omega=Om_A)
    lam = _check_lambdas(state.stats, _ij_moduli(triple.J, triple.g))
    z_A = np.array(state.z[idx])
    z_A.setflags(write=False)
    lam.setflags(write=False)
    return MixedGaussianState(triple, z_A, lam)


def restrict(state, spec) -> RestrictedStructure:
    red = reduce(state, spec)
    return RestrictedStructure(red.J, r_from_lambdas(red.lambdas, red.stats), red.z)


def _lambdas_of(J_A: np.ndarray) -> np.ndarray:
    N = n_modes_of(J_A)
    w = np.linalg.eigvals(J_A)
    m = np.sort(np.abs(w.imag))
    return m.reshape(N, 2).mean(axis=1)[::-1]


def r_from_lambdas(lam: np.ndarray, stats) -> np.ndarray:
    stats = Statistics.parse(stats)
    lam = _check_lambdas(stats, np.asarray(lam, dtype=float))
    if stats is BOSON:
        r = 0.5 * np.arccosh(lam)
    else:
        r = 0.5 * np.arccos(lam)
    return np.sort(r)[::-1]


def r_parameters(J_A, stats) -> np.ndarray:
    """r_i with lambda_i = cosh(2 r_i) (bosons) or cos(2 r_i) (fermions), descending."""
    return r_from_lambdas(_lambdas_of(np.asarray(J_A)), stats)


# ---------------------------------------------------------------------------
# entropies


def _xlogx(x: np.ndarray) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


def _ylogy(y: np.ndarray) -> np.ndarray:
    """y log|y| with 0 at y = 0."""
    return np.sign(y) * _xlogx(y)


def entropy_from_lambdas(lam, stats) -> float:
    """Closed form per mode: boson ((l+1)/2)log((l+1)/2) - ((l-1)/2)log((l-1)/2);
    fermion binary entropy of (1+l)/2."""
    stats = Statistics.parse(stats)
    lam = np.asarray(lam, dtype=float)
    if stats is BOSON:
        return float(np.sum(_xlogx((lam + 1) / 2) - _xlogx((lam - 1) / 2)))
    return float(np.sum(-_xlogx((1 + lam) / 2) - _xlogx((1 - lam) / 2)))


def entropy_trace_formula(J, stats) -> float:
    """|Tr(iJ argh iJ)/2 + log det((1 + J^2)/4)/4| summed over the eigenvalues of iJ.

    Per eigenvalue x the summand is ((1+x)log|1+x| + (1-x)log|1-x|)/4 - (log 2)/2,
    which stays finite at the pure directions x = +/-1.
    """
    Statistics.parse(stats)
    x = np.linalg.eigvals(1j * np.asarray(J)).real
    s = 0.25 * (_ylogy(1 + x) + _ylogy(1 - x)) - 0.5 * np.log(2.0)
    return float(abs(np.sum(s)))


def entropy_vn(state) -> float:
    """Von Neumann entropy of a (mixed) Gaussian state."""
    st = as_mixed(state)
    return entropy_from_lambdas(st.lambdas, st.stats)


def entanglement_entropy(state, spec) -> float:
    """S_A = |Tr((1 + iJ_A)/2 log|(1 + iJ_A)/2|)|."""
    red = reduce(state, spec)
    x = np.concatenate([red.lambdas, -red.lambdas])
    return float(abs(np.sum(_ylogy((1 + x) / 2))))


def renyi_from_lambdas(lam, stats, alpha: float) -> float:
    stats = Statistics.parse(stats)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha == 1:
        return entropy_from_lambdas(lam, stats)
    lam = np.asarray(lam, dtype=float)
    # log of sum_n p_n^alpha per mode, up to sign: bosons -log(t), fermions log(t)
    if stats is BOSON:
        t = ((lam + 1) / 2) ** alpha - ((lam - 1) / 2) ** alpha
        return float(np.sum(np.log(t)) / (alpha - 1))
    t = ((1 + lam) / 2) ** alpha + ((1 - lam) / 2) ** alpha
    return float(np.sum(np.log(t)) / (1 - alpha))


def renyi(state, spec, alpha: float) -> float:
    """Renyi entropy of order alpha of the reduced state."""
    red = reduce(state, spec)
    return renyi_from_lambdas(red.lambdas, red.stats, alpha)


def renyi2_determinant(J_A, stats) -> float:
    """Order-2 Renyi entropy as a determinant: log|det iJ_A|/2 or -log det((1 - J_A^2)/2)/2."""
    stats = Statistics.parse(stats)
    J_A = np.asarray(J_A)
    if stats is BOSON:
        sign, logdet = np.linalg.slogdet(J_A)
        return float(0.5 * logdet)
    n = J_A.shape[0]
    sign, logdet = np.linalg.slogdet((np.eye(n) - J_A @ J_A) / 2)
    return float(-0.5 * logdet)


def renyi2(state, spec) -> float:
    red = reduce(state, spec)
    return renyi_from_lambdas(red.lambdas, red.stats, 2.0)


def fermion_entropy_bounds(J_A, m: int) -> tuple[float, float]:
    """(S^{m-}, S^{m+}) from the truncated series
    S = N_A log 2 - sum_n Tr(iJ_A)^{2n} / (4n(2n-1)).

    The dropped tail is at most (log 2 - sum_{n<=m} 1/(2n(2n-1))) times
    Tr(iJ_A)^{2(m+1)}/2, since every eigenvalue of iJ_A lies in [-1, 1].
    """
    J_A = np.asarray(J_A, dtype=float)
    NA = n_modes_of(J_A)
    if m < 1:
        raise ValueError("m must be >= 1")
    X2 = -(J_A @ J_A)  # (iJ_A)^2
    P = np.eye(2 * NA)
    s_plus = NA * np.log(2.0)
    head = 0.0
    for n in range(1, m + 1):
        P = P @ X2
        s_plus -= np.trace(P) / (4 * n * (2 * n - 1))
        head += 1.0 / (2 * n * (2 * n - 1))
    weight = 0.5 * np.trace(P @ X2)
    tail = np.log(2.0) - head
    return float(s_plus - weight * tail), float(s_plus)


def fermion_entropy_bounds_state(state, spec, m: int) -> tuple[float, float]:
    if state.stats is not FERMION:
        raise WrongStatistics("entropy series bounds are defined for fermions")
    return fermion_entropy_bounds(reduce(state, spec).J, m)


class RelativeEntropyValue(float):
    """S(rho||sigma) as a float with diagnostics: ``infinite`` marks support
    mismatch, ``commuting`` whether [J_rho, J_sigma] = 0."""

    infinite: bool
    commuting: bool

    def __new__(cls, value: float, infinite: bool = False, commuting: bool = True):
        obj = super().__new__(cls, value)
        obj.infinite = infinite
        obj.commuting = commuting
        return obj


def relative_entropy(rho, sigma) -> RelativeEntropyValue:
    """S(rho||sigma) = -S(rho) + <Q_sigma>_rho for sigma = exp(-Q_sigma)."""
    rho, sigma = as_mixed(rho), as_mixed(sigma)
    if rho.stats is not sigma.stats or rho.n_modes != sigma.n_modes:
        raise InvalidSubsystem("states differ in statistics or size")
    comm = rho.J @ sigma.J - sigma.J @ rho.J
    commuting = bool(np.max(np.abs(comm)) <= 1e-9 * max(1.0, np.max(np.abs(rho.J))))
    try:
        q, c = q_from_mixed(sigma)
    except PureDirection:
        same = np.allclose(rho.J, sigma.J, atol=1e-9) and np.allclose(rho.z, sigma.z, atol=1e-9)
        return RelativeEntropyValue(0.0 if same else float("inf"), not same, commuting)
    if rho.stats is BOSON:
        d = rho.z - sigma.z
        expect = 0.5 * np.trace(q @ rho.G) + d @ q @ d + c
    else:
        expect = 0.5 * np.trace(q @ rho.Omega) + c
    val = float(expect) - entropy_vn(rho)
    return RelativeEntropyValue(max(val, 0.0) if val > -1e-10 else val, False, commuting)


# ---------------------------------------------------------------------------
# complexity and first law


def circuit_complexity(J_target, J_ref, stats, fixed=None) -> float:
    """sqrt(|Tr log^2 Delta| / 8)."""
    stats = Statistics.parse(stats)
    rel = relative_structure(J_ref, J_target, stats, fixed)
    if stats is FERMION and rel.has_odd_minus_one_pairs:
        raise NoCartanDecomposition("states lie in different parity sectors")
    w = rel.eigenvalues
    if stats is BOSON:
        s = float(np.sum(np.log(w) ** 2))
    else:
        s = float(np.sum(np.angle(w) ** 2))
    return float(np.sqrt(abs(s) / 8))


def entropy_variation(state, spec, dJ) -> float:
    """Directional derivative of S_A along dJ.

    With X = iJ_A and g'(x) = log|(1+x)/2|/2 + 1/2,
    dS_A = +/- Tr(g'(X) i dJ_A) (+ bosons, - fermions).
    """
    spec = SubsystemSpec.parse(spec)
    N = state.n_modes
    idx = spec.phase_space_indices(N)
    sub = np.ix_(idx, idx)
    dJ = np.asarray(dJ, dtype=float)
    red = reduce(state, spec)
    t = red.triple
    if state.stats is BOSON:
        dG = -dJ @ state.Omega
        dJ_A = -dG[sub] @ t.omega
    else:
        dOm = dJ @ state.G
        dJ_A = dOm[sub] @ t.g
    frame = eigen_frame(1j * t.J, t.g)
    x = frame.w.real
    with np.errstate(divide="ignore"):
        gp = 0.5 * np.log(np.maximum(np.abs((1 + x) / 2), 1e-300)) + 0.5
    D = frame.apply(gp.astype(complex))
    val = np.trace(D @ (1j * dJ_A)).real
    return float(val if state.stats is BOSON else -val)


def relative_entropy_trace_formula(J_rho, J_sigma, stats, fixed=None) -> float:
    """Undisplaced S(rho||sigma) from the structures alone:
    +/- [Tr iJ_rho (argh iJ_sigma - argh iJ_rho)/2 + log det((1 + J_sigma^2)/(1 + J_rho^2))/4]
    (+ bosons, - fermions).  Both states must be strictly mixed."""
    stats = Statistics.parse(stats)
    J_rho, J_sigma = np.asarray(J_rho, dtype=float), np.asarray(J_sigma, dtype=float)
    from .kahler import background, matrix_function

    N = n_modes_of(J_rho)
    F = background(stats, N) if fixed is None else np.asarray(fixed)

    def metric(J):
        G = -J @ F if stats is BOSON else F
        return np.linalg.inv((G + G.T) / 2)

    argh = lambda x: 0.5 * np.log(np.abs((1 + x) / (1 - x))) + 0j  # noqa: E731
    A_s = matrix_function(1j * J_sigma, argh, metric(J_sigma), real=False)
    A_r = matrix_function(1j * J_rho, argh, metric(J_rho), real=False)
    one = np.eye(2 * N)
    _, ld_s = np.linalg.slogdet(one + J_sigma @ J_sigma)
    _, ld_r = np.linalg.slogdet(one + J_rho @ J_rho)
    val = 0.5 * np.trace(1j * J_rho @ (A_s - A_r)).real + 0.25 * (ld_s - ld_r)
    return float(val if stats is BOSON else -val)
