"""Pure and mixed Gaussian states as Kähler data.

Operator conventions (QP ordering, one mode shown)::

    xi^q = (a + a^+)/sqrt(2),   xi^p = -i (a - a^+)/sqrt(2)

so that the standard complex structure is the Fock vacuum for both
statistics.  A mixed state is rho = exp(-Q) with
Q = q_ab (xi - z)^a (xi - z)^b + c (bosons) or Q = i q_ab xi^a xi^b + c
(fermions).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionMismatch,
    FermionDisplacement,
    IllConditioned,
    NotAComplexStructure,
    NotGroupElement,
    NotPositiveDefinite,
    BranchViolation,
    PureDirection,
    SingularJ,
    SpectrumOutOfRange,
    WrongStatistics,
)
from .kahler import (
    BOSON,
    FERMION,
    KahlerTriple,
    Statistics,
    background,
    complete_triple,
    eigen_frame,
    is_group_element,
    matrix_function,
    n_modes_of,
    relative_structure,
    residual,
    sqrtm_spd,
)
from .policy import get_policy


# ---------------------------------------------------------------------------
# state types


@dataclass(frozen=True)
class PureGaussianState:
    triple: KahlerTriple
    z: np.ndarray

    @property
    def stats(self) -> Statistics:
        return self.triple.stats

    @property
    def n_modes(self) -> int:
        return self.triple.n_modes

    @property
    def J(self) -> np.ndarray:
        return self.triple.J

    @property
    def G(self) -> np.ndarray:
        return self.triple.G

    @property
    def Omega(self) -> np.ndarray:
        return self.triple.Omega

    @property
    def covariance(self) -> np.ndarray:
        return self.triple.covariance

    @property
    def is_pure(self) -> bool:
        return True


@dataclass(frozen=True)
class MixedGaussianState:
    """Gaussian state with J^2 != -1 allowed.  ``lambdas`` are the moduli of
    the eigenvalues of J (one per mode, descending)."""

    triple: KahlerTriple
    z: np.ndarray
    lambdas: np.ndarray

    stats = PureGaussianState.stats
    n_modes = PureGaussianState.n_modes
    J = PureGaussianState.J
    G = PureGaussianState.G
    Omega = PureGaussianState.Omega
    covariance = PureGaussianState.covariance

    @property
    def is_pure(self) -> bool:
        return bool(np.all(np.abs(self.lambdas - 1) <= get_policy().clip_band))

    @property
    def betas(self) -> np.ndarray:
        """beta_i with lambda_i = coth(beta_i) (bosons) or tanh(beta_i) (fermions); inf for pure modes."""
        return _betas_from_lambdas(self.stats, self.lambdas)

    @property
    def q(self) -> np.ndarray:
        return q_from_mixed(self)[0]

    @property
    def c(self) -> float:
        return q_from_mixed(self)[1]


GaussianState = (PureGaussianState, MixedGaussianState)


def _vec(z, N: int) -> np.ndarray:
    if z is None:
        return np.zeros(2 * N)
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape != (2 * N,):
        raise DimensionMismatch(f"displacement has length {z.size}, expected {2 * N}")
    return z


def _freeze(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _check_fermion_z(stats: Statistics, z: np.ndarray) -> None:
    if stats is FERMION and np.any(z != 0):
        raise FermionDisplacement("fermionic Gaussian states carry no displacement")


def pure_state(stats, J, z=None, fixed=None) -> PureGaussianState:
    """Validated pure state from its complex structure J.

    ``fixed`` is the background structure (Omega for bosons, G for fermions),
    standard form by default.
    """
    stats = Statistics.parse(stats)
    J = np.asarray(J, dtype=float)
    N = n_modes_of(J)
    z = _vec(z, N)
    _check_fermion_z(stats, z)
    if residual(J @ J, -np.eye(2 * N)) > get_policy().decomposition_tol:
        raise NotAComplexStructure("J^2 != -1")
    F = background(stats, N) if fixed is None else np.asarray(fixed, dtype=float)
    triple = complete_triple(stats, Omega=F, J=J) if stats is BOSON else complete_triple(stats, G=F, J=J)
    return PureGaussianState(triple, _freeze(z))


def vacuum(stats, N: int) -> PureGaussianState:
    return pure_state(stats, background(BOSON, N))


def _ij_moduli(J: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Moduli lambda_i of the eigenvalue pairs +/- i lambda_i of J, descending."""
    N = n_modes_of(J)
    w = eigen_frame(J, metric).w
    m = np.sort(np.abs(w.imag))
    return m.reshape(N, 2).mean(axis=1)[::-1].copy()


def _check_lambdas(stats: Statistics, lam: np.ndarray) -> np.ndarray:
    pol = get_policy()
    band = max(pol.clip_band, 1e3 * pol.structure_tol)
    if stats is BOSON:
        if np.any(lam < 1 - band):
            raise SpectrumOutOfRange("bosonic J needs eigenvalue moduli >= 1")
        return np.where(lam < 1 + pol.clip_band, 1.0, lam)
    if np.any(lam > 1 + band):
        raise SpectrumOutOfRange("fermionic J needs eigenvalue moduli in [0, 1]")
    lam = np.where(lam > 1 - pol.clip_band, 1.0, lam)
    return np.where(lam < pol.clip_band, 0.0, lam)


def mixed_state(stats, J=None, z=None, *, G=None, Omega=None, fixed=None) -> MixedGaussianState:
    """Mixed state from J (with the standard or given background) or from (G, Omega)."""
    stats = Statistics.parse(stats)
    if J is not None:
        J = np.asarray(J, dtype=float)
        N = n_modes_of(J)
        F = background(stats, N) if fixed is None else np.asarray(fixed, dtype=float)
        if stats is BOSON:
            triple = complete_triple(stats, Omega=F, J=J)
        else:
            triple = complete_triple(stats, G=F, J=J)
    else:
        if G is None or Omega is None:
            raise ValueError("pass J, or both G and Omega")
        triple = complete_triple(stats, G=G, Omega=Omega)
    N = triple.n_modes
    z = _vec(z, N)
    _check_fermion_z(stats, z)
    lam = _check_lambdas(stats, _ij_moduli(triple.J, triple.g))
    return MixedGaussianState(triple, _freeze(z), _freeze(lam))


def as_mixed(state) -> MixedGaussianState:
    if isinstance(state, MixedGaussianState):
        return state
    lam = np.ones(state.n_modes)
    return MixedGaussianState(state.triple, state.z, _freeze(lam))


def _betas_from_lambdas(stats: Statistics, lam: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        if stats is BOSON:
            return 0.5 * np.log((lam + 1) / (lam - 1))
        return np.arctanh(lam)


def _c_from_betas(stats: Statistics, betas: np.ndarray) -> float:
    if stats is BOSON:
        return float(np.sum(-betas - np.log(-np.expm1(-2 * betas))))
    return float(np.sum(betas + np.log1p(np.exp(-2 * betas))))


def mixed_from_q(stats, q, z=None, fixed=None) -> MixedGaussianState:
    """Mixed state exp(-Q) from the quadratic form q.

    J = -cot(Omega q) for bosons and tan(G q) for fermions, with the
    normalization c fixed by Tr rho = 1.
    """
    stats = Statistics.parse(stats)
    q = np.asarray(q, dtype=float)
    N = n_modes_of(q)
    F = background(stats, N) if fixed is None else np.asarray(fixed, dtype=float)
    tol = get_policy().decomposition_tol
    if stats is BOSON:
        if residual(q, q.T) > tol:
            raise NotPositiveDefinite("bosonic q must be symmetric")
        q = (q + q.T) / 2
        if np.linalg.eigvalsh(q).min() <= 0:
            raise NotPositiveDefinite("bosonic q must be positive definite")
        K = F @ q
        metric = q
        J = matrix_function(K, lambda x: -1j / np.tanh(1j * x), metric)
    else:
        if residual(q, -q.T) > tol:
            raise ValueError("fermionic q must be antisymmetric")
        q = (q - q.T) / 2
        K = F @ q
        metric = np.linalg.inv(F)
        J = matrix_function(K, lambda x: -1j * np.tanh(1j * x), metric)
    J = np.real_if_close(J, tol=1e6)
    if np.iscomplexobj(J):
        raise IllConditioned("complex structure from q is not real")
    state = mixed_state(stats, J, z, fixed=F)
    return state


def q_from_mixed(state) -> tuple[np.ndarray, float]:
    """(q, c) with rho = exp(-Q).  Raises PureDirection when a mode is pure."""
    st = as_mixed(state)
    stats = st.stats
    lam = st.lambdas
    if stats is BOSON and np.any(lam <= 1.0):
        raise PureDirection("bosonic state has a pure direction; q diverges")
    if stats is FERMION and np.any(lam >= 1.0):
        raise PureDirection("fermionic state has a pure direction; q diverges")
    t = st.triple
    J = t.J
    argh_iJ = matrix_function(1j * J, _argh_scalar, t.g)
    if stats is BOSON:
        q = -t.omega @ (1j * argh_iJ)
    else:
        q = t.g @ (-1j * argh_iJ)
    q = np.real_if_close(q, tol=1e6)
    q = np.asarray(q.real)
    q = (q + q.T) / 2 if stats is BOSON else (q - q.T) / 2
    return q, _c_from_betas(stats, _betas_from_lambdas(stats, lam))


def _argh_scalar(x):
    return 0.5 * np.log(np.abs((1 + x) / (1 - x))) + 0j


def duality(J) -> np.ndarray:
    """J -> -J^-1: maps bosonic mixed structures to fermionic ones and back."""
    J = np.asarray(J)
    n_modes_of(J)
    if np.linalg.cond(J) > get_policy().cond_max:
        raise SingularJ("J is singular (maximally mixed fermionic direction)")
    return -np.linalg.inv(J)


# ---------------------------------------------------------------------------
# transformations and correlators


def transform(state, M, z_shift=None):
    """Apply a group element: J -> M J M^-1, z -> M z + z_shift."""
    M = np.asarray(M, dtype=float)
    N = state.n_modes
    if M.shape != (2 * N, 2 * N):
        raise DimensionMismatch("group element has the wrong shape")
    if not is_group_element(M, state.stats, state.triple.fixed, tol=get_policy().decomposition_tol):
        raise NotGroupElement("M does not preserve the background structure")
    shift = _vec(z_shift, N)
    _check_fermion_z(state.stats, shift)
    J = M @ state.J @ np.linalg.inv(M)
    z = M @ state.z + shift
    if isinstance(state, MixedGaussianState):
        return mixed_state(state.stats, J, z, fixed=state.triple.fixed)
    return pure_state(state.stats, J, z, fixed=state.triple.fixed)


@dataclass(frozen=True)
class TwoPointFunction:
    C2: np.ndarray


def two_point(state) -> TwoPointFunction:
    """C2 = (G + i Omega)/2."""
    return TwoPointFunction(_freeze(0.5 * (state.G + 1j * state.Omega)))


def covariance(state) -> np.ndarray:
    """Gamma = -J Omega = G (bosons) or J G = Omega (fermions)."""
    return np.array(state.covariance)


def _pairings_sum(C: np.ndarray, idx: Sequence[int], sign: bool) -> complex:
    if not idx:
        return 1.0 + 0j
    first, rest = idx[0], idx[1:]
    total = 0j
    for k, other in enumerate(rest):
        c = C[first, other]
        if c == 0:
            continue
        s = -1.0 if (sign and k % 2) else 1.0
        total += s * c * _pairings_sum(C, rest[:k] + rest[k + 1 :], sign)
    return total


def wick_npoint(state, indices: Sequence[int]) -> complex:
    """Centered n-point function <(xi - z)^a1 ... (xi - z)^an> by Wick's theorem."""
    idx = [int(i) for i in indices]
    dim = 2 * state.n_modes
    if any(i < 0 or i >= dim for i in idx):
        raise IndexError("phase-space index out of range")
    if len(idx) % 2:
        return 0j
    C = two_point(state).C2
    return complex(_pairings_sum(C, tuple(idx), state.stats is FERMION))


def wick_table(state, n: int) -> np.ndarray:
    """All centered n-point functions at once as a tensor of shape (2N,)*n."""
    dim = 2 * state.n_modes
    if n % 2:
        return np.zeros((dim,) * n, dtype=complex)
    C = np.asarray(two_point(state).C2, dtype=complex)
    fermion = state.stats is FERMION
    letters = "abcdefghijklmnopqrstuvwxyz"

    def build(m: int) -> np.ndarray:
        if m == 0:
            return np.ones((), dtype=complex)
        inner = build(m - 2)
        out = np.zeros((dim,) * m, dtype=complex)
        idx = letters[:m]
        for k in range(1, m):
            rest = idx[1:k] + idx[k + 1 :]
            s = -1.0 if (fermion and (k - 1) % 2) else 1.0
            out = out + s * np.einsum(f"{idx[0]}{idx[k]},{rest}->{idx}", C, inner)
        return out

    return build(n)


# ---------------------------------------------------------------------------
# overlaps


class OverlapValue(float):
    """|<psi1|psi2>|^2 as a float; ``parity_orthogonal`` marks the fermionic
    superselection case where the value is exactly zero."""

    parity_orthogonal: bool

    def __new__(cls, value: float, parity_orthogonal: bool = False):
        obj = super().__new__(cls, value)
        obj.parity_orthogonal = parity_orthogonal
        return obj


def _same_kind(s1, s2) -> None:
    if s1.stats is not s2.stats:
        raise DimensionMismatch("states have different statistics")
    if s1.n_modes != s2.n_modes:
        raise DimensionMismatch("states have different mode counts")


def overlap_abs2(state1: PureGaussianState, state2: PureGaussianState) -> OverlapValue:
    """|<J,z|J~,z~>|^2 = |det((1 + Delta)/2)|^(-/+ 1/2) exp(-d (Gamma + Gamma~)^-1 d)."""
    _same_kind(state1, state2)
    stats = state1.stats
    rel = relative_structure(state1.J, state2.J, stats, state1.triple.fixed)
    if stats is FERMION and rel.has_odd_minus_one_pairs:
        return OverlapValue(0.0, True)
    w = rel.eigenvalues
    logdet = float(np.sum(np.log(np.abs((1 + w) / 2))))
    if stats is BOSON:
        d = state1.z - state2.z
        S = state1.covariance + state2.covariance
        expo = -0.5 * logdet - float(d @ np.linalg.solve(S, d))
    else:
        if np.any(np.abs(1 + w) <= 1e-12):
            return OverlapValue(0.0, False)
        expo = 0.5 * logdet
    return OverlapValue(min(1.0, float(np.exp(expo))), False)


# ---------------------------------------------------------------------------
# spectra and characteristic functions


@dataclass(frozen=True)
class GaussianSpectrum:
    stats: Statistics
    betas: np.ndarray

    def mode_weights(self, i: int, n_max: Optional[int] = None) -> np.ndarray:
        """Weights lambda_n of mode i for n = 0..n_max (fermions: n in {0, 1})."""
        b = float(self.betas[i])
        if self.stats is FERMION:
            n = np.arange(2)
            if np.isinf(b):
                return np.array([1.0, 0.0])
            return np.exp(-2 * b * n) / (1 + np.exp(-2 * b))
        n = np.arange((n_max if n_max is not None else 40) + 1)
        if np.isinf(b):
            return (n == 0).astype(float)
        return -np.expm1(-2 * b) * np.exp(-2 * b * n)

    def mode_tail(self, i: int, n_max: int) -> float:
        """Weight carried by occupations above n_max (bosons)."""
        if self.stats is FERMION:
            return 0.0
        b = float(self.betas[i])
        return 0.0 if np.isinf(b) else float(np.exp(-2 * b * (n_max + 1)))

    def weights(self, n_max: Optional[int] = None) -> np.ndarray:
        """Product weights over all occupation multi-indices, in Fock (C) order."""
        w = np.ones(1)
        for i in range(len(self.betas)):
            w = np.multiply.outer(w, self.mode_weights(i, n_max)).reshape(-1)
        return w


def gaussian_spectrum(state) -> GaussianSpectrum:
    st = as_mixed(state)
    return GaussianSpectrum(st.stats, _freeze(st.betas))


def characteristic_function(state, w=None):
    """Bosons: Tr(rho exp(-i w xi)) = exp(-w G w / 4 - i w z).

    Fermions have a Grassmann argument; the quadratic coefficient matrix
    -(i/4) Omega is returned instead.
    """
    if state.stats is FERMION:
        return -0.25j * np.asarray(state.Omega)
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape != (2 * state.n_modes,):
        raise DimensionMismatch("covector has the wrong length")
    return complex(np.exp(-0.25 * w @ state.G @ w - 1j * w @ state.z))


# ---------------------------------------------------------------------------
# mode functions and Bogoliubov coefficients


@dataclass(frozen=True)
class ModeBasis:
    u: np.ndarray  # 2N x N, columns u_i
    v: np.ndarray  # N x 2N, rows v_i with a_i = v_i (xi - z)


def _hermitian_form(state) -> np.ndarray:
    t = state.triple
    return -1j * t.omega if state.stats is BOSON else t.g.astype(complex)


def mode_basis(state: PureGaussianState) -> ModeBasis:
    """Mode functions with xi - z = sum_i (u_i a_i + u_i^* a_i^+).

    The u_i span the -i eigenspace of J (the range of (1 + iJ)/2) and are
    orthonormal under -i omega(u^*, u) (bosons) or g(u^*, u) (fermions).
    """
    N = state.n_modes
    P = 0.5 * (np.eye(2 * N) + 1j * state.J)
    _, _, piv = sla.qr(P, pivoting=True)
    X = P[:, np.sort(piv[:N])]
    H = _hermitian_form(state)
    gram = X.conj().T @ H @ X
    gram = (gram + gram.conj().T) / 2
    L = np.linalg.cholesky(gram)
    u = np.linalg.solve(L.conj(), X.T).T  # u = X L^-H
    v = u.conj().T @ H
    return ModeBasis(_freeze(u), _freeze(v))


@dataclass(frozen=True)
class BogoliubovData:
    """Reference annihilators a~_i = sum_j alpha_ij a_j + beta_ij a_j^+."""

    alpha: np.ndarray
    beta: np.ndarray


def bogoliubov(state_ref: PureGaussianState, state_target: PureGaussianState) -> BogoliubovData:
    _same_kind(state_ref, state_target)
    ref = mode_basis(state_ref)
    tgt = mode_basis(state_target)
    return BogoliubovData(_freeze(ref.v @ tgt.u), _freeze(ref.v @ tgt.u.conj()))


def number_expectation(state_target: PureGaussianState, state_ref: PureGaussianState) -> float:
    """<target| N_ref |target> = -/+ tr(1 - Delta)/4 + (d g_ref d)/2."""
    _same_kind(state_target, state_ref)
    N = state_ref.n_modes
    Delta = -state_target.J @ state_ref.J
    tr = float(np.trace(np.eye(2 * N) - Delta))
    val = -0.25 * tr if state_ref.stats is BOSON else 0.25 * tr
    if state_ref.stats is BOSON:
        d = state_target.z - state_ref.z
        val += 0.5 * float(d @ state_ref.triple.g @ d)
    return max(val, 0.0)


# ---------------------------------------------------------------------------
# normal ordering and BCH kernels


def _phi_scalar(x: np.ndarray, thr: float) -> np.ndarray:
    """x / (e^x - 1) with its removable singularity at 0."""
    small = np.abs(x) < thr
    xs = np.where(small, 1.0, x)
    out = xs / np.expm1(xs)
    series = 1 - x / 2 + x**2 / 12 - x**4 / 720
    return np.where(small, series, out)


def _f_scalar(x: np.ndarray, thr: float) -> np.ndarray:
    """(x - sinh x) / (4 (1 - cosh x)), odd, ~ x/12 - x^3/360 near 0."""
    small = np.abs(x) < thr
    xs = np.where(small, 1.0, x)
    out = 0.25 * (xs - np.sinh(xs)) / (1 - np.cosh(xs))
    series = x / 12 - x**3 / 360
    return np.where(small, series, out)


def _near_2pi_i(w: np.ndarray) -> bool:
    k = np.round(w.imag / (2 * np.pi))
    hit = (k != 0) & (np.abs(w - 2j * np.pi * k) < 1e-6)
    return bool(np.any(hit))


def bch_function(K, name: str) -> np.ndarray:
    """K/(e^K - 1) (name='phi') or F(K) = (K - sinh K)/(4(1 - cosh K)) (name='F')."""
    K = np.asarray(K)
    frame = eigen_frame(K)
    if _near_2pi_i(frame.w):
        raise IllConditioned("K has an eigenvalue near 2 pi i k; the BCH kernel is singular")
    thr = get_policy().series_threshold
    fn = _phi_scalar if name == "phi" else _f_scalar
    out = frame.apply(fn(frame.w.astype(complex), thr))
    if np.isrealobj(K) and np.max(np.abs(out.imag), initial=0.0) < 1e-9 * max(1.0, np.max(np.abs(out))):
        out = out.real
    return out


def bch_linear_quadratic(K, w, stats, fixed=None) -> tuple[np.ndarray, np.ndarray]:
    """log(e^K e^w) = K + eta + w B w for the quadratic operator of K and the
    linear operator of w; returns (eta, B).

    eta = w K/(e^K - 1); B = i F(K) Omega (bosons) or F(K) G (fermions).
    """
    stats = Statistics.parse(stats)
    K = np.asarray(K)
    N = n_modes_of(K)
    w = np.asarray(w).reshape(-1)
    if w.shape != (2 * N,):
        raise DimensionMismatch("covector has the wrong length")
    F = background(stats, N) if fixed is None else np.asarray(fixed)
    eta = w @ bch_function(K, "phi")
    FK = bch_function(K, "F")
    B = 1j * FK @ F if stats is BOSON else FK @ F
    return eta, B


@dataclass(frozen=True)
class NormalOrderFactors:
    L: np.ndarray
    scalar: float


def normal_order_factors(K_plus, state: PureGaussianState) -> NormalOrderFactors:
    """L = tanh K_+ = 1 - 2 (1 + Delta)^-1 and |<J|exp(K_+)|J>| = det(1 - L^2)^(+/- 1/8)."""
    K_plus = np.asarray(K_plus, dtype=float)
    J = state.J
    if residual(K_plus @ J + J @ K_plus, np.zeros_like(J)) > 1e-8 * max(1.0, np.abs(K_plus).max()):
        raise ValueError("K_plus must anticommute with the state's J")
    metric = state.triple.g
    frame = eigen_frame(K_plus, metric)
    w = frame.w
    if state.stats is FERMION and np.any(np.abs(np.cos(w.imag)) <= get_policy().clip_band):
        raise BranchViolation("squeezing angle pi/2: tanh K_+ is singular")
    L = frame.apply(np.tanh(w))
    L = L.real if np.max(np.abs(L.imag), initial=0.0) < 1e-9 else L
    if state.stats is BOSON:
        logscalar = -0.25 * float(np.sum(np.log(np.cosh(w.real))))
    else:
        logscalar = 0.25 * float(np.sum(np.log(np.abs(np.cos(w.imag)))))
    return NormalOrderFactors(_freeze(L), float(np.exp(logscalar)))
