"""Kähler triples (G, Omega, J), group/algebra predicates, spectral matrix
functions and the Cartan machinery.

All matrices are stored in QP ordering (q_1..q_N, p_1..p_N).  The bosonic
background structure is Omega, the fermionic one is G.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg as sla

from .errors import (
    BranchViolation,
    DegenerateForm,
    DimensionMismatch,
    IllConditioned,
    IncompatiblePair,
    NoCartanDecomposition,
    NonUniqueWarning,
    NotPositiveDefinite,
    SingularStructure,
    SpectrumClassificationFailure,
)
from .policy import get_policy


class Statistics(str, enum.Enum):
    BOSON = "boson"
    FERMION = "fermion"

    @classmethod
    def parse(cls, value: Union[str, "Statistics"]) -> "Statistics":
        if isinstance(value, Statistics):
            return value
        v = str(value).strip().lower()
        if v in ("boson", "bosons", "b"):
            return cls.BOSON
        if v in ("fermion", "fermions", "f"):
            return cls.FERMION
        raise ValueError(f"unknown statistics {value!r}")


class Convention(str, enum.Enum):
    QP = "QP"
    AADAG = "AAdag"

    @classmethod
    def parse(cls, value: Union[str, "Convention"]) -> "Convention":
        if isinstance(value, Convention):
            return value
        v = str(value).strip().lower()
        if v == "qp":
            return cls.QP
        if v in ("aadag", "aa", "ladder"):
            return cls.AADAG
        raise ValueError(f"unknown basis convention {value!r}")


BOSON = Statistics.BOSON
FERMION = Statistics.FERMION


@dataclass(frozen=True)
class BasisConvention:
    ordering: Convention
    N: int

    @property
    def dim(self) -> int:
        return 2 * self.N


# ---------------------------------------------------------------------------
# small helpers


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _scale(a: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0


def residual(a: np.ndarray, b: np.ndarray) -> float:
    """Max-abs residual of a - b, relative to the scale of b (at least 1)."""
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) / _scale(np.asarray(b))


def n_modes_of(a: np.ndarray) -> int:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
        raise DimensionMismatch(f"expected a square 2N x 2N matrix, got shape {a.shape}")
    return a.shape[0] // 2


def std_symplectic(N: int) -> np.ndarray:
    """Standard QP symplectic form [[0, 1], [-1, 0]]."""
    I = np.eye(N)
    Z = np.zeros((N, N))
    return np.block([[Z, I], [-I, Z]])


def qp_to_aadag(N: int) -> np.ndarray:
    """Fixed unitary U with (a_1..a_N, a_1^+..a_N^+) = U (q_1..q_N, p_1..p_N)."""
    I = np.eye(N)
    return np.block([[I, 1j * I], [I, -1j * I]]) / np.sqrt(2.0)


def background(stats: Statistics, N: int) -> np.ndarray:
    """The fixed structure in standard QP form: Omega for bosons, G for fermions."""
    return std_symplectic(N) if Statistics.parse(stats) is BOSON else np.eye(2 * N)


def sqrtm_spd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric square root and its inverse of a symmetric positive definite matrix."""
    w, v = np.linalg.eigh((a + a.T) / 2)
    if w.min() <= 0:
        raise NotPositiveDefinite("metric is not positive definite")
    s = np.sqrt(w)
    return (v * s) @ v.T, (v / s) @ v.T


def pfaffian(a: np.ndarray) -> float:
    """Pfaffian of an antisymmetric matrix (Parlett-Reid elimination)."""
    A = np.array(a, dtype=float, copy=True)
    n = A.shape[0]
    if n % 2:
        return 0.0
    pf = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.abs(A[k + 1 :, k]).argmax())
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0.0:
            return 0.0
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2 :] / A[k, k + 1]
            A[k + 2 :, k + 2 :] += np.outer(tau, A[k + 2 :, k + 1])
            A[k + 2 :, k + 2 :] -= np.outer(A[k + 2 :, k + 1], tau)
    return float(pf)


# ---------------------------------------------------------------------------
# triples


@dataclass(frozen=True)
class KahlerTriple:
    stats: Statistics
    n_modes: int
    G: np.ndarray
    Omega: np.ndarray
    J: np.ndarray
    convention: Convention = Convention.QP
    compatible: bool = True
    g: np.ndarray = field(init=False, repr=False, compare=False)
    omega: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "stats", Statistics.parse(self.stats))
        object.__setattr__(self, "convention", Convention.parse(self.convention))
        for name in ("G", "Omega", "J"):
            m = np.asarray(getattr(self, name))
            if m.shape != (2 * self.n_modes, 2 * self.n_modes):
                raise DimensionMismatch(f"{name} has shape {m.shape}, expected {(2 * self.n_modes,) * 2}")
            object.__setattr__(self, name, _frozen(m))
        # the background must be invertible; a fermionic Omega may be singular
        # (maximally mixed modes), in which case omega is left undefined (NaN)
        for name, inv in (("G", "g"), ("Omega", "omega")):
            m = getattr(self, name)
            try:
                val = np.linalg.inv(m)
            except np.linalg.LinAlgError as exc:
                if self.stats is FERMION and name == "Omega":
                    val = np.full(m.shape, np.nan)
                else:
                    raise SingularStructure(str(exc)) from None
            object.__setattr__(self, inv, _frozen(val))

    @property
    def dim(self) -> int:
        return 2 * self.n_modes

    @property
    def fixed(self) -> np.ndarray:
        """The state-independent background structure."""
        return self.Omega if self.stats is BOSON else self.G

    @property
    def covariance(self) -> np.ndarray:
        """Gamma = G (bosons) or Omega (fermions)."""
        return self.G if self.stats is BOSON else self.Omega

    def complex_structure_residual(self) -> float:
        return residual(self.J @ self.J, -np.eye(self.dim))

    def to_convention(self, convention: Union[str, Convention]) -> "KahlerTriple":
        convention = Convention.parse(convention)
        if convention is self.convention:
            return self
        U = qp_to_aadag(self.n_modes)
        if convention is Convention.QP:
            U = np.linalg.inv(U)
        return KahlerTriple(
            self.stats,
            self.n_modes,
            U @ self.G @ U.T,
            U @ self.Omega @ U.T,
            U @ self.J @ np.linalg.inv(U),
            convention,
            self.compatible,
        )


def standard_structures(stats, N: int, convention=Convention.QP) -> KahlerTriple:
    """Standard-form compatible triple: G = 1, Omega = J = [[0, 1], [-1, 0]] in QP."""
    if N < 1:
        raise DimensionMismatch("N must be >= 1")
    stats = Statistics.parse(stats)
    A = std_symplectic(N)
    triple = KahlerTriple(stats, N, np.eye(2 * N), A, A.copy())
    return triple.to_convention(convention)


def _check_symmetric(m: np.ndarray, name: str, tol: float) -> None:
    if residual(m, m.T) > tol:
        raise IncompatiblePair(f"{name} is not symmetric")


def _check_antisymmetric(m: np.ndarray, name: str, tol: float) -> None:
    if residual(m, -m.T) > tol:
        raise IncompatiblePair(f"{name} is not antisymmetric")


def complete_triple(stats, G=None, Omega=None, J=None, *, strict: bool = False) -> KahlerTriple:
    """Build a triple from any two of (G, Omega, J).

    From (G, Omega) the induced J is -G omega for bosons and Omega g for
    fermions; such a pair may describe a mixed state, so the triple is
    returned with ``compatible`` set from the J^2 = -1 test unless ``strict``.
    From (G, J) or (Omega, J) the missing form must have its defining symmetry,
    otherwise IncompatiblePair is raised.
    """
    stats = Statistics.parse(stats)
    tol = get_policy().decomposition_tol
    given = [m is not None for m in (G, Omega, J)]
    if sum(given) != 2:
        raise ValueError("exactly two of G, Omega, J must be given")
    mats = [np.asarray(m) for m in (G, Omega, J) if m is not None]
    N = n_modes_of(mats[0])
    for m in mats[1:]:
        if m.shape != mats[0].shape:
            raise DimensionMismatch("structures have different shapes")
    one = np.eye(2 * N)
    if G is not None:
        G = np.asarray(G)
        _check_symmetric(G, "G", tol)
        G = (G + G.T) / 2
    if Omega is not None:
        Omega = np.asarray(Omega)
        _check_antisymmetric(Omega, "Omega", tol)
        Omega = (Omega - Omega.T) / 2
    try:
        if J is None:
            if stats is BOSON:
                J = -G @ np.linalg.inv(Omega)
            else:
                J = Omega @ np.linalg.inv(G)
        elif Omega is None:
            J = np.asarray(J)
            Omega = J @ G
            _check_antisymmetric(Omega, "Omega = J G", tol)
            Omega = (Omega - Omega.T) / 2
        else:
            J = np.asarray(J)
            G = -J @ Omega
            _check_symmetric(G, "G = -J Omega", tol)
            G = (G + G.T) / 2
    except np.linalg.LinAlgError as exc:
        raise SingularStructure(str(exc)) from None
    if np.isrealobj(G) and np.linalg.eigvalsh(G).min() <= 0:
        raise IncompatiblePair("G is not positive definite")
    compatible = residual(J @ J, -one) <= tol
    if strict and not compatible:
        raise IncompatiblePair("J^2 != -1: the pair is not compatible")
    return KahlerTriple(stats, N, G, Omega, J, compatible=compatible)


# ---------------------------------------------------------------------------
# groups and algebras


def _form(stats, N: int, form: Optional[np.ndarray]) -> np.ndarray:
    return background(stats, N) if form is None else np.asarray(form)


def is_group_element(M, stats, form=None, tol: Optional[float] = None) -> bool:
    M = np.asarray(M)
    N = n_modes_of(M)
    F = _form(stats, N, form)
    if F.shape != M.shape:
        raise DimensionMismatch("group element and background form differ in shape")
    tol = get_policy().structure_tol if tol is None else tol
    return residual(M @ F @ M.T, F) <= tol * max(1.0, float(np.max(np.abs(M))) ** 2)


def is_algebra_element(K, stats, form=None, tol: Optional[float] = None) -> bool:
    K = np.asarray(K)
    N = n_modes_of(K)
    F = _form(stats, N, form)
    if F.shape != K.shape:
        raise DimensionMismatch("algebra element and background form differ in shape")
    tol = get_policy().structure_tol if tol is None else tol
    return float(np.max(np.abs(K @ F + F @ K.T))) <= tol * _scale(K)


def killing_form(K1, K2, stats) -> float:
    K1, K2 = np.asarray(K1), np.asarray(K2)
    if K1.shape != K2.shape:
        raise DimensionMismatch("algebra elements differ in shape")
    N = n_modes_of(K1)
    c = N + 1 if Statistics.parse(stats) is BOSON else N - 1
    return float(2 * c * np.trace(K1 @ K2).real)


def split_pm(K, J) -> tuple[np.ndarray, np.ndarray]:
    """K_(+/-) = (K +/- J K J)/2; K_+ anticommutes with J, K_- commutes."""
    K, J = np.asarray(K), np.asarray(J)
    if K.shape != J.shape:
        raise DimensionMismatch("K and J differ in shape")
    JKJ = J @ K @ J
    return (K + JKJ) / 2, (K - JKJ) / 2


# ---------------------------------------------------------------------------
# matrix functions


def _argh(x):
    return 0.5 * np.log(np.abs((1 + x) / (1 - x))) + 0j


_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp": np.exp,
    "sqrt": np.sqrt,
    "invsqrt": lambda x: 1 / np.sqrt(x),
    "log": np.log,
    "tanh": np.tanh,
    "tan": np.tan,
    "cot": lambda x: 1 / np.tan(x),
    "arctan": np.arctan,
    "arccot": lambda x: np.arctan(1 / x),
    "argh": _argh,
    "abs": lambda x: np.abs(x) + 0j,
    "sign": lambda x: x / np.abs(x),
}


def _branch_check(name: str, w: np.ndarray, tol: float) -> None:
    scale = max(1.0, float(np.max(np.abs(w))))
    if name in ("sqrt", "invsqrt", "log"):
        bad = (np.abs(w.imag) <= tol * scale) & (w.real <= 0)
        if name != "sqrt":
            bad |= np.abs(w) <= tol
        elif np.any(bad & (np.abs(w) > tol)):
            pass
        if name == "sqrt":
            bad = bad & (np.abs(w) > tol)
        if np.any(bad):
            raise BranchViolation(f"eigenvalue on the branch cut of {name}: {w[bad][0]!r}")
    elif name in ("arctan", "arccot"):
        z = w if name == "arctan" else 1 / np.where(w == 0, np.inf, w)
        if np.any(np.abs(np.abs(z) - 1) <= tol) and np.any(np.abs(z.real) <= tol):
            hit = (np.abs(z.real) <= tol) & (np.abs(np.abs(z.imag) - 1) <= tol)
            if np.any(hit):
                raise BranchViolation(f"eigenvalue at a singular point of {name}")
    elif name in ("argh",):
        if np.any(np.abs(np.abs(w) - 1) <= tol):
            raise BranchViolation("eigenvalue at +/-1 for argh")
    elif name in ("sign",):
        if np.any(np.abs(w) <= tol * scale):
            raise BranchViolation("zero eigenvalue for sign")
    elif name == "cot":
        if np.any(np.abs(np.sin(w)) <= tol):
            raise BranchViolation("eigenvalue at a pole of cot")
    elif name == "tan":
        if np.any(np.abs(np.cos(w)) <= tol):
            raise BranchViolation("eigenvalue at a pole of tan")


@dataclass(frozen=True)
class EigenFrame:
    """A = V diag(w) Vinv."""

    w: np.ndarray
    V: np.ndarray
    Vinv: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (self.V * values) @ self.Vinv


def eigen_frame(A, metric=None) -> EigenFrame:
    """Diagonalize A.

    With ``metric`` m (symmetric positive definite such that m A is symmetric
    or antisymmetric) the similar matrix m^(1/2) A m^(-1/2) is normal and a
    unitary Schur basis is used, which stays well conditioned at degenerate
    eigenvalues.  Otherwise a general eigendecomposition is used and its
    condition number is checked against the policy.
    """
    A = np.asarray(A)
    pol = get_policy()
    if metric is not None:
        S, Si = sqrtm_spd(np.asarray(metric))
        Ah = S @ A @ Si
        T, Z = sla.schur(Ah.astype(complex), output="complex")
        off = np.triu(T, 1)
        if float(np.max(np.abs(off), initial=0.0)) <= 1e3 * np.finfo(float).eps * _scale(T) * A.shape[0]:
            return EigenFrame(np.diag(T).copy(), Si @ Z, Z.conj().T @ S)
    w, V = np.linalg.eig(A)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > pol.cond_max:
        raise IllConditioned(f"eigenvector condition number {cond:.3e} exceeds {pol.cond_max:.1e}")
    return EigenFrame(w, V, np.linalg.inv(V))


def _realify(result: np.ndarray, source: np.ndarray, tol: float) -> np.ndarray:
    if np.isrealobj(source) and float(np.max(np.abs(result.imag), initial=0.0)) <= tol * _scale(result):
        return np.ascontiguousarray(result.real)
    return result


def matrix_function(A, f: Union[str, Callable], metric=None, *, real: Optional[bool] = None) -> np.ndarray:
    """Apply a scalar function on the spectral decomposition of A.

    ``f`` is one of exp, sqrt, invsqrt, log, tanh, tan, cot, arctan, arccot,
    argh, abs, sign, or a vectorized callable on complex eigenvalues.
    Principal branches are used; eigenvalues on a cut raise BranchViolation.
    """
    A = np.asarray(A)
    pol = get_policy()
    frame = eigen_frame(A, metric)
    if isinstance(f, str):
        if f not in _FUNCTIONS:
            raise ValueError(f"unknown matrix function {f!r}")
        _branch_check(f, frame.w, pol.clip_band)
        fn = _FUNCTIONS[f]
    else:
        fn = f
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(fn(frame.w.astype(complex)), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise BranchViolation("matrix function produced non-finite eigenvalues")
    out = frame.apply(vals)
    if real is False:
        return out
    return _realify(out, A, max(pol.structure_tol, 1e-9))


# ---------------------------------------------------------------------------
# relative structure and Cartan decomposition


@dataclass(frozen=True)
class RelativeStructure:
    Delta: np.ndarray
    stats: Statistics
    spectrum: np.ndarray  # rho_i (bosons) or theta_i (fermions), length N, descending
    eigenvalues: np.ndarray
    has_odd_minus_one_pairs: bool = False
    minus_one_pairs: int = 0


def _fixed_metric(stats: Statistics, J: np.ndarray, fixed: Optional[np.ndarray]) -> np.ndarray:
    """A metric making Delta (and J) normal: g of the reference for bosons,
    g of the background for fermions."""
    N = n_modes_of(J)
    F = _form(stats, N, fixed)
    if stats is BOSON:
        G = -J @ F
        return np.linalg.inv((G + G.T) / 2)
    return np.linalg.inv(F)


def relative_parity(J_ref, J_target, G=None) -> int:
    """+1 if two fermionic complex structures lie in the same component, else -1."""
    N = n_modes_of(J_ref)
    G = np.eye(2 * N) if G is None else np.asarray(G)
    O1 = J_ref @ G
    O2 = J_target @ G
    p = pfaffian((O1 - O1.T) / 2) * pfaffian((O2 - O2.T) / 2)
    return 1 if p > 0 else -1


def relative_structure(J_ref, J_target, stats, fixed=None) -> RelativeStructure:
    """Delta = -J_target J_ref with its spectrum classified.

    Bosons: eigenvalues come in positive pairs (e^rho, e^-rho).
    Fermions: unit-modulus eigenvalues e^(+/- i theta), every angle with even
    multiplicity; (-1,-1) pairs are counted via the Pfaffian parity.
    """
    stats = Statistics.parse(stats)
    J_ref, J_target = np.asarray(J_ref), np.asarray(J_target)
    if J_ref.shape != J_target.shape:
        raise DimensionMismatch("complex structures differ in shape")
    N = n_modes_of(J_ref)
    pol = get_policy()
    tol = pol.decomposition_tol
    Delta = -J_target @ J_ref
    metric = _fixed_metric(stats, J_ref, fixed)
    frame = eigen_frame(Delta, metric)
    w = frame.w
    if stats is BOSON:
        if np.max(np.abs(w.imag)) > tol * _scale(w) or np.min(w.real) <= 0:
            raise SpectrumClassificationFailure("bosonic Delta must have real positive eigenvalues")
        logs = np.sort(np.log(w.real))
        if np.max(np.abs(logs + logs[::-1])) > 1e3 * tol * max(1.0, float(np.max(np.abs(logs)))):
            raise SpectrumClassificationFailure("bosonic Delta eigenvalues are not reciprocal pairs")
        rho = np.sort(np.abs(logs[N:] - logs[:N][::-1]) / 2)[::-1]
        return RelativeStructure(_frozen(Delta), stats, _frozen(rho), _frozen(np.sort(w.real)))
    if np.max(np.abs(np.abs(w) - 1)) > 1e3 * tol:
        raise SpectrumClassificationFailure("fermionic Delta eigenvalues must have unit modulus")
    theta = np.sort(np.abs(np.angle(w)))
    # eigenvalues e^{+i t}, e^{-i t} appear for each angle; angles in quadruples
    theta_pairs = theta.reshape(N, 2)
    if np.max(np.abs(theta_pairs[:, 0] - theta_pairs[:, 1]), initial=0.0) > 1e-6:
        raise SpectrumClassificationFailure("fermionic Delta eigenvalues are not conjugate pairs")
    theta = theta_pairs.mean(axis=1)[::-1]
    minus = int(np.sum(np.abs(w + 1) <= 1e-6)) // 2
    fixed_G = _form(stats, N, fixed)
    odd = relative_parity(J_ref, J_target, fixed_G) < 0
    return RelativeStructure(
        _frozen(Delta), stats, _frozen(theta), _frozen(w[np.argsort(np.angle(w))]), odd, minus
    )


def _quaternionic_sqrt(Dh: np.ndarray, Jh: np.ndarray, tol: float) -> np.ndarray:
    """A real orthogonal T with T^2 = -1 on the -1 eigenspace of Dh (orthonormal
    frame) that anticommutes with Jh there, built by deterministic Gram-Schmidt."""
    n = Dh.shape[0]
    u, s, vt = np.linalg.svd(Dh + np.eye(n))
    E = vt[s <= 1e-6].T  # real orthonormal basis of the -1 eigenspace
    T = np.zeros((n, n))
    remaining = [E[:, k] for k in range(E.shape[1])]
    used: list[np.ndarray] = []

    def project(x):
        for b in used:
            x = x - (b @ x) * b
        return x

    while remaining:
        v = project(remaining.pop(0))
        if np.linalg.norm(v) < 0.5:
            continue
        v /= np.linalg.norm(v)
        Jv = Jh @ v
        used.extend([v, Jv])
        w = None
        while remaining:
            cand = project(remaining.pop(0))
            if np.linalg.norm(cand) > 0.5:
                w = cand / np.linalg.norm(cand)
                break
        if w is None:
            raise NoCartanDecomposition("odd number of (-1,-1) pairs in Delta")
        Jw = Jh @ w
        used.extend([w, Jw])
        T += np.outer(w, v) - np.outer(v, w) - np.outer(Jw, Jv) + np.outer(Jv, Jw)
    return T


def sqrt_delta(rel: RelativeStructure, J_ref, fixed=None) -> tuple[np.ndarray, bool]:
    """T = sqrt(Delta) with T J T = J.  Returns (T, non_unique)."""
    stats = rel.stats
    J_ref = np.asarray(J_ref)
    if stats is FERMION and rel.has_odd_minus_one_pairs:
        raise NoCartanDecomposition("Delta has an odd number of (-1,-1) pairs; no Cartan decomposition")
    metric = _fixed_metric(stats, J_ref, fixed)
    if stats is BOSON or rel.minus_one_pairs == 0:
        return matrix_function(rel.Delta, "sqrt", metric), False
    warnings.warn("Delta has (-1,-1,-1,-1) blocks; sqrt(Delta) is not unique", NonUniqueWarning, stacklevel=3)
    S, Si = sqrtm_spd(metric)
    Dh = S @ rel.Delta @ Si
    Jh = S @ J_ref @ Si
    T, Z = sla.schur(Dh.astype(complex), output="complex")
    w = np.diag(T)
    on_cut = np.abs(w + 1) <= 1e-6
    vals = np.where(on_cut, 0.0, np.sqrt(np.where(on_cut, 1.0, w)))
    rest = ((Z * vals) @ Z.conj().T).real
    Th = rest + _quaternionic_sqrt(Dh, Jh, get_policy().decomposition_tol)
    return Si @ Th @ S, True


@dataclass(frozen=True)
class CartanDecomposition:
    T: np.ndarray
    u: np.ndarray
    non_unique: bool = False


def cartan_decompose(M, J, stats=None, fixed=None) -> CartanDecomposition:
    """M = T u with T = sqrt(Delta), Delta = -M J M^-1 J, T J T = J and [u, J] = 0."""
    M, J = np.asarray(M), np.asarray(J)
    if M.shape != J.shape:
        raise DimensionMismatch("M and J differ in shape")
    if stats is None:
        stats = BOSON if fixed is None else BOSON
    stats = Statistics.parse(stats)
    N = n_modes_of(M)
    F = _form(stats, N, fixed)
    if not is_group_element(M, stats, F, tol=get_policy().decomposition_tol):
        from .errors import NotGroupElement

        raise NotGroupElement("M is not a group element of the background structure")
    if stats is FERMION and np.linalg.det(M) < 0:
        raise NoCartanDecomposition("det M = -1: M lies in the component not connected to the identity")
    J_M = M @ J @ np.linalg.inv(M)
    rel = relative_structure(J, J_M, stats, fixed)
    T, non_unique = sqrt_delta(rel, J, fixed)
    u = np.linalg.solve(T, M)
    return CartanDecomposition(_frozen(T), _frozen(u), non_unique)


def generator_between(J_ref, J_target, stats, fixed=None) -> np.ndarray:
    """K_+ = log(T) = (1/2) log(Delta): anticommutes with J_ref and maps it to J_target."""
    stats = Statistics.parse(stats)
    rel = relative_structure(J_ref, J_target, stats, fixed)
    if stats is FERMION and rel.has_odd_minus_one_pairs:
        raise NoCartanDecomposition("states lie in different parity sectors")
    if stats is FERMION and rel.minus_one_pairs:
        raise BranchViolation("Delta has eigenvalue -1; the generator is not unique")
    metric = _fixed_metric(stats, np.asarray(J_ref), fixed)
    return matrix_function(rel.Delta, "log", metric) / 2


# ---------------------------------------------------------------------------
# standard forms


@dataclass(frozen=True)
class StandardForm:
    M: np.ndarray
    params: np.ndarray  # epsilon_i, descending


def _pair_schur(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal O (QP ordered columns) with O^T B O = [[0, E], [-E, 0]], E > 0 descending."""
    n = B.shape[0]
    N = n // 2
    T, Z = sla.schur(B, output="real")
    blocks = []
    k = 0
    while k < n:
        if k + 1 < n and abs(T[k + 1, k]) > 0:
            t = T[k, k + 1]
            x, y = Z[:, k], Z[:, k + 1]
            # the 2x2 block of an antisymmetric Schur form is [[0, t], [-t, 0]]
            if t < 0:
                x, y, t = y, x, -t
            blocks.append((t, x, y))
            k += 2
        else:
            raise DegenerateForm("form has a zero mode; no block standard form")
    blocks.sort(key=lambda b: -b[0])
    E = np.array([b[0] for b in blocks])
    O = np.zeros((n, n))
    for i, (_, x, y) in enumerate(blocks):
        O[:, i] = x
        O[:, N + i] = y
    return O, E


def block_standard_form(h=None, stats=BOSON, *, K=None) -> StandardForm:
    """Group element M and parameters eps with M^-1 K M = [[0, E], [-E, 0]].

    Bosons need h symmetric positive definite (K = Omega h); fermions need h
    antisymmetric nondegenerate (K = G h).  Standard backgrounds are assumed.
    """
    stats = Statistics.parse(stats)
    if h is None and K is None:
        raise ValueError("pass h or K")
    if h is None:
        K = np.asarray(K)
        N = n_modes_of(K)
        h = np.linalg.inv(std_symplectic(N)) @ K if stats is BOSON else K
    h = np.asarray(h, dtype=float)
    N = n_modes_of(h)
    if stats is BOSON:
        h = (h + h.T) / 2
        w = np.linalg.eigvalsh(h)
        if w.min() <= 0:
            raise NotPositiveDefinite("bosonic h must be positive definite")
        S, Si = sqrtm_spd(h)
        B = S @ std_symplectic(N) @ S
        B = (B - B.T) / 2
        O, E = _pair_schur(B)
        M = Si @ O @ np.diag(np.sqrt(np.concatenate([E, E])))
    else:
        h = (h - h.T) / 2
        if abs(np.linalg.det(h)) <= get_policy().structure_tol:
            raise DegenerateForm("fermionic h is singular")
        O, E = _pair_schur(h)
        M = O
    if np.min(E) <= get_policy().structure_tol:
        raise DegenerateForm("form has a zero mode")
    return StandardForm(_frozen(M), _frozen(E))


# ---------------------------------------------------------------------------
# identity suite


def _identity_table(t: KahlerTriple) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    G, Om, J, g, om = t.G, t.Omega, t.J, t.g, t.omega
    one = np.eye(t.dim)
    Jt = J.T
    return {
        "-J^2 = 1": (-J @ J, one),
        "-(J^T)^2 = 1": (-Jt @ Jt, one),
        "-J^-1 = J": (-np.linalg.inv(J), J),
        "J Omega J^T = Omega": (J @ Om @ Jt, Om),
        "-Omega J^T = J Omega": (-Om @ Jt, J @ Om),
        "J G J^T = G": (J @ G @ Jt, G),
        "-G J^T = J G": (-G @ Jt, J @ G),
        "Omega J^T = G": (Om @ Jt, G),
        "-J Omega = G": (-J @ Om, G),
        "Omega omega = 1": (Om @ om, one),
        "omega Omega = 1": (om @ Om, one),
        "G g = 1": (G @ g, one),
        "g G = 1": (g @ G, one),
        "-omega G omega = g": (-om @ G @ om, g),
        "-g Omega g = omega": (-g @ Om @ g, om),
        "Omega g = J": (Om @ g, J),
        "-G omega = J": (-G @ om, J),
        "-Omega^T = Omega": (-Om.T, Om),
        "G^T = G": (G.T, G),
    }


@dataclass(frozen=True)
class IdentityReport:
    residuals: dict
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol

    def lines(self) -> list[str]:
        return [f"{name}: {res:.3e}" for name, res in self.residuals.items()]


def validate_identities(triple: KahlerTriple) -> IdentityReport:
    """Max residual of each common Kähler identity (relative to the entry scale)."""
    res = {name: residual(lhs, rhs) for name, (lhs, rhs) in _identity_table(triple).items()}
    return IdentityReport(res, get_policy().structure_tol)
