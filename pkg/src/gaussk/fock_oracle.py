"""Brute-force Fock-space backend used to certify the phase-space formulas.

Bosonic modes are truncated at ``cutoff`` occupations per mode; fermionic
modes use a Jordan-Wigner construction with mode 0 as the most significant
tensor factor.  Basis states are ordered lexicographically in the
occupation numbers (n_0, ..., n_{N-1}).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import BudgetExceeded, DegenerateKernel, TruncationTooSmall
from .kahler import BOSON, FERMION, Statistics
from .policy import get_policy
from .states import (
    MixedGaussianState,
    PureGaussianState,
    as_mixed,
    q_from_mixed,
)


@dataclass(frozen=True)
class FockRep:
    stats: Statistics
    n_modes: int
    cutoff: Optional[int]
    annihilators: tuple
    xi_ops: tuple

    @property
    def dim(self) -> int:
        return self.xi_ops[0].shape[0]

    @property
    def shape(self) -> tuple:
        c = 2 if self.stats is FERMION else self.cutoff
        return (c,) * self.n_modes

    def occupations(self) -> np.ndarray:
        """Occupation numbers of each basis state, shape (dim, N)."""
        return np.array(list(itertools.product(*[range(c) for c in self.shape])), dtype=int).reshape(-1, self.n_modes)

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v


def _ladder(stats: Statistics, N: int, cutoff: int) -> list[np.ndarray]:
    if stats is FERMION:
        sm = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|
        Z = np.diag([1.0, -1.0])
        I2 = np.eye(2)
        ops = []
        for k in range(N):
            m = np.ones((1, 1))
            for j in range(N):
                m = np.kron(m, Z if j < k else (sm if j == k else I2))
            ops.append(m)
        return ops
    a1 = np.diag(np.sqrt(np.arange(1, cutoff)), 1)
    ops = []
    for k in range(N):
        m = np.ones((1, 1))
        for j in range(N):
            m = np.kron(m, a1 if j == k else np.eye(cutoff))
        ops.append(m)
    return ops


def build(stats, N: int, cutoff: Optional[int] = None) -> FockRep:
    """Explicit operators xi^a = (q_1..q_N, p_1..p_N) on the Fock space."""
    stats = Statistics.parse(stats)
    pol = get_policy()
    if stats is FERMION:
        if N > pol.fermion_max_modes:
            raise BudgetExceeded(f"fermionic oracle limited to {pol.fermion_max_modes} modes")
        cutoff_eff = 2
        cutoff = None
    else:
        cutoff_eff = pol.boson_cutoff if cutoff is None else int(cutoff)
        cutoff = cutoff_eff
        if cutoff_eff**N > pol.boson_max_dim:
            raise BudgetExceeded(f"bosonic Fock dimension {cutoff_eff}^{N} exceeds {pol.boson_max_dim}")
    a = _ladder(stats, N, cutoff_eff)
    s = 1 / np.sqrt(2.0)
    qs = [s * (ak + ak.T) for ak in a]
    ps = [-1j * s * (ak - ak.T) for ak in a]
    return FockRep(stats, N, cutoff, tuple(a), tuple(qs + ps))


def _padded(rep: FockRep, extra: int) -> FockRep:
    if rep.stats is FERMION or extra <= 0:
        return rep
    return build(rep.stats, rep.n_modes, rep.cutoff + extra)


def _embed_index(rep: FockRep, big: FockRep) -> np.ndarray:
    """Positions of rep's basis states inside the padded space."""
    occ = rep.occupations()
    return np.ravel_multi_index(occ.T, big.shape)


# ---------------------------------------------------------------------------
# states


def _boson_amplitudes(state: PureGaussianState, cutoff: int) -> np.ndarray:
    """Exact Fock amplitudes of exp(a^+ W a^+ / 2 + b a^+)|0> on the block
    n_k < cutoff (unnormalized, psi(0) = 1).

    The annihilators (1 + iJ)/2 (xi - z) read A1 a + A2 a^+ - P z; solving
    for a gives a psi = (W a^+ + b) psi with W = -A1^+ A2, b = A1^+ P z.
    """
    N = state.n_modes
    P = 0.5 * (np.eye(2 * N) + 1j * state.J)
    s = 1 / np.sqrt(2.0)
    u0 = np.vstack([s * np.eye(N), -1j * s * np.eye(N)])  # xi = u0 a + u0^* a^+
    A1 = P @ u0
    A2 = P @ u0.conj()
    A1p = np.linalg.pinv(A1)
    W = -A1p @ A2
    b = A1p @ (P @ state.z)
    if np.max(np.abs(W - W.T)) > 1e-8 * max(1.0, np.max(np.abs(W))):
        raise DegenerateKernel("pairing matrix is not symmetric; J is not a pure bosonic state")
    psi = np.zeros((cutoff,) * N, dtype=complex)
    psi[(0,) * N] = 1.0
    for n in itertools.product(range(cutoff), repeat=N):
        if not any(n):
            continue
        k = next(i for i, v in enumerate(n) if v > 0)
        m = list(n)
        m[k] -= 1
        acc = b[k] * psi[tuple(m)]
        for j in range(N):
            if m[j] > 0:
                mm = list(m)
                mm[j] -= 1
                acc += W[k, j] * np.sqrt(m[j]) * psi[tuple(mm)]
        psi[n] = acc / np.sqrt(n[k])
    return psi


def boson_tail_mass(state: PureGaussianState, cutoff: int, pad: int = 12) -> float:
    """Normalized weight beyond the block n_k < cutoff, estimated on a padded block."""
    big = _boson_amplitudes(state, cutoff + pad)
    w = np.abs(big) ** 2
    inner = w[(slice(0, cutoff),) * state.n_modes].sum()
    return float(1 - inner / w.sum())


def state_vector(rep: FockRep, state: PureGaussianState, *, check_tail: bool = True) -> np.ndarray:
    """Normalized Fock vector annihilated by (1 + iJ)/2 (xi - z).

    Fermions: one-dimensional kernel of the stacked annihilators.  Bosons:
    exact amplitudes on the truncated block, renormalized; the discarded
    weight is checked against the policy truncation tolerance.
    """
    N = rep.n_modes
    if state.n_modes != N or state.stats is not rep.stats:
        raise ValueError("state does not match the Fock representation")
    if rep.stats is BOSON:
        if check_tail:
            tail = boson_tail_mass(state, rep.cutoff)
            if tail > get_policy().truncation_tol:
                raise TruncationTooSmall(f"tail weight {tail:.2e} exceeds the truncation tolerance; raise the cutoff")
        v = _boson_amplitudes(state, rep.cutoff).reshape(-1)
        return v / np.linalg.norm(v)
    P = 0.5 * (np.eye(2 * N) + 1j * state.J)
    ann = [sum(P[a, b] * rep.xi_ops[b] for b in range(2 * N)) for a in range(2 * N)]
    stack = np.vstack(ann)
    _, s, vh = np.linalg.svd(stack)
    if s.size < rep.dim or s[-2] <= 1e3 * max(s[-1], 1e-15):
        raise DegenerateKernel("annihilator kernel is not one-dimensional")
    v = vh[-1].conj()
    return v / np.linalg.norm(v)


def quadratic_operator(rep: FockRep, k: np.ndarray, lin: Optional[np.ndarray] = None) -> np.ndarray:
    """sum_ab k_ab xi^a xi^b + sum_a lin_a xi^a."""
    X = rep.xi_ops
    n = len(X)
    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    for a in range(n):
        row = sum(k[a, b] * X[b] for b in range(n) if k[a, b] != 0)
        if not isinstance(row, int):
            out += X[a] @ row
    if lin is not None:
        out += sum(lin[a] * X[a] for a in range(n))
    return out


def density_matrix(rep: FockRep, state) -> np.ndarray:
    """rho = exp(-Q) normalized, built from (q, z); pure modes are not supported."""
    st = as_mixed(state)
    q, _ = q_from_mixed(st)
    if rep.stats is FERMION:
        Q = 1j * quadratic_operator(rep, q)
        rho = sla.expm(-(Q + Q.conj().T) / 2)
        return rho / np.trace(rho).real
    pad = 8
    big = _padded(rep, pad)
    z = st.z
    lin = -(q + q.T) @ z
    Q = quadratic_operator(big, q, lin) + float(z @ q @ z) * np.eye(big.dim)
    Q = (Q + Q.conj().T) / 2
    idx = _embed_index(rep, big)
    Qs = Q[np.ix_(idx, idx)]
    w, V = np.linalg.eigh(Qs)
    rho = (V * np.exp(-(w - w.min()))) @ V.conj().T
    return rho / np.trace(rho).real


# ---------------------------------------------------------------------------
# expectation values


def expectation(op: np.ndarray, state: np.ndarray) -> complex:
    """<psi|op|psi> for a vector or Tr(rho op) for a density matrix."""
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    return complex(np.trace(state @ op))


def npoint(rep: FockRep, state: np.ndarray, indices: Sequence[int], z: Optional[np.ndarray] = None) -> complex:
    """<(xi - z)^a1 ... (xi - z)^an>.

    For bosons the operator product is formed on a space padded by n so that
    the truncation of the ladder operators adds no error on the original block.
    """
    n = len(indices)
    big = _padded(rep, n)
    N = rep.n_modes
    z = np.zeros(2 * N) if z is None else np.asarray(z)
    if big is rep:
        vec_idx = np.arange(rep.dim)
    else:
        vec_idx = _embed_index(rep, big)
    one = np.eye(big.dim)
    if state.ndim == 1:
        v = np.zeros(big.dim, dtype=complex)
        v[vec_idx] = state
        w = v.copy()
        for a in reversed(list(indices)):
            w = big.xi_ops[a] @ w - z[a] * w
        return complex(np.vdot(v, w))
    R = np.zeros((big.dim, big.dim), dtype=complex)
    R[np.ix_(vec_idx, vec_idx)] = state
    W = R
    for a in indices:
        W = W @ (big.xi_ops[a] - z[a] * one)
    return complex(np.trace(W))


def npoint_table(rep: FockRep, state: np.ndarray, n: int, z: Optional[np.ndarray] = None) -> np.ndarray:
    """All <(xi - z)^a1 ... (xi - z)^an> for a pure state vector, shape (2N,)*n.

    The product is split in the middle: since xi - z is Hermitian the value is
    the inner product of (X_ak..X_a1)|psi> with (X_ak+1..X_an)|psi>.
    """
    big = _padded(rep, n)
    N = rep.n_modes
    dim = 2 * N
    z = np.zeros(dim) if z is None else np.asarray(z)
    idx = np.arange(rep.dim) if big is rep else _embed_index(rep, big)
    v = np.zeros(big.dim, dtype=complex)
    v[idx] = state
    X = np.stack([big.xi_ops[a] - z[a] * np.eye(big.dim) for a in range(dim)])

    def chain(m: int) -> np.ndarray:
        # chain[j1..jm] = X_jm ... X_j1 v
        out = v
        for _ in range(m):
            out = np.einsum("aij,...j->...ai", X, out)
        return out

    k = n // 2
    L = chain(k).conj()
    R = chain(n - k)
    if n - k > 1:
        R = np.transpose(R, list(range(n - k))[::-1] + [n - k])
    letters = "abcdefghijklmnopqrstuvwxy"
    a, b = letters[:k], letters[k:n]
    return np.einsum(f"{a}z,{b}z->{a}{b}", L, R)


def overlap(v1: np.ndarray, v2: np.ndarray) -> float:
    """|<v1|v2>|^2."""
    return float(abs(np.vdot(v1, v2)) ** 2)


def fermion_reorder(rep: FockRep, perm: Sequence[int]) -> np.ndarray:
    """Signed permutation U with (U psi) expressed in the mode order ``perm``.

    Basis states are ordered products of creation operators, so moving the
    occupied modes into the new order costs the parity of the inversions.
    """
    N = rep.n_modes
    perm = list(perm)
    occ = rep.occupations()
    U = np.zeros((rep.dim, rep.dim))
    for col, n in enumerate(occ):
        m = n[perm]
        occupied = [p for p in perm if n[p]]
        inv = sum(1 for i in range(len(occupied)) for j in range(i + 1, len(occupied)) if occupied[i] > occupied[j])
        row = int(np.ravel_multi_index(tuple(m), rep.shape))
        U[row, col] = -1.0 if inv % 2 else 1.0
    return U


def partial_trace(rep: FockRep, state: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the modes ``keep`` (sorted).

    Fermionic modes are first reordered (with signs) so that the kept modes
    lead; the Jordan-Wigner strings of leading modes never reach the rest.
    """
    keep = sorted(int(k) for k in keep)
    N = rep.n_modes
    drop = [k for k in range(N) if k not in keep]
    perm = keep + drop
    rho = np.outer(state, state.conj()) if state.ndim == 1 else state
    shape = rep.shape
    if rep.stats is FERMION:
        U = fermion_reorder(rep, perm)
        rho = U @ rho @ U.T
    else:
        rho = rho.reshape(shape + shape).transpose(perm + [N + p for p in perm])
    dk = int(np.prod([shape[k] for k in keep]))
    dd = rep.dim // dk
    rho = rho.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", rho)


def entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy -Tr rho log rho."""
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    w = w[w > 1e-300]
    return float(-np.sum(w * np.log(w)))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Tr rho (log rho - log sigma)."""
    def logm_h(m):
        w, V = np.linalg.eigh((m + m.conj().T) / 2)
        return (V * np.log(np.clip(w, 1e-300, None))) @ V.conj().T

    return float(np.trace(rho @ (logm_h(rho) - logm_h(sigma))).real)


def hamiltonian_operator(rep: FockRep, h: np.ndarray, f: Optional[np.ndarray] = None) -> np.ndarray:
    """H = (1/2) h_ab xi^a xi^b + f_a xi^a (bosons) or (i/2) h_ab xi^a xi^b (fermions)."""
    h = np.asarray(h)
    if rep.stats is FERMION:
        H = 0.5j * quadratic_operator(rep, h)
    else:
        H = 0.5 * quadratic_operator(rep, h)
        if f is not None:
            H = H + sum(f[a] * rep.xi_ops[a] for a in range(len(f)))
    return (H + H.conj().T) / 2


def evolve(rep: FockRep, H: np.ndarray, t: float, state: np.ndarray) -> np.ndarray:
    """exp(-i H t) applied to a vector (or conjugating a density matrix)."""
    U = sla.expm(-1j * H * t)
    if state.ndim == 1:
        return U @ state
    return U @ state @ U.conj().T


def ground_state(H: np.ndarray) -> tuple[float, np.ndarray]:
    w, V = np.linalg.eigh(H)
    return float(w[0]), V[:, 0]


def covariance_from(rep: FockRep, state: np.ndarray, z: Optional[np.ndarray] = None) -> np.ndarray:
    """Complex 2-point matrix C2^ab = <(xi - z)^a (xi - z)^b>."""
    n = 2 * rep.n_modes
    C = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            C[a, b] = npoint(rep, state, (a, b), z)
    return C
