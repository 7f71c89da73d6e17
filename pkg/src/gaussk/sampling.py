"""Random instances for property tests and the verify suite."""

from __future__ import annotations

from typing import Optional

import numpy as np
import scipy.linalg as sla

from .kahler import BOSON, FERMION, Statistics, complete_triple, std_symplectic
from .states import MixedGaussianState, PureGaussianState, mixed_from_q, pure_state


def _sym(rng, n):
    a = rng.normal(size=(n, n))
    return (a + a.T) / 2


def _antisym(rng, n):
    a = rng.normal(size=(n, n))
    return (a - a.T) / 2


def random_squeeze_generator(rng, N: int, max_rho: float = 1.0) -> np.ndarray:
    """K_+ anticommuting with the standard J, scaled so the largest squeeze is max_rho.

    exp(K_+) maps the vacuum to a state whose relative structure has eigenvalues
    exp(+/- rho_i) with max rho_i = max_rho.
    """
    A, B = _sym(rng, N), _sym(rng, N)
    K = np.block([[A, B], [B, -A]])
    top = np.max(np.abs(np.linalg.eigvalsh(K)))
    return K * (max_rho / 2) / top if top > 0 else K


def random_unitary_generator(rng, N: int, scale: float = 1.0) -> np.ndarray:
    """K_- commuting with the standard J (an element of u(N))."""
    X, Y = _antisym(rng, N), _sym(rng, N)
    return scale * np.block([[X, Y], [-Y, X]])


def random_symplectic(rng, N: int, scale: float = 0.5) -> np.ndarray:
    K = random_squeeze_generator(rng, N, scale) + random_unitary_generator(rng, N, scale)
    return sla.expm(K)


def random_orthogonal(rng, N: int, odd: bool = False) -> np.ndarray:
    M = sla.expm(_antisym(rng, 2 * N) * 2)
    if odd:
        M = M @ np.diag([-1.0] + [1.0] * (2 * N - 1))
    return M


def random_group_element(rng, stats, N: int, scale: float = 0.5, odd: bool = False) -> np.ndarray:
    if Statistics.parse(stats) is BOSON:
        return random_symplectic(rng, N, scale)
    return random_orthogonal(rng, N, odd)


def random_pure_state(
    rng, stats, N: int, max_rho: float = 1.0, displacement: float = 0.3, odd: bool = False
) -> PureGaussianState:
    """Random pure state; bosonic squeezing bounded by max_rho."""
    stats = Statistics.parse(stats)
    J0 = std_symplectic(N)
    if stats is BOSON:
        rho = rng.uniform(0, max_rho)
        M = sla.expm(random_squeeze_generator(rng, N, rho)) @ sla.expm(random_unitary_generator(rng, N))
        z = displacement * rng.normal(size=2 * N)
        return pure_state(stats, M @ J0 @ np.linalg.inv(M), z)
    M = random_orthogonal(rng, N, odd)
    return pure_state(stats, M @ J0 @ M.T)


def random_mixed_state(rng, stats, N: int, beta_range=(0.3, 2.0), max_rho: float = 0.8, displacement: float = 0.3) -> MixedGaussianState:
    """Random mixed state exp(-Q) with per-mode beta in beta_range."""
    stats = Statistics.parse(stats)
    betas = rng.uniform(*beta_range, size=N)
    if stats is BOSON:
        M = sla.expm(random_squeeze_generator(rng, N, rng.uniform(0, max_rho))) @ sla.expm(
            random_unitary_generator(rng, N)
        )
        q0 = np.diag(np.concatenate([betas, betas]))
        Mi = np.linalg.inv(M)
        q = Mi.T @ q0 @ Mi
        return mixed_from_q(stats, q, displacement * rng.normal(size=2 * N))
    M = random_orthogonal(rng, N)
    q0 = std_symplectic(N) @ np.diag(np.concatenate([betas, betas]))
    return mixed_from_q(stats, M @ q0 @ M.T)


def random_compatible_triple(rng, stats, N: int, general: bool = True):
    """Compatible triple; with ``general`` a random basis change also moves the background."""
    st = random_pure_state(rng, stats, N, max_rho=1.5, displacement=0.0)
    t = st.triple
    if not general:
        return t
    S = np.eye(2 * N) + 0.3 * rng.normal(size=(2 * N, 2 * N))
    while np.linalg.cond(S) > 20:
        S = np.eye(2 * N) + 0.3 * rng.normal(size=(2 * N, 2 * N))
    G = S @ t.G @ S.T
    Om = S @ t.Omega @ S.T
    return complete_triple(stats, G=G, Omega=Om, strict=True)


def random_hamiltonian(rng, stats, N: int, gap: float = 0.5, with_f: bool = True):
    """(h, f): positive definite symmetric h (bosons) or random antisymmetric h (fermions)."""
    stats = Statistics.parse(stats)
    if stats is BOSON:
        a = rng.normal(size=(2 * N, 2 * N))
        h = a @ a.T / (2 * N) + gap * np.eye(2 * N)
        f = rng.normal(size=2 * N) * 0.3 if with_f else np.zeros(2 * N)
        return h, f
    return _antisym(rng, 2 * N), np.zeros(2 * N)
