"""JSON readers and writers for triples, states and Hamiltonians, model
presets, and CSV output.

Floats are written with 17 significant digits so files round-trip exactly.

Presets
-------
``harmonic_chain``: N oscillators q_i, p_i with
    H = sum_i (p_i^2 + omega(t)^2 q_i^2)/2 + coupling/2 sum_<ij> (q_i - q_j)^2
i.e. h = [[omega(t)^2 1 + coupling L, 0], [0, 1]], f = 0, with L the graph
Laplacian of the open chain (``"boundary": "periodic"`` closes the ring).
``omega(t)`` is ``omega`` before ``quench.t0`` and ``quench.omega2`` from
then on; a ``ramp`` entry {"rate": r} instead gives omega(t) = omega (1 + r t)
with exact time derivatives.

``kitaev_chain``: open chain of N spinless fermions,
    H = -mu sum_i (n_i - 1/2) - J sum_i (c_i^+ c_{i+1} + h.c.)
        + Delta sum_i (c_i c_{i+1} + h.c.)
compiled to the real antisymmetric h of H = (i/2) h_ab xi^a xi^b with
c_j = (q_j + i p_j)/sqrt(2).
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .dynamics import DrivenHamiltonian, QuadraticHamiltonian, constant_driven, hamiltonian
from .errors import DimensionMismatch, ValidationError
from .kahler import (
    BOSON,
    FERMION,
    Convention,
    KahlerTriple,
    Statistics,
    complete_triple,
    qp_to_aadag,
)
from .states import MixedGaussianState, PureGaussianState, mixed_from_q, pure_state


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _encode(obj: Any) -> str:
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return json.dumps(str(v))
        return fmt(v)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if obj is None:
        return "null"
    return json.dumps(obj)


def dumps(obj: Any) -> str:
    """JSON text with every float at 17 significant digits."""
    return _encode(obj) + "\n"


def write_json(path: str, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _matrix(data, name: str) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.ndim == 3 and a.shape[-1] == 2:
        # complex entries stored as [re, im] pairs
        a = a[..., 0] + 1j * a[..., 1]
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be a square matrix")
    return a


def _from_aadag(mat: np.ndarray, kind: str) -> np.ndarray:
    """Bring a matrix stored in the (a, a^+) basis back to real QP form."""
    U = qp_to_aadag(mat.shape[0] // 2)
    Ui = np.linalg.inv(U)
    out = Ui @ mat @ U if kind == "map" else Ui @ mat @ Ui.T
    return _real(out, "matrix")


def _real(mat: np.ndarray, name: str) -> np.ndarray:
    if np.iscomplexobj(mat):
        if np.abs(mat.imag).max() > 1e-12 * max(1.0, np.abs(mat).max()):
            raise ValidationError(f"{name} is not real in the QP basis")
        return mat.real
    return mat


# ---------------------------------------------------------------------------
# triples


def triple_to_dict(triple: KahlerTriple) -> dict:
    return {
        "stats": triple.stats.value,
        "N": triple.n_modes,
        "convention": triple.convention.value,
        "G": triple.G,
        "Omega": triple.Omega,
        "J": triple.J,
    }


def triple_from_dict(data: dict) -> KahlerTriple:
    stats = Statistics.parse(data["stats"])
    conv = Convention.parse(data.get("convention", "QP"))
    mats = {k: _matrix(data[k], k) for k in ("G", "Omega", "J") if k in data}
    if conv is Convention.AADAG:
        mats = {k: _from_aadag(v, "map" if k == "J" else "form") for k, v in mats.items()}
    mats = {k: _real(v, k) for k, v in mats.items()}
    if "N" in data and any(m.shape[0] != 2 * int(data["N"]) for m in mats.values()):
        raise DimensionMismatch("matrix size disagrees with N")
    if len(mats) < 2:
        raise ValidationError("a triple needs at least two of G, Omega, J")
    if len(mats) == 3:
        t = complete_triple(stats, G=mats["G"], Omega=mats["Omega"])
        return KahlerTriple(stats, t.n_modes, t.G, t.Omega, mats["J"], Convention.QP, t.compatible)
    return complete_triple(stats, **mats)


# ---------------------------------------------------------------------------
# states


def state_to_dict(state) -> dict:
    if isinstance(state, MixedGaussianState) and not state.is_pure:
        return {"stats": state.stats.value, "N": state.n_modes, "convention": "QP", "mixed": True, "q": state.q, "z": state.z}
    return {"stats": state.stats.value, "N": state.n_modes, "convention": "QP", "J": state.J, "z": state.z}


def state_from_dict(data: dict):
    stats = Statistics.parse(data["stats"])
    conv = Convention.parse(data.get("convention", "QP"))
    z = data.get("z")
    if z is not None:
        z = np.asarray(z, dtype=float)
    if data.get("mixed") or "q" in data:
        q = _matrix(data["q"], "q")
        if conv is Convention.AADAG:
            q = _from_aadag(q, "form")
        st = mixed_from_q(stats, _real(q, "q"), z)
    else:
        J = _matrix(data["J"], "J")
        if conv is Convention.AADAG:
            J = _from_aadag(J, "map")
        st = pure_state(stats, _real(J, "J"), z)
    if "N" in data and st.n_modes != int(data["N"]):
        raise DimensionMismatch("state size disagrees with N")
    return st


def read_state(path: str):
    return state_from_dict(read_json(path))


def write_state(path: str, state) -> None:
    write_json(path, state_to_dict(state))


# ---------------------------------------------------------------------------
# Hamiltonians and presets


def chain_laplacian(N: int, periodic: bool = False) -> np.ndarray:
    L = np.zeros((N, N))
    bonds = [(i, i + 1) for i in range(N - 1)]
    if periodic and N > 2:
        bonds.append((N - 1, 0))
    for i, j in bonds:
        L[i, i] += 1
        L[j, j] += 1
        L[i, j] -= 1
        L[j, i] -= 1
    return L


def harmonic_chain_h(N: int, omega: float, coupling: float, periodic: bool = False) -> np.ndarray:
    I = np.eye(N)
    Z = np.zeros((N, N))
    return np.block([[omega**2 * I + coupling * chain_laplacian(N, periodic), Z], [Z, I]])


def harmonic_chain(
    N: int,
    omega: float,
    coupling: float = 0.0,
    quench: Optional[dict] = None,
    ramp: Optional[dict] = None,
    periodic: bool = False,
) -> DrivenHamiltonian:
    if N < 1 or omega <= 0:
        raise ValidationError("harmonic_chain needs N >= 1 and omega > 0")
    zero_f = np.zeros(2 * N)
    if quench is not None and ramp is not None:
        raise ValidationError("choose either a quench or a ramp")
    if ramp is not None:
        rate = float(ramp["rate"])

        def w_of(t):
            return omega * (1.0 + rate * t)

        def sampler(t):
            return harmonic_chain_h(N, w_of(t), coupling, periodic), zero_f

        def derivative(t, k):
            # d^k/dt^k of omega(t)^2 on the q block
            w, dw = w_of(t), omega * rate
            val = {1: 2 * w * dw, 2: 2 * dw * dw}.get(k, 0.0)
            h = np.zeros((2 * N, 2 * N))
            h[:N, :N] = val * np.eye(N)
            return h, zero_f

        return DrivenHamiltonian(BOSON, N, sampler, derivative)
    if quench is not None:
        t0 = float(quench.get("t0", 0.0))
        w2 = float(quench["omega2"])
        if w2 <= 0:
            raise ValidationError("omega2 must be positive")
        h1 = harmonic_chain_h(N, omega, coupling, periodic)
        h2 = harmonic_chain_h(N, w2, coupling, periodic)
        zero_h = np.zeros_like(h1)

        def sampler(t):
            return (h2 if t >= t0 else h1), zero_f

        def derivative(t, k):
            return ((h2 if t >= t0 else h1), zero_f) if k == 0 else (zero_h, zero_f)

        return DrivenHamiltonian(BOSON, N, sampler, derivative)
    return constant_driven(hamiltonian(BOSON, harmonic_chain_h(N, omega, coupling, periodic), zero_f))


def kitaev_chain_h(N: int, mu: float, J: float, Delta: float) -> np.ndarray:
    """Majorana-form h of the Kitaev chain (see module docstring)."""
    A = -mu * np.eye(N)
    B = np.zeros((N, N))
    for i in range(N - 1):
        A[i, i + 1] = A[i + 1, i] = -J
        # Delta (c_i c_{i+1} + c_{i+1}^+ c_i^+) = (1/2) sum B_ij c_i^+ c_j^+ + h.c.
        B[i + 1, i] = Delta
        B[i, i + 1] = -Delta
    I = np.eye(N)
    # c_j = v[j] . xi, c_j^+ = conj(v[j]) . xi
    v = np.hstack([I, 1j * I]) / np.sqrt(2.0)
    vc = v.conj()
    M = vc.T @ A @ v + 0.5 * vc.T @ B @ vc + 0.5 * v.T @ B.conj().T @ v
    # xi^a xi^b = [xi^a, xi^b]/2 + delta_ab/2 for G = 1, so only the antisymmetric part survives
    Ma = (M - M.T) / 2
    h = -2j * Ma
    return np.real_if_close(h, tol=1e6).real


def kitaev_chain(N: int, mu: float, J: float, Delta: float) -> DrivenHamiltonian:
    if N < 1:
        raise ValidationError("kitaev_chain needs N >= 1")
    return constant_driven(hamiltonian(FERMION, kitaev_chain_h(N, mu, J, Delta)))


def driven_from_dict(data: dict, stats=None) -> DrivenHamiltonian:
    """Hamiltonian file: {"h", "f"[, "stats", "c0"]} or a model preset."""
    model = data.get("model")
    if model == "harmonic_chain":
        return harmonic_chain(
            int(data["N"]),
            float(data["omega"]),
            float(data.get("coupling", 0.0)),
            data.get("quench"),
            data.get("ramp"),
            data.get("boundary", "open") == "periodic",
        )
    if model == "kitaev_chain":
        return kitaev_chain(int(data["N"]), float(data["mu"]), float(data["J"]), float(data["Delta"]))
    if model is not None:
        raise ValidationError(f"unknown model preset {model!r}")
    st = Statistics.parse(data.get("stats", stats if stats is not None else "boson"))
    H = hamiltonian(st, _matrix(data["h"], "h"), data.get("f"), float(data.get("c0", 0.0)))
    return constant_driven(H)


def read_hamiltonian(path: str, stats=None) -> DrivenHamiltonian:
    return driven_from_dict(read_json(path), stats)


def hamiltonian_to_dict(H: QuadraticHamiltonian) -> dict:
    return {"stats": H.stats.value, "h": H.h, "f": H.f, "c0": H.c0}


# ---------------------------------------------------------------------------
# CSV


def write_csv(fh, header: Sequence[str], rows: Iterable[Sequence[float]], comment: Optional[str] = None) -> None:
    """CSV with an optional leading ``# ...`` comment line and 17-digit floats."""
    if comment:
        fh.write(f"# {comment}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


def csv_text(header, rows, comment=None) -> str:
    buf = _io.StringIO()
    write_csv(buf, header, rows, comment)
    return buf.getvalue()


def initial_hamiltonian(data: dict, t0: float = 0.0) -> QuadraticHamiltonian:
    """Hamiltonian whose ground state is the default initial state at t0.

    For a quench preset with t0 not after the quench time this is the
    pre-quench chain; otherwise it is H(t0).
    """
    if data.get("model") == "harmonic_chain" and data.get("quench") is not None:
        q = data["quench"]
        if t0 <= float(q.get("t0", 0.0)):
            N = int(data["N"])
            h = harmonic_chain_h(N, float(data["omega"]), float(data.get("coupling", 0.0)), data.get("boundary", "open") == "periodic")
            return hamiltonian(BOSON, h, np.zeros(2 * N))
    return driven_from_dict(data).at(t0)
