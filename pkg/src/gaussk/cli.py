"""Command-line front end.

Exit codes: 0 success, 1 I/O problems, 2 invalid input, 3 numeric-policy
violations (including a failed ``verify``).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

import numpy as np

from . import dynamics as dyn
from . import entanglement as ent
from . import io as gio
from .errors import GaussKError, ValidationError
from .kahler import BOSON, FERMION, KahlerTriple, validate_identities
from .policy import NumericPolicy, get_policy, use_policy
from .states import number_expectation, vacuum

COMMANDS = ("check", "ground", "evolve", "entropy", "complexity", "adiabatic", "verify")


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    dt: Optional[float] = None

    @classmethod
    def parse(cls, text: str) -> "TimeGrid":
        parts = text.split(":")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise ValidationError(f"bad time specification {text!r}") from exc
        if len(vals) == 1:
            return cls(vals[0], vals[0], None)
        if len(vals) != 3:
            raise ValidationError("time grid must be T or t0:t1:dt")
        t0, t1, dt = vals
        if dt <= 0 or t1 < t0:
            raise ValidationError("time grid needs dt > 0 and t1 >= t0")
        return cls(t0, t1, dt)

    @property
    def is_grid(self) -> bool:
        return self.dt is not None

    def points(self) -> np.ndarray:
        if not self.is_grid:
            return np.array([self.t0])
        return dyn.time_grid(self.t0, self.t1, self.dt)


@dataclass(frozen=True)
class RunConfig:
    command: str
    hamiltonian: Optional[str] = None
    state: Optional[str] = None
    reference: Optional[str] = None
    subsystems: tuple = ()
    time: Optional[TimeGrid] = None
    order: int = 0
    out: Optional[str] = None
    modes: int = 3
    cutoff: Optional[int] = None
    seed: int = 0
    policy: NumericPolicy = field(default_factory=get_policy)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.order < 0:
            raise ValidationError("order must be >= 0")


def _policy_from_args(path: Optional[str], sets: Sequence[str]) -> NumericPolicy:
    pol = NumericPolicy.from_file(path) if path else get_policy()
    updates = {}
    names = {f.name: f.type for f in dataclasses.fields(NumericPolicy)}
    for item in sets:
        if "=" not in item:
            raise ValidationError(f"policy override {item!r} is not key=value")
        key, val = item.split("=", 1)
        if key not in names:
            raise ValidationError(f"unknown policy key {key!r}")
        cur = getattr(pol, key)
        updates[key] = int(val) if isinstance(cur, int) else float(val)
    return dataclasses.replace(pol, **updates)


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    p = argparse.ArgumentParser(prog="gaussk", description="Gaussian states through their Kahler structures.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--hamiltonian", help="Hamiltonian JSON or model preset")
    p.add_argument("--state", help="state (or triple) JSON")
    p.add_argument("--reference", help="reference state JSON for complexity")
    p.add_argument("--A", action="append", default=[], metavar="MODES", help="subsystem as a comma list, e.g. 0,1,4 (repeatable)")
    p.add_argument("--t", dest="time", help="time T or grid t0:t1:dt")
    p.add_argument("--order", type=int, default=0)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--modes", type=int, default=3)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", help="numeric policy JSON")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="numeric policy override")
    a = p.parse_args(argv)
    return RunConfig(
        command=a.command,
        hamiltonian=a.hamiltonian,
        state=a.state,
        reference=a.reference,
        subsystems=tuple(ent.SubsystemSpec.parse(s) for s in a.A),
        time=TimeGrid.parse(a.time) if a.time else None,
        order=a.order,
        out=a.out,
        modes=a.modes,
        cutoff=a.cutoff,
        seed=a.seed,
        policy=_policy_from_args(a.policy, a.set),
    )


def _need(value, flag: str):
    if value is None:
        raise ValidationError(f"{flag} is required for this command")
    return value


def _emit(cfg: RunConfig, text: str, stdout: TextIO) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _label(spec: ent.SubsystemSpec) -> str:
    return "-".join(str(i) for i in spec.mode_indices)


def _policy_comment(cfg: RunConfig) -> str:
    return "policy " + cfg.policy.to_json()


# ---------------------------------------------------------------------------
# commands


def _cmd_check(cfg: RunConfig, stdout) -> int:
    data = gio.read_json(_need(cfg.state, "--state"))
    lines = []
    if "G" in data or "Omega" in data:
        triple = gio.triple_from_dict(data)
    else:
        st = gio.state_from_dict(data)
        triple = st.triple
        lines.append(f"state: {st.stats.value} N={st.n_modes} pure={st.is_pure}")
    if triple.compatible:
        report = validate_identities(triple)
        lines += report.lines()
        worst = report.max_residual
        tol = report.tol
    else:
        worst = triple.complex_structure_residual()
        tol = cfg.policy.structure_tol
        lines.append(f"J^2 + 1 (mixed structure): {worst:.3e}")
    ok = worst <= tol
    lines.append(f"max residual {worst:.3e} tol {tol:.1e} {'OK' if ok else 'VIOLATED'}")
    _emit(cfg, "\n".join(lines) + "\n", stdout)
    return 0 if ok else 2


def _cmd_ground(cfg: RunConfig, stdout) -> int:
    Hd = gio.read_hamiltonian(_need(cfg.hamiltonian, "--hamiltonian"))
    t = cfg.time.t0 if cfg.time else 0.0
    H = Hd.at(t)
    gs = dyn.ground_state(H, t)
    out = {
        "stats": H.stats.value,
        "N": H.n_modes,
        "t": t,
        "E0": dyn.vacuum_energy(H),
        "energies": dyn.single_particle_energies(H),
        "J": gs.J,
        "z": gs.z,
    }
    _emit(cfg, gio.dumps(out), stdout)
    return 0


def _initial_state(cfg: RunConfig, t0: float):
    if cfg.state:
        return gio.read_state(cfg.state)
    data = gio.read_json(_need(cfg.hamiltonian, "--hamiltonian"))
    return dyn.ground_state(gio.initial_hamiltonian(data, t0), t0)


def _cmd_evolve(cfg: RunConfig, stdout) -> int:
    grid = _need(cfg.time, "--t")
    if not grid.is_grid:
        raise ValidationError("evolve needs a grid t0:t1:dt")
    Hd = gio.read_hamiltonian(_need(cfg.hamiltonian, "--hamiltonian"))
    st0 = _initial_state(cfg, grid.t0)
    ref = gio.read_state(cfg.reference) if cfg.reference else st0
    res = dyn.evolve_driven(st0, Hd, grid.t0, grid.t1, grid.dt)
    header = ["t", "E"]
    for spec in cfg.subsystems:
        header += [f"S_{_label(spec)}", f"R2_{_label(spec)}"]
    header.append("complexity")
    rows = []
    for t, s in zip(res.times, res.states):
        row = [float(t), dyn.energy(s, Hd.at(float(t)))]
        for spec in cfg.subsystems:
            row += [ent.entanglement_entropy(s, spec), ent.renyi2(s, spec)]
        row.append(ent.circuit_complexity(s.J, ref.J, s.stats, s.triple.fixed))
        rows.append(row)
    _emit(cfg, gio.csv_text(header, rows, _policy_comment(cfg)), stdout)
    return 0


def _cmd_entropy(cfg: RunConfig, stdout) -> int:
    st = gio.read_state(_need(cfg.state, "--state"))
    specs = cfg.subsystems or (ent.SubsystemSpec.parse([0]),)
    header = ["subsystem", "S", "R2"]
    fermion = st.stats is FERMION
    if fermion:
        header += ["S_lower_m1", "S_upper_m1"]
    rows = []
    for spec in specs:
        row = [_label(spec), ent.entanglement_entropy(st, spec), ent.renyi2(st, spec)]
        if fermion:
            lo, hi = ent.fermion_entropy_bounds_state(st, spec, 1)
            row += [lo, hi]
        rows.append(row)
    _emit(cfg, gio.csv_text(header, rows, _policy_comment(cfg)), stdout)
    return 0


def _cmd_complexity(cfg: RunConfig, stdout) -> int:
    st = gio.read_state(_need(cfg.state, "--state"))
    ref = gio.read_state(cfg.reference) if cfg.reference else vacuum(st.stats, st.n_modes)
    c = ent.circuit_complexity(st.J, ref.J, st.stats, st.triple.fixed)
    _emit(cfg, gio.csv_text(["complexity"], [[c]], _policy_comment(cfg)), stdout)
    return 0


def _cmd_adiabatic(cfg: RunConfig, stdout) -> int:
    Hd = gio.read_hamiltonian(_need(cfg.hamiltonian, "--hamiltonian"))
    grid = cfg.time or TimeGrid(0.0, 0.0)
    m = cfg.order
    if not grid.is_grid:
        t = grid.t0
        av = dyn.adiabatic_vacuum(Hd, t, m)
        st = gio.read_state(cfg.state) if cfg.state else dyn.ground_state(Hd.at(t), t)
        out = {
            "t": t,
            "order": m,
            "J_m": av.J_raw,
            "J_pure": av.state.J,
            "z_m": av.z,
            "complex_structure_residual": av.complex_structure_residual,
            "delta_E": dyn.vacuum_subtraction(st, Hd, t, m),
        }
        _emit(cfg, gio.dumps(out), stdout)
        return 0
    st0 = gio.read_state(cfg.state) if cfg.state else dyn.adiabatic_vacuum(Hd, grid.t0, m).state
    res = dyn.evolve_driven(st0, Hd, grid.t0, grid.t1, grid.dt)
    rows = []
    for t, s in zip(res.times, res.states):
        av = dyn.adiabatic_vacuum(Hd, float(t), m)
        H = Hd.at(float(t))
        dE = dyn.energy(s, H) - dyn.energy_of(av.J_raw, av.z, H)
        rows.append([float(t), dE, number_expectation(s, av.state)])
    _emit(cfg, gio.csv_text(["t", "delta_E", "N_exc"], rows, _policy_comment(cfg)), stdout)
    return 0


def _cmd_verify(cfg: RunConfig, stdout) -> int:
    from .verify import run_verify

    report = run_verify(cfg.modes, cfg.cutoff, cfg.seed)
    _emit(cfg, report.text(), stdout)
    return 0 if report.passed else 3


_DISPATCH = {
    "check": _cmd_check,
    "ground": _cmd_ground,
    "evolve": _cmd_evolve,
    "entropy": _cmd_entropy,
    "complexity": _cmd_complexity,
    "adiabatic": _cmd_adiabatic,
    "verify": _cmd_verify,
}


def run(cfg: RunConfig, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        with use_policy(cfg.policy):
            return _DISPATCH[cfg.command](cfg, stdout)
    except GaussKError as exc:
        stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        stderr.write(f"error: {exc}\n")
        return 1
    except (ValueError, KeyError, TypeError) as exc:
        stderr.write(f"error: invalid input: {exc}\n")
        return 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_args(argv)
    except GaussKError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
