"""Global numeric policy: one record holding every tolerance and threshold.

The active policy can be replaced process-wide with :func:`set_policy`,
temporarily with :func:`use_policy`, or from a JSON file named by the
``GAUSSK_NUM_POLICY`` environment variable.
"""

from __future__ import annotations

import contextlib
import dataclasses
import json
import os
from dataclasses import dataclass
from typing import Iterator

ENV_VAR = "GAUSSK_NUM_POLICY"


@dataclass(frozen=True)
class NumericPolicy:
    structure_tol: float = 1e-10
    decomposition_tol: float = 1e-9
    cond_max: float = 1e10
    series_threshold: float = 1e-4
    clip_band: float = 1e-9
    boson_cutoff: int = 14
    truncation_tol: float = 1e-8
    fd_max_order: int = 4
    complex_structure_band: float = 1e-2
    fermion_max_modes: int = 12
    boson_max_dim: int = 20000

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_mapping(cls, data: dict) -> "NumericPolicy":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown numeric policy keys: {sorted(unknown)}")
        return dataclasses.replace(cls(), **data)

    @classmethod
    def from_file(cls, path: str) -> "NumericPolicy":
        with open(path, encoding="utf-8") as fh:
            return cls.from_mapping(json.load(fh))


def _initial() -> NumericPolicy:
    path = os.environ.get(ENV_VAR)
    if path:
        return NumericPolicy.from_file(path)
    return NumericPolicy()


_active = _initial()


def get_policy() -> NumericPolicy:
    return _active


def set_policy(policy: NumericPolicy) -> None:
    global _active
    _active = policy


@contextlib.contextmanager
def use_policy(policy: NumericPolicy | None = None, **overrides) -> Iterator[NumericPolicy]:
    base = policy if policy is not None else get_policy()
    new = dataclasses.replace(base, **overrides)
    old = get_policy()
    set_policy(new)
    try:
        yield new
    finally:
        set_policy(old)
