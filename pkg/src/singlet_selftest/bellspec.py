"""The permutation-invariant chained Bell expression and its bounds.

The expression is

    B = (2/k) sum_{a,b} sum_{i != j} <s_a^(i) s_b^(j)> cos(pi (a - b)/k + phi_i - phi_j)

with all phases zero in the standard form.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SYMMETRY_TOL = 1e-12
LOAD_SYMMETRY_TOL = 1e-9
RANGE_TOL = 1e-9
DEFICIT_FLOOR = -1e-9


class QuantumBoundViolation(ArithmeticError):
    """A Bell value fell below -nk by more than the numerical floor."""


@dataclass(frozen=True)
class BellSpec:
    n: int
    k: int
    phases: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least two parties, got n={self.n}")
        if self.k < 3:
            raise ValueError(f"need k >= 3 settings per party, got k={self.k}")
        phases = tuple(float(p) for p in self.phases) if self.phases else (0.0,) * self.n
        if len(phases) != self.n:
            raise ValueError(f"{len(phases)} phases given for {self.n} parties")
        if not all(math.isfinite(p) for p in phases):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "phases", phases)

    @property
    def has_phases(self) -> bool:
        return any(p != 0.0 for p in self.phases)

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "phases": list(self.phases)}

    @classmethod
    def from_dict(cls, d: dict) -> BellSpec:
        return cls(int(d["n"]), int(d["k"]), tuple(d.get("phases") or ()))


class BellMatrix(NamedTuple):
    m: np.ndarray
    c: np.ndarray
    s: np.ndarray


def bell_matrix(k: int) -> BellMatrix:
    """``M_ab = (2/k) cos(pi (a - b)/k)`` and its two unit eigenvectors ``c``, ``s``."""
    if k < 3:
        raise ValueError(f"need k >= 3, got {k}")
    a = np.arange(k)
    m = (2 / k) * np.cos(np.pi * (a[:, None] - a[None, :]) / k)
    c = np.sqrt(2 / k) * np.cos(a * np.pi / k)
    s = np.sqrt(2 / k) * np.sin(a * np.pi / k)
    return BellMatrix(m, c, s)


def pair_weights(spec: BellSpec) -> np.ndarray:
    """Coefficient of ``<s_a^(i) s_b^(j)>`` in B, shape (n, n, k, k), zero for i == j."""
    n, k = spec.n, spec.k
    a = np.arange(k)
    phi = np.asarray(spec.phases)
    angle = (
        np.pi * (a[None, None, :, None] - a[None, None, None, :]) / k
        + phi[:, None, None, None]
        - phi[None, :, None, None]
    )
    w = (2 / k) * np.cos(angle)
    w[np.arange(n), np.arange(n)] = 0.0
    return w


@dataclass(frozen=True)
class CorrelatorTable:
    """Pairwise correlators ``values[i, j, a, b] = <s_a^(i) s_b^(j)>`` for i != j.

    Diagonal blocks ``values[i, i]`` are unused and held at zero.
    """

    n: int
    k: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.n, self.n, self.k, self.k):
            raise ValueError(f"table shape {v.shape} != {(self.n, self.n, self.k, self.k)}")
        if not np.all(np.isfinite(v)):
            raise ValueError("table contains non-finite values")
        idx = np.arange(self.n)
        v[idx, idx] = 0.0
        if np.max(np.abs(v)) > 1 + RANGE_TOL:
            raise ValueError(f"correlator out of [-1, 1]: {np.max(np.abs(v))}")
        asym = np.max(np.abs(v - v.transpose(1, 0, 3, 2)))
        if asym > SYMMETRY_TOL:
            raise ValueError(f"table is not symmetric under (i,j,a,b)->(j,i,b,a): {asym}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, n: int, k: int) -> CorrelatorTable:
        return cls(n, k, np.zeros((n, n, k, k)))

    def permuted(self, perm) -> CorrelatorTable:
        """Relabel parties: new party ``p`` is old party ``perm[p]``."""
        perm = list(perm)
        return CorrelatorTable(self.n, self.k, self.values[np.ix_(perm, perm)])

    def to_json_dict(self, spec: BellSpec | None = None) -> dict:
        out: dict = {"n": self.n, "k": self.k}
        if spec is not None:
            out["phases"] = list(spec.phases)
        out["values"] = [
            {"i": i, "j": j, "a": a, "b": b, "v": float(self.values[i, j, a, b])}
            for i in range(self.n)
            for j in range(self.n)
            if i != j
            for a in range(self.k)
            for b in range(self.k)
        ]
        return out


def table_from_json_dict(d: dict) -> tuple[CorrelatorTable, BellSpec]:
    """Parse the JSON table schema, completing (j,i,b,a) entries by symmetry."""
    n, k = int(d["n"]), int(d["k"])
    spec = BellSpec(n, k, tuple(d.get("phases") or ()))
    values = np.full((n, n, k, k), np.nan)
    for e in d["values"]:
        i, j, a, b = (int(e[key]) for key in "ijab")
        if i == j or not (0 <= i < n and 0 <= j < n and 0 <= a < k and 0 <= b < k):
            raise ValueError(f"invalid table index {(i, j, a, b)}")
        values[i, j, a, b] = float(e["v"])
    swapped = values.transpose(1, 0, 3, 2)
    both = ~np.isnan(values) & ~np.isnan(swapped)
    if np.any(np.abs(values[both] - swapped[both]) > LOAD_SYMMETRY_TOL):
        raise ValueError("inconsistent entries (i,j,a,b) and (j,i,b,a)")
    values = np.where(np.isnan(values), swapped, values)
    idx = np.arange(n)
    values[idx, idx] = 0.0
    missing = np.argwhere(np.isnan(values))
    if missing.size:
        raise ValueError(f"missing correlator entries, first {tuple(missing[0])}")
    # symmetrize away sub-tolerance mismatches before strict validation
    values = (values + values.transpose(1, 0, 3, 2)) / 2
    return CorrelatorTable(n, k, values), spec


def load_table(path) -> tuple[CorrelatorTable, BellSpec]:
    with open(path) as fh:
        return table_from_json_dict(json.load(fh))


def dump_table(table: CorrelatorTable, path, spec: BellSpec | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(table.to_json_dict(spec), fh)


@dataclass(frozen=True)
class BellValue:
    value: float
    spec: BellSpec


def bell_value(table: CorrelatorTable, spec: BellSpec) -> BellValue:
    if (table.n, table.k) != (spec.n, spec.k):
        raise ValueError(
            f"table (n={table.n}, k={table.k}) does not match spec (n={spec.n}, k={spec.k})"
        )
    value = float(np.einsum("ijab,ijab->", pair_weights(spec), table.values))
    return BellValue(value, spec)


def classical_bound(spec: BellSpec) -> float:
    """Local-hidden-variable minimum ``-2n / (k sin^2(pi/2k))`` (even n, zero phases)."""
    if spec.n % 2:
        raise ValueError("closed-form classical bound needs an even number of parties")
    if spec.has_phases:
        raise ValueError("no closed-form classical bound with nonzero phases; use lhv")
    return -2 * spec.n / (spec.k * math.sin(math.pi / (2 * spec.k)) ** 2)


def quantum_bound(spec: BellSpec) -> float:
    return -float(spec.n * spec.k)


def violation_deficit(b: BellValue) -> float:
    """Normalized distance to the quantum bound, ``(B + nk)/(nk)``."""
    nk = b.spec.n * b.spec.k
    eps = (b.value + nk) / nk
    if eps < DEFICIT_FLOOR:
        raise QuantumBoundViolation(
            f"Bell value {b.value} is below the quantum bound {-nk} (eps={eps:.3e})"
        )
    if eps < 0:
        if eps < -1e-12:
            warnings.warn(f"clipping negative deficit {eps:.3e} to 0", RuntimeWarning)
        eps = 0.0
    return eps
