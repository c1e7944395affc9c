"""Exhaustive minimization over deterministic local-hidden-variable strategies.

A deterministic strategy fixes an outcome ``v_i[a] = +-1`` for every party and
setting. Writing ``w_i = exp(i phi_i) sum_a v_i[a] exp(i pi a / k)`` the Bell
value is ``(2/k) (|sum_i w_i|^2 - sum_i |w_i|^2)``, so with zero phases it only
depends on how many parties use each of the ``2^k`` local vectors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bellspec import BellSpec, CorrelatorTable

DEFAULT_BUDGET = 10**8
TIE_TOL = 1e-12


def class_vectors(k: int) -> np.ndarray:
    """All ``2^k`` local outcome vectors; row order is lexicographic with -1 < +1."""
    bits = (np.arange(2**k)[:, None] >> np.arange(k - 1, -1, -1)[None, :]) & 1
    return 2 * bits - 1


def _check_strategy(s, spec: BellSpec) -> np.ndarray:
    s = np.asarray(s)
    if s.shape != (spec.n, spec.k):
        raise ValueError(f"strategy shape {s.shape} != {(spec.n, spec.k)}")
    if not np.all(np.abs(s) == 1):
        raise ValueError("strategy entries must be exactly +1 or -1")
    return s.astype(int)


def _amplitudes(s: np.ndarray, spec: BellSpec) -> np.ndarray:
    u = np.exp(1j * np.pi * np.arange(spec.k) / spec.k)
    return np.exp(1j * np.asarray(spec.phases)) * (s @ u)


def strategy_value(s, spec: BellSpec) -> float:
    s = _check_strategy(s, spec)
    w = _amplitudes(s, spec)
    return float((2 / spec.k) * (abs(w.sum()) ** 2 - np.sum(np.abs(w) ** 2)))


def deterministic_table(s, spec: BellSpec) -> CorrelatorTable:
    s = _check_strategy(s, spec)
    values = np.einsum("ia,jb->ijab", s, s).astype(float)
    return CorrelatorTable(spec.n, spec.k, values)


@dataclass(frozen=True)
class LhvResult:
    min_value: float
    witness: np.ndarray
    enumerated: int
    complete: bool

    def to_dict(self) -> dict:
        return {
            "min_value": self.min_value,
            "witness": self.witness.tolist(),
            "enumerated": self.enumerated,
            "complete": self.complete,
        }


def count_classes(spec: BellSpec) -> int:
    """Number of strategy classes ``brute_force_min`` has to visit."""
    if spec.has_phases:
        return 2 ** (spec.n * spec.k)
    return math.comb(spec.n + 2**spec.k - 1, spec.n)


def brute_force_min(spec: BellSpec, budget: int = DEFAULT_BUDGET) -> LhvResult:
    """Exact minimum of the Bell value over deterministic strategies.

    Zero phases: multisets of local vectors (the value is permutation
    invariant). Nonzero phases: all ordered strategies. Both enumerations run in
    lexicographic order, so the first minimizer found is the lexicographically
    smallest one. If the class count exceeds ``budget`` the search stops there
    and the result is flagged incomplete.
    """
    vecs = class_vectors(spec.k)
    u = np.exp(1j * np.pi * np.arange(spec.k) / spec.k)
    z = vecs @ u
    q = np.abs(z) ** 2
    scale = 2 / spec.k
    if spec.has_phases:
        rot = np.exp(1j * np.asarray(spec.phases))
        classes = itertools.product(range(len(vecs)), repeat=spec.n)
    else:
        rot = np.ones(spec.n)
        classes = itertools.combinations_with_replacement(range(len(vecs)), spec.n)

    best, best_idx, visited = math.inf, None, 0
    for chunk in _chunks(classes, 1 << 16, budget):
        idx = np.array(chunk)
        w = z[idx] * rot
        vals = scale * (np.abs(w.sum(axis=1)) ** 2 - q[idx].sum(axis=1))
        visited += len(idx)
        pos = int(np.argmin(vals))
        # earlier chunks win ties, and argmin returns the first index inside a chunk
        if vals[pos] < best - TIE_TOL:
            lowest = np.flatnonzero(vals <= vals[pos] + TIE_TOL)[0]
            best, best_idx = float(vals[lowest]), idx[lowest]
    return LhvResult(
        min_value=best,
        witness=vecs[best_idx],
        enumerated=visited,
        complete=visited >= count_classes(spec),
    )


def _chunks(it, size, budget):
    remaining = budget
    while remaining > 0:
        chunk = list(itertools.islice(it, min(size, remaining)))
        if not chunk:
            return
        remaining -= len(chunk)
        yield chunk
