"""Finite-statistics simulation of the experiment and a plug-in Bell estimator.

Every round draws an independent uniform setting per party and a joint
outcome from the exact product-measurement distribution. Randomness comes from
Philox keyed by the seed, with round ``r`` consuming counter blocks
``[r m, (r + 1) m)``, so any slice of rounds can be regenerated independently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import hilbert
from .bellspec import BellSpec, CorrelatorTable, bell_value, pair_weights
from .hilbert import QuantumState


class RoundRecord(NamedTuple):
    settings: tuple[int, ...]
    outcomes: tuple[int, ...]


class EmptyCellError(ValueError):
    """Some (i, j, a, b) correlator cell has no samples."""


def _uniforms(seed: int, start: int, rounds: int, per_round: int) -> np.ndarray:
    blocks = math.ceil(per_round / 4)
    gen = np.random.Philox(key=seed, counter=start * blocks)
    raw = gen.random_raw(rounds * blocks * 4).reshape(rounds, blocks * 4)[:, :per_round]
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _outcome_distribution(state: QuantumState, thetas) -> np.ndarray:
    """Probabilities of the 2^n outcome bit strings (bit 0 means outcome +1)."""
    for i, t in enumerate(thetas):
        # rotate the +1 eigenvector of Z cos t + X sin t onto |0>
        rot = np.cos(t / 2) * np.eye(2) + 1j * np.sin(t / 2) * hilbert.Y
        state = hilbert.apply_local(state, rot, [i])
    if state.is_pure:
        p = np.abs(state.data) ** 2
    else:
        p = np.real(np.diag(state.data))
    p = np.clip(p, 0, None)
    return p / p.sum()


def _bits(idx: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1)
    return (idx[:, None] >> shifts[None, :]) & 1


def sample_arrays(
    state: QuantumState,
    angles,
    rounds: int,
    seed: int,
    start: int = 0,
    fixed_settings=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Settings (int, shape (rounds, n)) and outcomes (+-1) for rounds ``start .. start+rounds``."""
    hilbert.require_qubits(state.dims)
    if rounds < 1:
        raise ValueError("need at least one round")
    n = state.n
    angles = np.asarray(angles, dtype=float)
    if angles.ndim != 2 or angles.shape[0] != n:
        raise hilbert.DimensionError(f"angles {angles.shape} for {n} parties")
    k = angles.shape[1]
    u = _uniforms(seed, start, rounds, n + 1)
    if fixed_settings is None:
        settings = np.minimum((u[:, :n] * k).astype(int), k - 1)
    else:
        fixed = np.asarray(fixed_settings, dtype=int)
        if fixed.shape != (n,) or np.any((fixed < 0) | (fixed >= k)):
            raise ValueError(f"fixed settings must be {n} indices in [0, {k})")
        settings = np.tile(fixed, (rounds, 1))
    outcome_idx = np.zeros(rounds, dtype=np.int64)
    keys = settings @ (k ** np.arange(n - 1, -1, -1))
    for key in np.unique(keys):
        rows = np.flatnonzero(keys == key)
        s = settings[rows[0]]
        cdf = np.cumsum(_outcome_distribution(state, angles[np.arange(n), s]))
        idx = np.searchsorted(cdf, u[rows, n], side="right")
        outcome_idx[rows] = np.minimum(idx, 2**n - 1)
    outcomes = 1 - 2 * _bits(outcome_idx, n)
    return settings, outcomes


def _to_records(settings: np.ndarray, outcomes: np.ndarray) -> list[RoundRecord]:
    return [
        RoundRecord(tuple(map(int, s)), tuple(map(int, o)))
        for s, o in zip(settings, outcomes)
    ]


def _to_arrays(records) -> tuple[np.ndarray, np.ndarray]:
    if not records:
        return np.zeros((0, 0), dtype=int), np.zeros((0, 0), dtype=int)
    settings = np.array([r.settings for r in records], dtype=int)
    outcomes = np.array([r.outcomes for r in records], dtype=int)
    return settings, outcomes


def sample_rounds(
    state: QuantumState, angles, rounds: int, seed: int, fixed_settings=None
) -> list[RoundRecord]:
    return _to_records(*sample_arrays(state, angles, rounds, seed, fixed_settings=fixed_settings))


def strategy_rounds(strategy, rounds: int, seed: int) -> list[RoundRecord]:
    """Rounds produced by a deterministic local strategy ``strategy[i][a] = +-1``."""
    s = np.asarray(strategy, dtype=int)
    n, k = s.shape
    u = _uniforms(seed, 0, rounds, n)
    settings = np.minimum((u * k).astype(int), k - 1)
    outcomes = s[np.arange(n)[None, :], settings]
    return _to_records(settings, outcomes)


@dataclass(frozen=True)
class EstimateReport:
    table_hat: CorrelatorTable
    counts: np.ndarray  # (n, n, k, k), symmetric, zero on i == j
    bell_hat: float
    stderr: float
    rounds_used: int

    def to_dict(self) -> dict:
        return {
            "bell_hat": self.bell_hat,
            "stderr": self.stderr,
            "rounds_used": self.rounds_used,
            "table_hat": self.table_hat.to_json_dict(),
            "counts": self.counts.astype(int).tolist(),
        }


def estimate(records, spec: BellSpec) -> EstimateReport:
    """Cell means, plug-in Bell value and a first-order standard error.

    The error treats the cells as independent binomial means; cells filled by
    the same round are in fact correlated, so the figure is approximate.
    """
    settings, outcomes = records if isinstance(records, tuple) else _to_arrays(records)
    n, k = spec.n, spec.k
    if len(settings) == 0:
        raise EmptyCellError("no rounds recorded; every correlator cell is empty")
    if settings.shape[1] != n or outcomes.shape != settings.shape:
        raise ValueError(f"records have {settings.shape[1]} parties, spec has n={n}")
    if np.any((settings < 0) | (settings >= k)):
        raise ValueError(f"setting index outside [0, {k})")
    if np.any(np.abs(outcomes) != 1):
        raise ValueError("outcomes must be +1 or -1")
    counts = np.zeros((n, n, k, k))
    means = np.zeros((n, n, k, k))
    for i in range(n):
        for j in range(i + 1, n):
            cell = settings[:, i] * k + settings[:, j]
            c = np.bincount(cell, minlength=k * k).reshape(k, k)
            sums = np.bincount(cell, weights=outcomes[:, i] * outcomes[:, j], minlength=k * k)
            if np.any(c == 0):
                a, b = np.argwhere(c == 0)[0]
                raise EmptyCellError(f"no samples for cell (i={i}, j={j}, a={a}, b={b})")
            m = sums.reshape(k, k) / c
            counts[i, j], counts[j, i] = c, c.T
            means[i, j], means[j, i] = m, m.T
    table = CorrelatorTable(n, k, means)
    w = pair_weights(spec)
    iu = np.triu_indices(n, 1)
    var = (1 - means[iu] ** 2) / counts[iu]
    stderr = math.sqrt(float(np.sum((2 * w[iu]) ** 2 * var)))
    return EstimateReport(table, counts, bell_value(table, spec).value, stderr, len(settings))


# --- JSONL persistence ----------------------------------------------------------------


def write_rounds(records, path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps({"s": list(r.settings), "o": list(r.outcomes)}) + "\n")


def read_rounds(path) -> list[RoundRecord]:
    """Parse a JSONL round file; malformed or truncated lines raise with their line number."""
    records: list[RoundRecord] = []
    n = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.endswith("\n"):
                raise ValueError(f"line {lineno}: truncated record (no line terminator)")
            try:
                obj = json.loads(line)
                s, o = obj["s"], obj["o"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"line {lineno}: malformed record: {exc}") from None
            if not (isinstance(s, list) and isinstance(o, list)) or len(s) != len(o) or not s:
                raise ValueError(f"line {lineno}: settings and outcomes must be equal-length lists")
            if not all(isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in s):
                raise ValueError(f"line {lineno}: settings must be nonnegative integers")
            if not all(isinstance(x, int) and x in (-1, 1) for x in o):
                raise ValueError(f"line {lineno}: outcomes must be +1 or -1, got {o}")
            if n is None:
                n = len(s)
            elif len(s) != n:
                raise ValueError(f"line {lineno}: {len(s)} parties, earlier lines have {n}")
            records.append(RoundRecord(tuple(s), tuple(o)))
    return records
