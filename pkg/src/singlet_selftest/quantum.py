"""Qubit realizations: planar measurements, the singlet manifold and noisy variants."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import hilbert
from .bellspec import BellSpec, CorrelatorTable, bell_value
from .hilbert import QuantumState, X, Y, Z

KERNEL_TOL = 1e-9
NOISE_KINDS = ("depolarizing_global", "dephasing_local", "angle_jitter")


def measurement_observable(theta: float) -> np.ndarray:
    """``Z cos(theta) + X sin(theta)``."""
    return np.cos(theta) * Z + np.sin(theta) * X


def default_angles(n: int, k: int) -> np.ndarray:
    """Equispaced planar settings ``theta_a = a pi / k`` for every party, shape (n, k)."""
    return np.tile(np.arange(k) * np.pi / k, (n, 1))


def _check_angles(angles, n: int) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    if angles.ndim != 2 or angles.shape[0] != n:
        raise hilbert.DimensionError(f"angles of shape {angles.shape} for {n} parties")
    return angles


# --- singlet manifold -------------------------------------------------------


def singlet_dimension(n: int) -> int:
    return math.comb(n, n // 2) - math.comb(n, n // 2 - 1)


@dataclass(frozen=True)
class SingletBasis:
    n: int
    basis: np.ndarray  # shape (dim, 2**n), one basis vector per row

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


def _m_zero_indices(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    ones = np.array([bin(i).count("1") for i in idx])
    return idx[ones == n // 2]


def _canonical_order(vectors: np.ndarray) -> np.ndarray:
    keyed = []
    for v in vectors:
        first = int(np.flatnonzero(np.abs(v) > KERNEL_TOL)[0])
        c = v[first]
        v = v * (abs(c) / c)
        keyed.append((-round(abs(c), 12), first, v))
    keyed.sort(key=lambda t: (t[0], t[1]))
    return np.array([t[2] for t in keyed])


@lru_cache(maxsize=16)
def singlet_basis(n: int) -> SingletBasis:
    """Orthonormal basis of the kernel of ``J^2`` on n qubits.

    The kernel lies in the ``J_z = 0`` sector, so ``J^2`` is diagonalized there.
    The basis is made unique by Gram-Schmidt on the kernel projector's columns
    in basis-index order, then ordered by descending magnitude of the first
    nonvanishing coefficient (ties: smaller index first) with that coefficient
    made real positive.
    """
    if n < 2 or n % 2:
        raise ValueError(f"singlet manifold needs an even n >= 2, got {n}")
    hilbert.party_dims((2,) * n)
    sector = _m_zero_indices(n)
    j2 = hilbert.total_spin_squared(n)[np.ix_(sector, sector)].real
    w, v = np.linalg.eigh(j2)
    kernel = v[:, w < KERNEL_TOL]
    proj = kernel @ kernel.T
    q: list[np.ndarray] = []
    for col in proj.T:
        r = col - sum((u @ col) * u for u in q) if q else col.copy()
        nrm = np.linalg.norm(r)
        if nrm > 1e-6:
            q.append(r / nrm)
        if len(q) == kernel.shape[1]:
            break
    small = _canonical_order(np.array(q))
    full = np.zeros((len(small), 2**n), dtype=complex)
    full[:, sector] = small
    full.setflags(write=False)
    return SingletBasis(n, full)


def singlet_state(n: int, weights=None, coefficients=None) -> QuantumState:
    """Mixture (``weights``) or superposition (``coefficients``) of singlet basis states.

    With neither given, returns the uniform mixture over the manifold.
    """
    sb = singlet_basis(n)
    dims = (2,) * n
    if weights is not None and coefficients is not None:
        raise ValueError("give either weights or coefficients, not both")
    if coefficients is not None:
        c = np.asarray(coefficients, dtype=complex)
        if c.shape != (sb.dim,):
            raise ValueError(f"need {sb.dim} coefficients, got {c.shape}")
        if abs(np.linalg.norm(c) - 1) > 1e-9:
            raise ValueError("coefficients must have unit norm")
        return QuantumState.pure(c @ sb.basis, dims)
    if weights is None:
        weights = np.full(sb.dim, 1 / sb.dim)
    w = np.asarray(weights, dtype=float)
    if w.shape != (sb.dim,) or np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
        raise ValueError(f"weights must be {sb.dim} nonnegative numbers summing to 1")
    if sb.dim == 1:
        return QuantumState.pure(sb.basis[0], dims)
    rho = (sb.basis.T * w) @ sb.basis.conj()
    return QuantumState.mixed(rho, dims)


def random_singlet_state(n: int, seed: int, mixed: bool = False) -> QuantumState:
    """Seeded random state in the singlet manifold (pure, or a random mixture)."""
    rng = np.random.default_rng(seed)
    d = singlet_dimension(n)
    if mixed:
        return singlet_state(n, weights=rng.dirichlet(np.ones(d)))
    c = rng.normal(size=d) + 1j * rng.normal(size=d)
    return singlet_state(n, coefficients=c / np.linalg.norm(c))


def y_rotation(phi: float) -> np.ndarray:
    """``exp(+i phi Y / 2)``."""
    return np.cos(phi / 2) * np.eye(2) + 1j * np.sin(phi / 2) * Y


def rotated_singlet(n: int, phases, weights=None, coefficients=None) -> QuantumState:
    """Singlet with party ``i`` rotated about y by ``exp(+i phi_i Y / 2)``.

    This is the sign for which the rotated state saturates the phase-weighted
    Bell expression with the same phases.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (n,):
        raise ValueError(f"need {n} phases, got {phases.shape}")
    state = singlet_state(n, weights=weights, coefficients=coefficients)
    for i, phi in enumerate(phases):
        if phi != 0.0:
            state = hilbert.apply_local(state, y_rotation(phi), [i])
    return state


# --- correlators --------------------------------------------------------------


def pauli_pair_moments(state: QuantumState, i: int, j: int) -> np.ndarray:
    """``T[mu, nu] = <P_mu^(i) P_nu^(j)>`` for ``P = (Z, X)``."""
    if i == j:
        raise ValueError("pair moments need two distinct parties")
    if i > j:
        return pauli_pair_moments(state, j, i).T
    rho = hilbert.partial_trace(state, [i, j]).data
    paulis = (Z, X)
    return np.array([[np.trace(rho @ np.kron(p, q)).real for q in paulis] for p in paulis])


def correlator_table(state: QuantumState, angles) -> CorrelatorTable:
    """Exact ``<s_a^(i) s_b^(j)>`` for planar qubit measurements at ``angles``."""
    hilbert.require_qubits(state.dims)
    n = state.n
    angles = _check_angles(angles, n)
    k = angles.shape[1]
    coef = np.stack([np.cos(angles), np.sin(angles)], axis=-1)  # (n, k, 2)
    values = np.zeros((n, n, k, k))
    for i in range(n):
        for j in range(i + 1, n):
            t = pauli_pair_moments(state, i, j)
            block = coef[i] @ t @ coef[j].T
            values[i, j] = block
            values[j, i] = block.T
    return CorrelatorTable(n, k, np.clip(values, -1.0, 1.0))


# --- noise -------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    kind: str
    strength: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.strength < 0:
            raise ValueError("noise strength must be nonnegative")
        if self.kind != "angle_jitter" and self.strength > 1:
            raise ValueError(f"{self.kind} strength must lie in [0, 1]")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> NoiseModel:
        """Parse ``kind:strength``; short kinds ``depolarizing``/``dephasing``/``jitter`` accepted."""
        kind, _, strength = text.partition(":")
        aliases = {
            "depolarizing": "depolarizing_global",
            "dephasing": "dephasing_local",
            "jitter": "angle_jitter",
        }
        return cls(aliases.get(kind, kind), float(strength or 0.0), seed)


def apply_noise(target, model: NoiseModel):
    """Apply a state channel, or jitter an angle array for ``angle_jitter``."""
    if model.kind == "angle_jitter":
        angles = np.asarray(target, dtype=float)
        rng = np.random.default_rng(model.seed)
        return angles + rng.uniform(-model.strength, model.strength, size=angles.shape)
    if not isinstance(target, QuantumState):
        raise TypeError(f"{model.kind} acts on a QuantumState")
    p = model.strength
    if p == 0:
        return target
    rho = target.density_matrix()
    if model.kind == "depolarizing_global":
        d = target.dim
        return QuantumState.mixed((1 - p) * rho + p * np.eye(d) / d, target.dims)
    hilbert.require_qubits(target.dims)
    for i in range(target.n):
        zi = hilbert.embed_local(Z, i, target.dims)
        rho = (1 - p) * rho + p * zi @ rho @ zi
    return QuantumState.mixed(rho, target.dims)


# --- collective-spin statistics ----------------------------------------------


def spin_moment_xz(state: QuantumState) -> float:
    """``<J_z^2 + J_x^2>``."""
    jz = hilbert.collective_spin(state.n, "z")
    jx = hilbert.collective_spin(state.n, "x")
    return float(state.expect(jz @ jz + jx @ jx).real)


def total_spin(state: QuantumState) -> float:
    """``<J^2>``."""
    return float(state.expect(hilbert.total_spin_squared(state.n)).real)


def eq9_check(state: QuantumState, k: int) -> tuple[float, float]:
    """Both sides of ``B + nk = 2k <J_z^2 + J_x^2>`` under the ideal planar settings."""
    hilbert.require_qubits(state.dims)
    n = state.n
    spec = BellSpec(n, k)
    lhs = bell_value(correlator_table(state, default_angles(n, k)), spec).value + n * k
    rhs = 2 * k * spin_moment_xz(state)
    return lhs, rhs


def phase_statistic(state: QuantumState, phases) -> float:
    """``sum_{i,j} cos(phi_i - phi_j) <X_i X_j + Z_i Z_j>`` (i = j terms included)."""
    hilbert.require_qubits(state.dims)
    phi = np.asarray(phases, dtype=float)
    n = state.n
    total = 2.0 * n
    for i in range(n):
        for j in range(i + 1, n):
            t = pauli_pair_moments(state, i, j)
            total += 2 * math.cos(phi[i] - phi[j]) * (t[0, 0] + t[1, 1])
    return float(total)


def rotated_spin_moment(state: QuantumState, phases) -> float:
    """``<J'_x^2 + J'_z^2>`` for the phase-rotated collective spins

    ``J'_z = (1/2) sum_i (cos phi_i Z_i - sin phi_i X_i)`` and
    ``J'_x = (1/2) sum_i (cos phi_i X_i + sin phi_i Z_i)``.
    """
    hilbert.require_qubits(state.dims)
    phi = np.asarray(phases, dtype=float)
    dims = state.dims
    jz = sum(
        hilbert.embed_local(np.cos(p) * Z - np.sin(p) * X, i, dims) for i, p in enumerate(phi)
    ) / 2
    jx = sum(
        hilbert.embed_local(np.cos(p) * X + np.sin(p) * Z, i, dims) for i, p in enumerate(phi)
    ) / 2
    return float(state.expect(jz @ jz + jx @ jx).real)


# --- JSON ---------------------------------------------------------------------


def state_to_json_dict(state: QuantumState) -> dict:
    flat = state.data.reshape(-1)
    out = {
        "n": state.n,
        "kind": "pure" if state.is_pure else "mixed",
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }
    if any(d != 2 for d in state.dims):
        out["dims"] = list(state.dims)
    return out


def state_from_json_dict(d: dict) -> QuantumState:
    n = int(d["n"])
    dims = tuple(d.get("dims") or (2,) * n)
    if len(dims) != n:
        raise ValueError(f"dims {dims} do not match n={n}")
    data = np.array([complex(re, im) for re, im in d["data"]])
    size = hilbert.total_dim(dims)
    if d["kind"] == "pure":
        return QuantumState(data, dims)
    if d["kind"] == "mixed":
        return QuantumState(data.reshape(size, size), dims)
    raise ValueError(f"unknown state kind {d['kind']!r}")


def save_state(state: QuantumState, path) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_json_dict(state), fh)


def load_state(path) -> QuantumState:
    with open(path) as fh:
        return state_from_json_dict(json.load(fh))
