"""Dense operator algebra on a product of finite-dimensional parties.

Basis convention: party 0 is the most significant digit of the mixed-radix
basis index, so ``|b0 b1 ...>`` reads left to right and ``np.kron`` builds
operators in party order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

DIM_CAP = 2**14
DEFAULT_ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"x": X, "y": Y, "z": Z}

SIGN_ZERO_TOL = 1e-12  # relative; eigenvalues this close to 0 count as 0


class DimensionError(ValueError):
    """Shapes, party indices or total dimension are inconsistent."""


def set_dim_cap(cap: int) -> int:
    """Change the global dimension cap; returns the previous value."""
    global DIM_CAP
    if cap < 2:
        raise ValueError("dimension cap must be at least 2")
    previous, DIM_CAP = DIM_CAP, int(cap)
    return previous


def party_dims(dims) -> tuple[int, ...]:
    """Validate a list of local dimensions and return it as a tuple."""
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise DimensionError("need at least one party")
    if any(d < 2 for d in dims):
        raise DimensionError(f"every local dimension must be >= 2, got {dims}")
    total = int(np.prod(dims))
    if total > DIM_CAP:
        raise DimensionError(f"total dimension {total} exceeds cap {DIM_CAP}")
    return dims


def total_dim(dims) -> int:
    return int(np.prod(dims))


def kron_all(ops) -> np.ndarray:
    return reduce(np.kron, ops)


def is_hermitian(a: np.ndarray, atol: float | None = None) -> bool:
    d = a.shape[0]
    tol = 1e-12 * d if atol is None else atol
    return bool(np.linalg.norm(a - a.conj().T) <= tol)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def embed_local(op: np.ndarray, party: int, dims) -> np.ndarray:
    """Return ``1 x ... x op x ... x 1`` with ``op`` in slot ``party``."""
    dims = party_dims(dims)
    if not 0 <= party < len(dims):
        raise DimensionError(f"party {party} out of range for {len(dims)} parties")
    op = np.asarray(op)
    if op.shape != (dims[party], dims[party]):
        raise DimensionError(
            f"operator shape {op.shape} does not match local dimension {dims[party]}"
        )
    left = int(np.prod(dims[:party], dtype=int))
    right = int(np.prod(dims[party + 1 :], dtype=int))
    return np.kron(np.kron(np.eye(left), op), np.eye(right)).astype(complex)


@dataclass(frozen=True)
class QuantumState:
    """Pure state vector or density matrix on ``dims``.

    ``data`` is 1-d for a pure state and 2-d for a mixed one.
    """

    data: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = party_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        data = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "data", data)
        d = total_dim(dims)
        if data.ndim == 1:
            if data.shape != (d,):
                raise DimensionError(f"vector of length {data.size} on dims {dims}")
            if abs(np.linalg.norm(data) - 1) > 1e-12 * max(1, d**0.5):
                raise ValueError(f"state vector norm {np.linalg.norm(data)} != 1")
        elif data.ndim == 2:
            if data.shape != (d, d):
                raise DimensionError(f"density matrix {data.shape} on dims {dims}")
            if not is_hermitian(data, 1e-12 * d):
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(data) - 1) > 1e-12 * d:
                raise ValueError(f"density matrix trace {np.trace(data).real} != 1")
            if np.linalg.eigvalsh(data)[0] < -1e-10:
                raise ValueError("density matrix is not positive semidefinite")
        else:
            raise DimensionError("state data must be a vector or a square matrix")

    @classmethod
    def pure(cls, vector, dims) -> QuantumState:
        v = np.asarray(vector, dtype=complex)
        return cls(v / np.linalg.norm(v), tuple(dims))

    @classmethod
    def mixed(cls, rho, dims) -> QuantumState:
        rho = np.asarray(rho, dtype=complex)
        return cls((rho + rho.conj().T) / 2, tuple(dims))

    @classmethod
    def maximally_mixed(cls, dims) -> QuantumState:
        d = total_dim(party_dims(dims))
        return cls(np.eye(d, dtype=complex) / d, tuple(dims))

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return total_dim(self.dims)

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def expect(self, op: np.ndarray) -> complex:
        if self.is_pure:
            return complex(np.vdot(self.data, op @ self.data))
        return complex(np.trace(self.data @ op))

    def sq_norm(self, op: np.ndarray) -> float:
        """``<O^dag O>``: squared vector norm for pure states, trace form otherwise."""
        if self.is_pure:
            v = op @ self.data
            return float(np.vdot(v, v).real)
        return float(np.trace(op @ self.data @ op.conj().T).real)


def apply_to_axes(t: np.ndarray, op: np.ndarray, axes) -> np.ndarray:
    """Contract ``op`` into the tensor axes ``axes`` of ``t`` (axes keep their slots)."""
    local = [t.shape[ax] for ax in axes]
    k = len(axes)
    m = op.reshape(local + local)
    out = np.tensordot(m, t, axes=(list(range(k, 2 * k)), list(axes)))
    # tensordot puts the new axes first; move them back into place
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_local(state: QuantumState, op: np.ndarray, parties) -> QuantumState:
    """Conjugate ``state`` by a unitary acting on ``parties`` (in that order)."""
    parties = [int(p) for p in parties]
    if len(set(parties)) != len(parties):
        raise DimensionError("repeated party index")
    if any(not 0 <= p < state.n for p in parties):
        raise DimensionError(f"party index out of range in {parties}")
    dims = state.dims
    d_loc = int(np.prod([dims[p] for p in parties]))
    op = np.asarray(op, dtype=complex)
    if op.shape != (d_loc, d_loc):
        raise DimensionError(f"operator shape {op.shape} does not fit parties {parties}")
    if state.is_pure:
        t = apply_to_axes(state.data.reshape(dims), op, parties)
        return QuantumState.pure(t.reshape(-1), dims)
    n = len(dims)
    t = state.data.reshape(dims + dims)
    t = apply_to_axes(t, op, parties)
    t = apply_to_axes(t, op.conj(), [p + n for p in parties])
    d = state.dim
    return QuantumState.mixed(t.reshape(d, d), dims)


def partial_trace(state: QuantumState, keep) -> QuantumState:
    """Reduced density matrix on ``keep`` (returned in increasing party order)."""
    keep = sorted(set(int(p) for p in keep))
    if not keep:
        raise DimensionError("keep-set must be non-empty")
    if any(not 0 <= p < state.n for p in keep):
        raise DimensionError(f"party index out of range in {keep}")
    dims = state.dims
    n = len(dims)
    drop = [p for p in range(n) if p not in keep]
    dk = int(np.prod([dims[p] for p in keep]))
    kept_dims = tuple(dims[p] for p in keep)
    if state.is_pure:
        t = np.transpose(state.data.reshape(dims), keep + drop).reshape(dk, -1)
        rho = t @ t.conj().T
    else:
        t = state.data.reshape(dims + dims)
        rows = "".join(chr(97 + i) for i in range(n))
        cols = [chr(97 + n + i) for i in range(n)]
        for p in drop:
            cols[p] = rows[p]
        out = "".join(rows[p] for p in keep) + "".join(cols[p] for p in keep)
        rho = np.einsum(f"{rows}{''.join(cols)}->{out}", t).reshape(dk, dk)
    return QuantumState.mixed(rho, kept_dims)


def dichotomize(h: np.ndarray) -> np.ndarray:
    """Sign of a Hermitian operator, with sign(0) = +1.

    The result is a Hermitian unitary with the eigenvectors of ``h``.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("dichotomize needs a Hermitian operator")
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    # eigenvalues that are zero up to rounding take the sign(0) = +1 branch
    zero_tol = SIGN_ZERO_TOL * max(1.0, float(np.abs(w).max(initial=0.0)))
    signs = np.where(w >= -zero_tol, 1.0, -1.0)
    return (v * signs) @ v.conj().T


@lru_cache(maxsize=64)
def _collective_spin(n: int, axis: str) -> np.ndarray:
    pauli = PAULI[axis]
    d = 2**n
    out = np.zeros((d, d), dtype=complex)
    for i in range(n):
        out += embed_local(pauli, i, (2,) * n)
    out /= 2
    out.setflags(write=False)
    return out


def collective_spin(n: int, axis: str) -> np.ndarray:
    """Collective spin component ``J_axis = (1/2) sum_i sigma_axis^(i)`` on n qubits."""
    axis = axis.lower()
    if axis not in PAULI:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    party_dims((2,) * n)
    return _collective_spin(n, axis)


def total_spin_squared(n: int) -> np.ndarray:
    jx, jy, jz = (collective_spin(n, a) for a in "xyz")
    return jx @ jx + jy @ jy + jz @ jz


def require_qubits(dims) -> None:
    if any(d != 2 for d in dims):
        raise DimensionError(f"all parties must be qubits, got dims {tuple(dims)}")


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """Uhlmann fidelity (squared convention, 1 for equal states)."""
    if a.dims != b.dims:
        raise DimensionError("fidelity between states on different dims")
    if a.is_pure and b.is_pure:
        return float(abs(np.vdot(a.data, b.data)) ** 2)
    if a.is_pure or b.is_pure:
        pure, other = (a, b) if a.is_pure else (b, a)
        return float(np.vdot(pure.data, other.data @ pure.data).real)
    from scipy.linalg import sqrtm

    s = sqrtm(a.data)
    return float(np.real(np.trace(sqrtm(s @ b.data @ s))) ** 2)


def embed(op: np.ndarray, parties, dims) -> np.ndarray:
    """Full matrix of ``op`` acting on ``parties`` (in that order), identity elsewhere."""
    dims = party_dims(dims)
    parties = [int(p) for p in parties]
    if len(set(parties)) != len(parties) or any(not 0 <= p < len(dims) for p in parties):
        raise DimensionError(f"invalid parties {parties} for {len(dims)} parties")
    d_loc = int(np.prod([dims[p] for p in parties]))
    op = np.asarray(op, dtype=complex)
    if op.shape != (d_loc, d_loc):
        raise DimensionError(f"operator shape {op.shape} does not fit parties {parties}")
    d = total_dim(dims)
    eye = np.eye(d, dtype=complex).reshape(dims + dims)
    return apply_to_axes(eye, op, parties).reshape(d, d)


def ensemble(state: QuantumState, cutoff: float = 1e-14) -> list[tuple[float, np.ndarray]]:
    """Pure-state decomposition ``[(p, vector), ...]`` (eigen-decomposition if mixed)."""
    if state.is_pure:
        return [(1.0, state.data)]
    w, v = np.linalg.eigh(state.data)
    return [(float(p), v[:, j]) for j, p in enumerate(w) if p > cutoff]
