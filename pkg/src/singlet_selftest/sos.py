"""Black-box models and the sum-of-squares certificate of the quantum bound.

For any dichotomic observables ``s_a^(i)`` the shifted Bell operator obeys

    B + nk = (k/2) (S_z^2 + S_x^2) + sum_{i,a} (A_a^(i))^2

where ``Z^(i) = (2/k) sum_a cos(a pi/k) s_a^(i)``, ``X^(i)`` likewise with sines,
``S_z = sum_i (cos phi_i Z^(i) - sin phi_i X^(i))``,
``S_x = sum_i (cos phi_i X^(i) + sin phi_i Z^(i))`` and
``A_a^(i) = s_a^(i) - cos(a pi/k) Z^(i) - sin(a pi/k) X^(i)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import hilbert
from .bellspec import BellSpec, CorrelatorTable, pair_weights
from .hilbert import QuantumState
from .quantum import default_angles, measurement_observable

IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class BlackBoxModel:
    """``observables[i][a]`` is the local dichotomic observable of party i, setting a."""

    spec: BellSpec
    dims: tuple[int, ...]
    observables: tuple[np.ndarray, ...]  # per party, array of shape (k, d_i, d_i)

    def __post_init__(self):
        dims = hilbert.party_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) != self.spec.n:
            raise hilbert.DimensionError(f"{len(dims)} dims for n={self.spec.n} parties")
        obs = []
        for i, ops in enumerate(self.observables):
            ops = np.asarray(ops, dtype=complex)
            d = dims[i]
            if ops.shape != (self.spec.k, d, d):
                raise hilbert.DimensionError(
                    f"party {i}: observables {ops.shape}, expected {(self.spec.k, d, d)}"
                )
            for a, op in enumerate(ops):
                if np.linalg.norm(op - op.conj().T) > 1e-12 * d:
                    raise ValueError(f"observable ({i}, {a}) is not Hermitian")
                if np.linalg.norm(op @ op - np.eye(d)) > IDENTITY_TOL * d:
                    raise ValueError(f"observable ({i}, {a}) does not square to identity")
            ops.setflags(write=False)
            obs.append(ops)
        if len(obs) != self.spec.n:
            raise hilbert.DimensionError(f"observables for {len(obs)} parties, n={self.spec.n}")
        object.__setattr__(self, "observables", tuple(obs))

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def dim(self) -> int:
        return hilbert.total_dim(self.dims)

    def embedded(self, i: int, a: int) -> np.ndarray:
        return hilbert.embed_local(self.observables[i][a], i, self.dims)

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "dims": list(self.dims),
            "observables": [
                [[[float(z.real), float(z.imag)] for z in op.reshape(-1)] for op in ops]
                for ops in self.observables
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> BlackBoxModel:
        spec = BellSpec.from_dict(d["spec"])
        dims = tuple(int(x) for x in d["dims"])
        obs = []
        for i, ops in enumerate(d["observables"]):
            mats = [
                np.array([complex(re, im) for re, im in flat]).reshape(dims[i], dims[i])
                for flat in ops
            ]
            obs.append(np.array(mats))
        return cls(spec, dims, tuple(obs))


def save_model(model: BlackBoxModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_json_dict(), fh)


def load_model(path) -> BlackBoxModel:
    with open(path) as fh:
        return BlackBoxModel.from_json_dict(json.load(fh))


def qubit_model(spec: BellSpec, angles=None) -> BlackBoxModel:
    """Planar qubit measurements ``Z cos(theta) + X sin(theta)`` (ideal angles by default)."""
    if angles is None:
        angles = default_angles(spec.n, spec.k)
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (spec.n, spec.k):
        raise hilbert.DimensionError(f"angles {angles.shape}, expected {(spec.n, spec.k)}")
    obs = tuple(np.array([measurement_observable(t) for t in row]) for row in angles)
    return BlackBoxModel(spec, (2,) * spec.n, obs)


def embedded_qubit_model(spec: BellSpec, junk_dim: int = 2, angles=None) -> BlackBoxModel:
    """Qubit measurements acting on the first factor of ``qubit x junk`` boxes."""
    base = qubit_model(spec, angles)
    eye = np.eye(junk_dim)
    obs = tuple(np.array([np.kron(op, eye) for op in ops]) for ops in base.observables)
    return BlackBoxModel(spec, (2 * junk_dim,) * spec.n, obs)


def embed_qubit_state(state: QuantumState, junk_dim: int) -> QuantumState:
    """Tensor every qubit with a ``|0>`` junk level, matching ``embedded_qubit_model``."""
    hilbert.require_qubits(state.dims)
    junk = np.zeros((junk_dim, 1))
    junk[0, 0] = 1
    iso = hilbert.kron_all([np.kron(np.eye(2), junk)] * state.n)
    dims = (2 * junk_dim,) * state.n
    if state.is_pure:
        return QuantumState.pure(iso @ state.data, dims)
    return QuantumState.mixed(iso @ state.data @ iso.T, dims)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_observable(d: int, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(d, rng)
    signs = rng.choice([-1.0, 1.0], size=d)
    op = (u * signs) @ u.conj().T
    return (op + op.conj().T) / 2


def random_blackbox(spec: BellSpec, dims, seed: int) -> BlackBoxModel:
    """Seeded model with ``U diag(+-1) U^dag`` observables for random unitaries ``U``."""
    dims = hilbert.party_dims(dims)
    rng = np.random.default_rng(seed)
    obs = tuple(
        np.array([random_observable(d, rng) for _ in range(spec.k)]) for d in dims
    )
    return BlackBoxModel(spec, dims, obs)


# --- derived operators ------------------------------------------------------------


def local_zx(model: BlackBoxModel, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Local ``(Z^(i), X^(i))``."""
    k = model.k
    theta = np.arange(k) * np.pi / k
    ops = model.observables[i]
    zbar = (2 / k) * np.einsum("a,axy->xy", np.cos(theta), ops)
    xbar = (2 / k) * np.einsum("a,axy->xy", np.sin(theta), ops)
    return zbar, xbar


def local_a_terms(model: BlackBoxModel, i: int) -> np.ndarray:
    """``A_a^(i) = s_a - (2/k) sum_b cos(pi (a-b)/k) s_b``, shape (k, d, d)."""
    k = model.k
    a = np.arange(k)
    m = (2 / k) * np.cos(np.pi * (a[:, None] - a[None, :]) / k)
    ops = model.observables[i]
    return ops - np.einsum("ab,bxy->axy", m, ops)


def local_r_terms(model: BlackBoxModel, i: int) -> np.ndarray:
    """``R_a^(i) = 2 exp(i a pi/k) s_a - (Z + iX)``, shape (k, d, d)."""
    k = model.k
    zbar, xbar = local_zx(model, i)
    phase = np.exp(1j * np.pi * np.arange(k) / k)
    return 2 * phase[:, None, None] * model.observables[i] - (zbar + 1j * xbar)[None]


@dataclass(frozen=True)
class DerivedOperators:
    zbar: tuple[np.ndarray, ...]  # local, per party
    xbar: tuple[np.ndarray, ...]
    a_terms: tuple[np.ndarray, ...]  # local, per party, shape (k, d, d)
    s_z: np.ndarray  # global, phase-weighted
    s_x: np.ndarray
    bell: np.ndarray


def collective_zx(model: BlackBoxModel) -> tuple[np.ndarray, np.ndarray]:
    """Phase-weighted global ``(S_z, S_x)``."""
    d = model.dim
    s_z = np.zeros((d, d), dtype=complex)
    s_x = np.zeros((d, d), dtype=complex)
    for i, phi in enumerate(model.spec.phases):
        zbar, xbar = local_zx(model, i)
        c, s = math.cos(phi), math.sin(phi)
        s_z += hilbert.embed_local(c * zbar - s * xbar, i, model.dims)
        s_x += hilbert.embed_local(c * xbar + s * zbar, i, model.dims)
    return s_z, s_x


def bell_operator(model: BlackBoxModel) -> np.ndarray:
    """Bell operator built term by term from the pair weights."""
    n, k = model.n, model.k
    w = pair_weights(model.spec)
    emb = [[model.embedded(i, a) for a in range(k)] for i in range(n)]
    d = model.dim
    out = np.zeros((d, d), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            for a in range(k):
                right = sum(w[i, j, a, b] * emb[j][b] for b in range(k))
                # the (j, i, b, a) term equals the (i, j, a, b) term
                out += 2 * emb[i][a] @ right
    return (out + out.conj().T) / 2


def derived_operators(model: BlackBoxModel) -> DerivedOperators:
    zx = [local_zx(model, i) for i in range(model.n)]
    s_z, s_x = collective_zx(model)
    return DerivedOperators(
        zbar=tuple(z for z, _ in zx),
        xbar=tuple(x for _, x in zx),
        a_terms=tuple(local_a_terms(model, i) for i in range(model.n)),
        s_z=s_z,
        s_x=s_x,
        bell=bell_operator(model),
    )


def sos_operator(model: BlackBoxModel) -> np.ndarray:
    """Right-hand side ``(k/2)(S_z^2 + S_x^2) + sum (A_a^(i))^2``."""
    s_z, s_x = collective_zx(model)
    out = (model.k / 2) * (s_z @ s_z + s_x @ s_x)
    for i in range(model.n):
        for a_op in local_a_terms(model, i):
            out += hilbert.embed_local(a_op @ a_op, i, model.dims)
    return out


def sos_identity_residual(model: BlackBoxModel) -> float:
    """Frobenius norm of ``(B + nk) - SOS``; at rounding level for every model."""
    d = model.dim
    shifted = bell_operator(model) + model.n * model.k * np.eye(d)
    return float(np.linalg.norm(shifted - sos_operator(model)))


def min_bell_eigenvalue(model: BlackBoxModel) -> float:
    return float(np.linalg.eigvalsh(bell_operator(model))[0])


# --- state-dependent residuals ------------------------------------------------------


@dataclass(frozen=True)
class SosReport:
    identity_residual: float
    sz_norm: float  # ||S_z psi||^2
    sx_norm: float  # ||S_x psi||^2
    a_norms: np.ndarray  # ||A_a^(i) psi||^2, shape (n, k)
    bell_expectation: float
    reconstruction_gap: float

    @property
    def weighted_sum(self) -> float:
        """``(k/2)(||S_z psi||^2 + ||S_x psi||^2) + sum ||A psi||^2``."""
        k = self.a_norms.shape[1]
        return (k / 2) * (self.sz_norm + self.sx_norm) + float(self.a_norms.sum())

    def max_term(self) -> float:
        return max(self.sz_norm, self.sx_norm, float(self.a_norms.max()))

    def to_dict(self) -> dict:
        return {
            "identity_residual": self.identity_residual,
            "sz_norm": self.sz_norm,
            "sx_norm": self.sx_norm,
            "a_norms": self.a_norms.tolist(),
            "bell_expectation": self.bell_expectation,
            "reconstruction_gap": self.reconstruction_gap,
        }


def _check_state(model: BlackBoxModel, state: QuantumState) -> None:
    if state.dims != model.dims:
        raise hilbert.DimensionError(f"state dims {state.dims} != model dims {model.dims}")


def sos_residual_norms(model: BlackBoxModel, state: QuantumState) -> SosReport:
    """Squared norms of every SOS term on ``state`` (trace forms for mixed states)."""
    _check_state(model, state)
    n, k = model.n, model.k
    bell = bell_operator(model)
    s_z, s_x = collective_zx(model)
    a_norms = np.zeros((n, k))
    for i in range(n):
        for a, a_op in enumerate(local_a_terms(model, i)):
            a_norms[i, a] = state.sq_norm(hilbert.embed_local(a_op, i, model.dims))
    shifted = bell + n * k * np.eye(model.dim)
    identity_residual = float(np.linalg.norm(shifted - sos_operator(model)))
    expectation = float(state.expect(bell).real)
    sz, sx = state.sq_norm(s_z), state.sq_norm(s_x)
    gap = abs((k / 2) * (sz + sx) + a_norms.sum() - (expectation + n * k))
    return SosReport(identity_residual, sz, sx, a_norms, expectation, float(gap))


def _norm(state: QuantumState, op: np.ndarray) -> float:
    return math.sqrt(max(state.sq_norm(op), 0.0))


def pauli_relation_residuals(model: BlackBoxModel, state: QuantumState) -> np.ndarray:
    """Per party ``||(Z^2 - 1) psi||``, ``||(X^2 - 1) psi||``, ``||(ZX + XZ) psi||``."""
    _check_state(model, state)
    out = np.zeros((model.n, 3))
    for i in range(model.n):
        zbar, xbar = local_zx(model, i)
        eye = np.eye(model.dims[i])
        local = (zbar @ zbar - eye, xbar @ xbar - eye, zbar @ xbar + xbar @ zbar)
        out[i] = [_norm(state, hilbert.embed_local(op, i, model.dims)) for op in local]
    return out


def measurement_selftest_residuals(model: BlackBoxModel, state: QuantumState) -> np.ndarray:
    """Per (i, a) ``||(Z cos(a pi/k) + X sin(a pi/k) - s_a)^(i) psi||``."""
    _check_state(model, state)
    k = model.k
    theta = np.arange(k) * np.pi / k
    out = np.zeros((model.n, k))
    for i in range(model.n):
        zbar, xbar = local_zx(model, i)
        for a in range(k):
            op = np.cos(theta[a]) * zbar + np.sin(theta[a]) * xbar - model.observables[i][a]
            out[i, a] = _norm(state, hilbert.embed_local(op, i, model.dims))
    return out


def model_correlator_table(model: BlackBoxModel, state: QuantumState) -> CorrelatorTable:
    """Exact ``<s_a^(i) s_b^(j)>`` of a black-box model on ``state``."""
    _check_state(model, state)
    n, k = model.n, model.k
    values = np.zeros((n, n, k, k))
    for i in range(n):
        for j in range(i + 1, n):
            di, dj = model.dims[i], model.dims[j]
            rho = hilbert.partial_trace(state, [i, j]).data.reshape(di, dj, di, dj)
            block = np.einsum(
                "xyuv,aux,bvy->ab", rho, model.observables[i], model.observables[j]
            ).real
            values[i, j] = block
            values[j, i] = block.T
    return CorrelatorTable(n, k, np.clip(values, -1.0, 1.0))


# --- norm bounds ------------------------------------------------------------------


def norm_bounds(k: int) -> tuple[float, float]:
    """Triangle-inequality bounds on ``||X^(i)||`` and ``||Z^(i)||``.

    ``x_bound = sin(pi/k) / (k sin^2(pi/2k))`` never exceeds 4/pi.
    ``z_bound = (2/k) sum_a |cos(a pi/k)|`` does exceed 4/pi for odd k; it is
    attained by commuting observables with outcome pattern ``sign(cos(a pi/k))``.
    """
    if k < 3:
        raise ValueError(f"need k >= 3, got {k}")
    x_bound = math.sin(math.pi / k) / (k * math.sin(math.pi / (2 * k)) ** 2)
    z_bound = (2 / k) * sum(abs(math.cos(a * math.pi / k)) for a in range(k))
    return x_bound, z_bound


def local_operator_norms(model: BlackBoxModel) -> np.ndarray:
    """Spectral norms ``(||X^(i)||, ||Z^(i)||)`` per party, shape (n, 2)."""
    out = np.zeros((model.n, 2))
    for i in range(model.n):
        zbar, xbar = local_zx(model, i)
        out[i] = [np.linalg.norm(xbar, 2), np.linalg.norm(zbar, 2)]
    return out
