"""SWAP-isometry extraction of a qubit register from black boxes, and its robustness bound.

Each box gets an ancilla qubit in ``|+>``; the partial SWAP gate is
controlled-``Z~``, Hadamard on the ancilla, then controlled-``X~``, where ``Z~``
and ``X~`` are the signs (sign(0) = +1) of the box operators ``Z^(i)``,
``X^(i)``. All ancillas form the leading tensor factor, boxes trail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import hilbert
from .bellspec import bell_value, violation_deficit
from .hilbert import H, QuantumState
from .quantum import rotated_spin_moment, spin_moment_xz, state_to_json_dict, total_spin
from .sos import BlackBoxModel, local_zx, model_correlator_table

PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
BOUND_TOL = 1e-9

# operator-norm facts behind the constant chain
R_NORM = 4.0  # ||2 e^{i a pi/k} s_a - (Z + iX)|| <= 2 + 2
ZX_NORM = 2.0  # ||Z -+ iX|| <= 2


@dataclass(frozen=True)
class RobustnessConstants:
    """Constants of the deficit-to-spin-fluctuation chain.

    ``alpha`` bounds ``sum_j ||(Z + iX)^2 psi||^2 / (N eps)``; it collects a
    ``4 ||R||^2`` term and a ``4 ||Z - iX||^2`` term, ``(sqrt(64) + sqrt(16))^2``.
    """

    alpha: float = field(
        default=(math.sqrt(4 * R_NORM**2) + math.sqrt(4 * ZX_NORM**2)) ** 2
    )

    @property
    def alpha0(self) -> float:
        return self.alpha

    @property
    def alpha1(self) -> float:
        return (1 + math.sqrt(self.alpha) / 2) ** 2

    @property
    def x_coefficient(self) -> float:
        """``sqrt(alpha0) + (1 + 8/pi) sqrt(alpha1)``, equal to ``19 + 56/pi``."""
        return math.sqrt(self.alpha0) + (1 + 8 / math.pi) * math.sqrt(self.alpha1)

    @property
    def r(self) -> float:
        return self.alpha1 + (self.alpha1 + self.x_coefficient**2) / 2


CONSTANTS = RobustnessConstants()


def robustness_bound(n: int, epsilon: float, constants: RobustnessConstants = CONSTANTS) -> float:
    """Upper bound ``(n^2 eps / 4)(sqrt(2/n) + sqrt(r))^2`` on ``<J_z^2 + J_x^2>``."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    return (n**2 * epsilon / 4) * (math.sqrt(2 / n) + math.sqrt(constants.r)) ** 2


@lru_cache(maxsize=32)
def max_spin_moment_xz(n: int) -> float:
    """Largest eigenvalue of ``J_z^2 + J_x^2`` on n qubits."""
    jz = hilbert.collective_spin(n, "z")
    jx = hilbert.collective_spin(n, "x")
    return float(np.linalg.eigvalsh(jz @ jz + jx @ jx)[-1])


# --- regularization and the gate --------------------------------------------------


@dataclass(frozen=True)
class RegularizedPair:
    z_tilde: tuple[np.ndarray, ...]
    x_tilde: tuple[np.ndarray, ...]


def regularize(model: BlackBoxModel) -> RegularizedPair:
    zs, xs = [], []
    for i in range(model.n):
        zbar, xbar = local_zx(model, i)
        zs.append(hilbert.dichotomize(zbar))
        xs.append(hilbert.dichotomize(xbar))
    return RegularizedPair(tuple(zs), tuple(xs))


def _controlled(op: np.ndarray) -> np.ndarray:
    d = op.shape[0]
    out = np.zeros((2 * d, 2 * d), dtype=complex)
    out[:d, :d] = np.eye(d)
    out[d:, d:] = op
    return out


def partial_swap_unitary(pair: RegularizedPair, party: int) -> np.ndarray:
    """Gate on ``ancilla x box``: controlled-Z~, then H on the ancilla, then controlled-X~."""
    if not 0 <= party < len(pair.z_tilde):
        raise hilbert.DimensionError(f"party {party} out of range")
    z, x = pair.z_tilde[party], pair.x_tilde[party]
    d = z.shape[0]
    return _controlled(x) @ np.kron(H, np.eye(d)) @ _controlled(z)


def joint_dims(model: BlackBoxModel) -> tuple[int, ...]:
    return (2,) * model.n + model.dims


def swap_unitary(model: BlackBoxModel, pair: RegularizedPair | None = None) -> np.ndarray:
    """Full ``U = prod_i Phi_i`` on ancillas x boxes as one matrix (small systems only)."""
    pair = regularize(model) if pair is None else pair
    dims = joint_dims(model)
    u = np.eye(hilbert.total_dim(dims), dtype=complex)
    for i in range(model.n):
        u = hilbert.embed(partial_swap_unitary(pair, i), [i, model.n + i], dims) @ u
    return u


def _attach_ancillas(vec: np.ndarray, n: int) -> np.ndarray:
    plus = hilbert.kron_all([PLUS] * n)
    return np.kron(plus, vec)


def _apply_swaps(vec: np.ndarray, model: BlackBoxModel, pair: RegularizedPair) -> np.ndarray:
    dims = joint_dims(model)
    t = vec.reshape(dims)
    for i in range(model.n):
        t = hilbert.apply_to_axes(t, partial_swap_unitary(pair, i), [i, model.n + i])
    return t.reshape(-1)


def extract_state(model: BlackBoxModel, state: QuantumState) -> QuantumState:
    """n-qubit state left on the ancillas after the SWAP gate, boxes traced out."""
    if state.dims != model.dims:
        raise hilbert.DimensionError(f"state dims {state.dims} != model dims {model.dims}")
    dims = joint_dims(model)
    hilbert.party_dims(dims)
    pair = regularize(model)
    n = model.n
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for p, vec in hilbert.ensemble(state):
        out = _apply_swaps(_attach_ancillas(vec, n), model, pair).reshape(2**n, -1)
        rho += p * (out @ out.conj().T)
    rho /= np.trace(rho).real
    return QuantumState.mixed(rho, (2,) * n)


def apply_swap_map(model: BlackBoxModel, ket: np.ndarray, bra: np.ndarray) -> np.ndarray:
    """Linear extension ``Tr_boxes[U (|+><+| x |ket><bra|) U^dag]`` on box vectors."""
    pair = regularize(model)
    n = model.n
    left = _apply_swaps(_attach_ancillas(np.asarray(ket, complex), n), model, pair)
    right = _apply_swaps(_attach_ancillas(np.asarray(bra, complex), n), model, pair)
    return left.reshape(2**n, -1) @ right.reshape(2**n, -1).conj().T


# --- the full pipeline -------------------------------------------------------------


@dataclass(frozen=True)
class ExtractionReport:
    bell_value: float
    epsilon: float
    extracted_state: QuantumState
    jz2_plus_jx2: float
    jsq: float
    bound: float
    bound_satisfied: bool
    vacuous: bool

    def to_dict(self, include_state: bool = False) -> dict:
        out = {
            "bell_value": self.bell_value,
            "epsilon": self.epsilon,
            "jz2_plus_jx2": self.jz2_plus_jx2,
            "jsq": self.jsq,
            "bound": self.bound,
            "bound_satisfied": self.bound_satisfied,
            "vacuous": self.vacuous,
        }
        if include_state:
            out["extracted_state"] = state_to_json_dict(self.extracted_state)
        return out


def extraction_report(model: BlackBoxModel, state: QuantumState) -> ExtractionReport:
    """Bell value, deficit, extracted spin moments and the robustness bound.

    With nonzero phases the moment reported is the one for the phase-rotated
    collective spins; the bound itself is only established for zero phases.
    """
    spec = model.spec
    value = bell_value(model_correlator_table(model, state), spec)
    eps = violation_deficit(value)
    extracted = extract_state(model, state)
    if spec.has_phases:
        moment = rotated_spin_moment(extracted, spec.phases)
    else:
        moment = spin_moment_xz(extracted)
    bound = robustness_bound(spec.n, eps)
    return ExtractionReport(
        bell_value=value.value,
        epsilon=eps,
        extracted_state=extracted,
        jz2_plus_jx2=moment,
        jsq=total_spin(extracted),
        bound=bound,
        bound_satisfied=moment <= bound + BOUND_TOL,
        vacuous=bound >= max_spin_moment_xz(spec.n),
    )


# --- intermediate quantities of the robustness chain ---------------------------------


def chain_quantities(model: BlackBoxModel, state: QuantumState) -> dict[str, float]:
    """Every state-dependent quantity the robustness constants bound (zero phases).

    Keys: ``a0`` = sum_j ||(1 - (Z^2 + X^2)/2) psi||^2, ``plus``/``minus`` =
    sum_j ||(Z +- iX)^2 psi||^2, ``anticomm`` = sum_j ||(ZX + XZ) psi||^2,
    ``one_minus_z2``/``one_minus_x2``, and the post-gate deviations
    ``dev_z`` = <(S_z^Phi - S_z)^2>, ``dev_x`` likewise, with ``S`` sums of Paulis.
    """
    if state.dims != model.dims:
        raise hilbert.DimensionError(f"state dims {state.dims} != model dims {model.dims}")
    n = model.n
    out = dict.fromkeys(
        ("a0", "plus", "minus", "anticomm", "one_minus_z2", "one_minus_x2"), 0.0
    )
    for i in range(n):
        zbar, xbar = local_zx(model, i)
        eye = np.eye(model.dims[i])
        local = {
            "a0": eye - (zbar @ zbar + xbar @ xbar) / 2,
            "plus": (zbar + 1j * xbar) @ (zbar + 1j * xbar),
            "minus": (zbar - 1j * xbar) @ (zbar - 1j * xbar),
            "anticomm": zbar @ xbar + xbar @ zbar,
            "one_minus_z2": eye - zbar @ zbar,
            "one_minus_x2": eye - xbar @ xbar,
        }
        for key, op in local.items():
            out[key] += state.sq_norm(hilbert.embed_local(op, i, model.dims))

    pair = regularize(model)
    dims = joint_dims(model)
    dev = {"dev_z": 0.0, "dev_x": 0.0}
    for p, vec in hilbert.ensemble(state):
        v = _attach_ancillas(vec, n).reshape(dims)
        for key, pauli in (("dev_z", hilbert.Z), ("dev_x", hilbert.X)):
            acc = np.zeros_like(v)
            for i in range(n):
                phi = partial_swap_unitary(pair, i)
                zbar, xbar = local_zx(model, i)
                box = zbar if key == "dev_z" else xbar
                d = model.dims[i]
                diff = phi.conj().T @ np.kron(pauli, np.eye(d)) @ phi - np.kron(np.eye(2), box)
                acc = acc + hilbert.apply_to_axes(v, diff, [i, n + i])
            dev[key] += p * float(np.vdot(acc, acc).real)
    out.update(dev)
    return out
