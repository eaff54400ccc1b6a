"""Dense qubit-register states and the purified ensemble construction.

Qubit ordering is big-endian: qubit 0 is the most significant bit of a basis
index.  In a purified state the physical register occupies the most
significant qubits, so ``index = physical_index * 2**n_ancilla + ancilla_index``
and reshaping the amplitudes to ``(dim_physical, dim_ancilla)`` exposes the
ensemble members as (weighted) columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DegeneracyError, DomainError, PreconditionError

NORM_TOL = 1e-12


@dataclass(frozen=True)
class QubitRegister:
    n_qubits: int

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 0:
            raise DomainError(f"n_qubits must be a non-negative integer, got {self.n_qubits}")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits


class StateVector:
    """Immutable amplitude vector over a qubit register."""

    __slots__ = ("register", "amplitudes")

    def __init__(self, amplitudes, register: QubitRegister | None = None):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if register is None:
            n = amps.size.bit_length() - 1
            if amps.size == 0 or (1 << n) != amps.size:
                raise DomainError(f"length {amps.size} is not a power of two")
            register = QubitRegister(n)
        elif register.dim != amps.size:
            raise DomainError(f"{amps.size} amplitudes for a {register.n_qubits}-qubit register")
        amps.setflags(write=False)
        object.__setattr__(self, "register", register)
        object.__setattr__(self, "amplitudes", amps)

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    @property
    def n_qubits(self) -> int:
        return self.register.n_qubits

    @property
    def dim(self) -> int:
        return self.register.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise DegeneracyError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / nrm, self.register)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={self.amplitudes!r})"


@dataclass(frozen=True)
class WeightVector:
    """Normalized, non-increasing ensemble weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise DomainError("weight vector must be non-empty")
        if np.any(w < 0):
            raise PreconditionError("weights must be non-negative")
        if np.any(np.diff(w) > 1e-15):
            raise PreconditionError(f"weights must be non-increasing, got {w}")
        if abs(w.sum() - 1.0) > 1e-12:
            raise PreconditionError(f"weights must sum to 1, got {w.sum()!r}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_raw(cls, raw: Sequence[float]) -> "WeightVector":
        """Normalize arbitrary non-negative non-increasing weights to unit sum."""
        w = np.asarray(raw, dtype=float)
        total = w.sum()
        if total <= 0:
            raise PreconditionError("weights must not all be zero")
        return cls(w / total)

    def __len__(self):
        return self.weights.size

    def __getitem__(self, i):
        return self.weights[i]

    def __iter__(self):
        return iter(self.weights)


@dataclass(frozen=True)
class PurifiedState:
    physical: QubitRegister
    ancilla: QubitRegister
    state: StateVector
    weights: WeightVector

    @property
    def n_states(self) -> int:
        return len(self.weights)

    def blocks(self) -> np.ndarray:
        """Amplitudes reshaped to ``(dim_physical, dim_ancilla)``."""
        return self.state.amplitudes.reshape(self.physical.dim, self.ancilla.dim)

    def with_blocks(self, blocks: np.ndarray) -> "PurifiedState":
        return PurifiedState(
            self.physical,
            self.ancilla,
            StateVector(np.asarray(blocks).reshape(-1), self.state.register),
            self.weights,
        )


def n_ancilla_qubits(k: int) -> int:
    return 0 if k <= 1 else math.ceil(math.log2(k))


def basis_state(register: QubitRegister, index: int) -> StateVector:
    if not 0 <= index < register.dim:
        raise DomainError(f"basis index {index} outside [0, {register.dim})")
    amps = np.zeros(register.dim, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps, register)


def _check_same(a: StateVector, b: StateVector):
    if a.dim != b.dim:
        raise DomainError(f"dimension mismatch: {a.dim} vs {b.dim}")


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _check_same(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    """|a> (x) |b> with ``a`` on the most significant qubits."""
    reg = QubitRegister(a.n_qubits + b.n_qubits)
    return StateVector(np.kron(a.amplitudes, b.amplitudes), reg)


def gram_matrix(states: Sequence[StateVector]) -> np.ndarray:
    mat = np.array([s.amplitudes for s in states])
    return mat.conj() @ mat.T


def orthonormality_error(states: Sequence[StateVector]) -> float:
    """Max absolute deviation of the Gram matrix from the identity."""
    if not states:
        return 0.0
    g = gram_matrix(states)
    return float(np.max(np.abs(g - np.eye(len(states)))))


def gram_schmidt(states: Sequence[StateVector], tol: float = 1e-10) -> list[StateVector]:
    """Sequential orthonormalization in the given order.

    Uses two projection passes per vector, which keeps the Gram matrix at
    machine precision for the small sets used here.
    """
    out: list[np.ndarray] = []
    for idx, s in enumerate(states):
        if out:
            _check_same(states[0], s)
        v = np.array(s.amplitudes, dtype=complex)
        for _ in range(2):
            for u in out:
                v -= np.vdot(u, v) * u
        nrm = np.linalg.norm(v)
        if nrm < tol:
            raise DegeneracyError(f"state {idx} is linearly dependent on its predecessors")
        out.append(v / nrm)
    return [StateVector(v, states[0].register) for v in out]


def purify(states: Sequence[StateVector], weights: WeightVector) -> PurifiedState:
    """Build sum_v sqrt(w_v) |phi_v> (x) |e_v> with computational-basis ancillas."""
    k = len(states)
    if k != len(weights):
        raise DomainError(f"{k} states but {len(weights)} weights")
    err = orthonormality_error(states)
    if err > 1e-8:
        raise PreconditionError(f"states are not orthonormal (Gram deviation {err:.2e})")
    physical = states[0].register
    ancilla = QubitRegister(n_ancilla_qubits(k))
    blocks = np.zeros((physical.dim, ancilla.dim), dtype=complex)
    for nu, (s, w) in enumerate(zip(states, weights)):
        blocks[:, nu] = math.sqrt(w) * s.amplitudes
    reg = QubitRegister(physical.n_qubits + ancilla.n_qubits)
    return PurifiedState(physical, ancilla, StateVector(blocks.reshape(-1), reg), weights)


def ancilla_density(rho: PurifiedState) -> np.ndarray:
    """Reduced density matrix of the ancilla register (physical traced out)."""
    b = rho.blocks()
    return b.T @ b.conj()


def branch_expectation(rho: PurifiedState, observable, branch: int) -> float:
    """<rho| O (x) |a_v><a_v| |rho> / w_v for an observable on the physical register.

    ``observable`` is anything exposing ``matvec`` on raw physical amplitudes
    (a :class:`~ensemble_cqe.pauli.PauliSum`, for instance).
    """
    if not 0 <= branch < rho.n_states:
        raise DomainError(f"branch {branch} outside [0, {rho.n_states})")
    w = rho.weights[branch]
    if w <= 0:
        raise PreconditionError(f"branch {branch} has zero weight; its state is undefined")
    col = rho.blocks()[:, branch]
    val = np.vdot(col, observable.matvec(col)) / w
    return float(val.real)


def branch_states(rho: PurifiedState) -> list[StateVector]:
    """Recover the normalized ensemble members from a purified state."""
    b = rho.blocks()
    out = []
    for nu in range(rho.n_states):
        w = rho.weights[nu]
        if w <= 0:
            raise PreconditionError(f"branch {nu} has zero weight")
        out.append(StateVector(b[:, nu] / math.sqrt(w), rho.physical))
    return out
