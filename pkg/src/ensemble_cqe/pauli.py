"""Sparse Pauli-string operator algebra.

A Pauli string is stored as two bitmasks over basis-index bits (qubit ``i``
maps to bit ``n - 1 - i``).  With ``Y = i X Z`` per qubit, a string acts as

    P |b> = i**nY * (-1)**popcount(b & z) |b ^ x>

which makes both composition and matrix-vector products bitwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .exceptions import DomainError, NumericalError, PreconditionError
from .hilbert import QubitRegister, StateVector

PRUNE_TOL = 1e-14
_LETTERS = "IXYZ"
_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_FROM_XZ = {(bool(x), bool(z)): k for k, (x, z) in _XZ.items()}
_IPOW = (1, 1j, -1, -1j)


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        n = len(label)
        x = z = 0
        for i, ch in enumerate(label.upper()):
            if ch not in _XZ:
                raise DomainError(f"invalid Pauli letter {ch!r}")
            xb, zb = _XZ[ch]
            bit = 1 << (n - 1 - i)
            x |= bit * xb
            z |= bit * zb
        return cls(n, x, z)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        label = ["I"] * n_qubits
        label[qubit] = letter
        return cls.from_label("".join(label))

    @property
    def label(self) -> str:
        out = []
        for i in range(self.n_qubits):
            bit = 1 << (self.n_qubits - 1 - i)
            out.append(_FROM_XZ[(bool(self.x & bit), bool(self.z & bit))])
        return "".join(out)

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def __repr__(self):
        return f"PauliString({self.label!r})"


def compose(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, c)`` with ``a @ b == phase * c``."""
    if a.n_qubits != b.n_qubits:
        raise DomainError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")
    x3, z3 = a.x ^ b.x, a.z ^ b.z
    k = (a.n_y + b.n_y + 2 * _popcount(a.z & b.x) - _popcount(x3 & z3)) % 4
    return _IPOW[k], PauliString(a.n_qubits, x3, z3)


def commutes(a: PauliString, b: PauliString) -> bool:
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


class PauliSum:
    """Immutable weighted sum of Pauli strings."""

    __slots__ = ("n_qubits", "terms", "_sparse")

    def __init__(self, n_qubits: int, terms: Mapping[PauliString, complex] | None = None):
        self.n_qubits = n_qubits
        clean = {}
        for s, c in (terms or {}).items():
            if s.n_qubits != n_qubits:
                raise DomainError(f"{s!r} does not act on {n_qubits} qubits")
            c = complex(c)
            if abs(c) >= PRUNE_TOL:
                clean[s] = c
        self.terms = clean
        self._sparse = None

    # construction helpers
    @classmethod
    def from_labels(cls, mapping: Mapping[str, complex]) -> "PauliSum":
        items = {PauliString.from_label(k): v for k, v in mapping.items()}
        n = len(next(iter(mapping)))
        out: dict[PauliString, complex] = {}
        for s, v in items.items():
            out[s] = out.get(s, 0) + v
        return cls(n, out)

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {PauliString(n_qubits): coeff})

    @classmethod
    def from_matrix(cls, mat, tol: float = PRUNE_TOL) -> "PauliSum":
        """Pauli decomposition ``c_P = tr(P M) / 2**n`` of a dense matrix."""
        mat = np.asarray(mat.toarray() if sp.issparse(mat) else mat, dtype=complex)
        dim = mat.shape[0]
        n = dim.bit_length() - 1
        if mat.shape != (dim, dim) or (1 << n) != dim:
            raise DomainError(f"matrix shape {mat.shape} is not 2^n square")
        idx = np.arange(dim)
        terms = {}
        for x in range(dim):
            cols = idx ^ x
            block = mat[cols, idx]  # M[b ^ x, b]
            for z in range(dim):
                s = PauliString(n, x, z)
                signs = 1 - 2 * (np.bitwise_count(idx & z).astype(np.int64) & 1)
                # tr(P M) = sum_b <b|P M|b>; P^dag = P so use <P b| M |b>
                val = np.sum(np.conj(_IPOW[s.n_y % 4]) * signs * block) / dim
                if abs(val) >= tol:
                    terms[s] = val
        return cls(n, terms)

    # basic protocol
    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.terms == other.terms

    def __repr__(self):
        body = ", ".join(f"{s.label}: {c:.6g}" for s, c in sorted(self.terms.items()))
        return f"PauliSum({self.n_qubits}, {{{body}}})"

    def coefficient(self, label: str) -> complex:
        return self.terms.get(PauliString.from_label(label), 0.0)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self.terms.values())

    def is_anti_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.real) <= tol for c in self.terms.values())

    def norm_bound(self) -> float:
        """Sum of |coefficients|, an upper bound on the operator norm."""
        return float(sum(abs(c) for c in self.terms.values()))

    # arithmetic
    def __add__(self, other):
        if isinstance(other, PauliSum):
            return add_scaled(self, 1.0, other)
        return add_scaled(self, other, PauliSum.identity(self.n_qubits))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PauliSum):
            return add_scaled(self, -1.0, other)
        return add_scaled(self, -other, PauliSum.identity(self.n_qubits))

    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return multiply(self, other)
        return PauliSum(self.n_qubits, {s: c * other for s, c in self.terms.items()})

    def __rmul__(self, scalar):
        return self * scalar

    def __matmul__(self, other):
        return multiply(self, other)

    # numerics
    def to_sparse(self) -> sp.csr_matrix:
        if self._sparse is None:
            dim = 1 << self.n_qubits
            idx = np.arange(dim)
            rows, cols, vals = [], [], []
            for s, c in self.terms.items():
                src = idx ^ s.x
                signs = 1 - 2 * (np.bitwise_count(src & s.z).astype(np.int64) & 1)
                rows.append(idx)
                cols.append(src)
                vals.append(c * _IPOW[s.n_y % 4] * signs)
            if rows:
                mat = sp.coo_matrix(
                    (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                    shape=(dim, dim),
                ).tocsr()
            else:
                mat = sp.csr_matrix((dim, dim), dtype=complex)
            mat.sum_duplicates()
            self._sparse = mat
        return self._sparse

    def to_matrix(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def matvec(self, vec) -> np.ndarray:
        """Matrix action on raw amplitudes of shape ``(dim,)`` or ``(dim, m)``."""
        vec = np.asarray(vec)
        if vec.shape[0] != 1 << self.n_qubits:
            raise DomainError(f"vector of length {vec.shape[0]} on {self.n_qubits} qubits")
        return self.to_sparse() @ vec


def add_scaled(a: PauliSum, c: complex, b: PauliSum) -> PauliSum:
    """a + c*b with near-zero coefficients pruned."""
    if a.n_qubits != b.n_qubits:
        raise DomainError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")
    out = dict(a.terms)
    for s, v in b.terms.items():
        out[s] = out.get(s, 0.0) + c * v
    return PauliSum(a.n_qubits, out)


def multiply(a: PauliSum, b: PauliSum) -> PauliSum:
    if a.n_qubits != b.n_qubits:
        raise DomainError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")
    out: dict[PauliString, complex] = {}
    for sa, ca in a.terms.items():
        for sb, cb in b.terms.items():
            phase, s = compose(sa, sb)
            out[s] = out.get(s, 0.0) + phase * ca * cb
    return PauliSum(a.n_qubits, out)


def adjoint(a: PauliSum) -> PauliSum:
    return PauliSum(a.n_qubits, {s: c.conjugate() for s, c in a.terms.items()})


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """[a, b] computed symbolically; commuting string pairs are skipped."""
    if a.n_qubits != b.n_qubits:
        raise DomainError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")
    out: dict[PauliString, complex] = {}
    for sa, ca in a.terms.items():
        for sb, cb in b.terms.items():
            if commutes(sa, sb):
                continue
            # anticommuting strings: ab - ba = 2ab
            phase, s = compose(sa, sb)
            out[s] = out.get(s, 0.0) + 2 * phase * ca * cb
    return PauliSum(a.n_qubits, out)


def _amplitudes(v) -> np.ndarray:
    return v.amplitudes if isinstance(v, StateVector) else np.asarray(v)


def apply(a: PauliSum, v) -> np.ndarray:
    """Unnormalized amplitudes of ``a |v>``."""
    return a.matvec(_amplitudes(v))


def expectation(a: PauliSum, v) -> complex:
    amps = _amplitudes(v)
    return complex(np.vdot(amps, a.matvec(amps)))


def taylor_expm_multiply(matvec, v: np.ndarray, norm_bound: float, tol: float = 1e-12,
                         max_terms: int = 200) -> np.ndarray:
    """exp(G) v by a truncated Taylor series with step splitting.

    ``norm_bound`` must bound ||G||; the generator is split into ``s`` steps
    with ||G||/s <= 1 so every series converges quickly.  Each step stops when
    the latest term drops below ``tol / s``, which then also bounds the tail.
    """
    steps = max(1, math.ceil(norm_bound))
    out = np.array(v, dtype=complex)
    step_tol = tol / steps
    for _ in range(steps):
        term = out.copy()
        acc = out.copy()
        for k in range(1, max_terms + 1):
            term = matvec(term) / (steps * k)
            acc += term
            # ||G/s|| <= 1 bounds the remaining tail by ||term|| / k
            if np.linalg.norm(term) <= step_tol:
                break
        else:
            raise NumericalError("Taylor series did not converge within the term cap")
        out = acc
    return out


def exp_action(g: PauliSum, v: StateVector, tol: float = 1e-12) -> StateVector:
    """exp(g)|v> for an anti-Hermitian ``g``; the result is renormalized."""
    if not g.is_anti_hermitian():
        raise PreconditionError("generator must be anti-Hermitian so exp(g) is unitary")
    if v.n_qubits != g.n_qubits:
        raise DomainError(f"{g.n_qubits}-qubit generator on a {v.n_qubits}-qubit state")
    if not g.terms:
        return v
    out = taylor_expm_multiply(g.matvec, v.amplitudes, g.norm_bound(), tol)
    return StateVector(out / np.linalg.norm(out), v.register)


def all_pauli_strings(n_qubits: int):
    """All 4**n strings in lexicographic I<X<Y<Z label order."""
    for letters in itertools.product(_LETTERS, repeat=n_qubits):
        yield PauliString.from_label("".join(letters))


def random_hamiltonian(m: int, seed: int) -> PauliSum:
    """Generic M-qubit Hamiltonian with standard-normal real coefficients."""
    if m < 1:
        raise DomainError("need at least one qubit")
    rng = np.random.default_rng(seed)
    strings = list(all_pauli_strings(m))
    coeffs = rng.standard_normal(len(strings))
    return PauliSum(m, dict(zip(strings, coeffs)))


def lift_to_physical(a: PauliSum, n_ancilla: int) -> PauliSum:
    """a (x) I on a register extended by ``n_ancilla`` least-significant qubits."""
    if n_ancilla < 0:
        raise DomainError("n_ancilla must be non-negative")
    if n_ancilla == 0:
        return a
    n = a.n_qubits + n_ancilla
    return PauliSum(n, {PauliString(n, s.x << n_ancilla, s.z << n_ancilla): c
                        for s, c in a.terms.items()})


__all__ = [
    "PauliString", "PauliSum", "compose", "commutes", "add_scaled", "multiply", "adjoint",
    "commutator", "apply", "expectation", "exp_action", "taylor_expm_multiply",
    "random_hamiltonian", "lift_to_physical", "all_pauli_strings", "QubitRegister",
]
