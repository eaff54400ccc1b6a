"""Fermionic ladder operators, Jordan-Wigner mapping and symmetry sectors.

Mode ``p`` is identified with qubit ``p`` (basis-index bit ``n - 1 - p``) and
occupied means qubit state |1>.  Spin orbitals are interleaved: mode
``2 * spatial + spin`` with even modes alpha and odd modes beta.  Determinants
are ordered f+_{p1} f+_{p2} ... |vac> with ``p1 < p2 < ...``, which is the
convention produced by Jordan-Wigner strings on lower-indexed modes.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import DomainError, PreconditionError
from .pauli import PauliString, PauliSum, multiply

CREATE = True
ANNIHILATE = False

Factor = tuple[int, bool]


@dataclass(frozen=True)
class LadderTerm:
    """Ordered product of ladder operators; ``(mode, True)`` is a creator."""

    factors: tuple[Factor, ...]
    coefficient: complex = 1.0

    def adjoint(self) -> "LadderTerm":
        return LadderTerm(tuple((p, not c) for p, c in reversed(self.factors)),
                          complex(self.coefficient).conjugate())


class FermionOperator:
    """Sum of ladder-operator products acting on ``n_modes`` modes.

    Terms with identical factor sequences are merged; nothing is normal
    ordered, so the stored form always reproduces the intended Fock matrix.
    """

    def __init__(self, n_modes: int, terms: Iterable[LadderTerm] = ()):
        self.n_modes = n_modes
        merged: dict[tuple[Factor, ...], complex] = {}
        for t in terms:
            for p, _ in t.factors:
                if not 0 <= p < n_modes:
                    raise DomainError(f"mode {p} outside [0, {n_modes})")
            merged[t.factors] = merged.get(t.factors, 0.0) + complex(t.coefficient)
        self._terms = {k: v for k, v in merged.items() if v != 0}

    @property
    def terms(self) -> list[LadderTerm]:
        return [LadderTerm(f, c) for f, c in self._terms.items()]

    def __len__(self):
        return len(self._terms)

    def __repr__(self):
        return f"FermionOperator(n_modes={self.n_modes}, n_terms={len(self)})"

    @classmethod
    def zero(cls, n_modes: int) -> "FermionOperator":
        return cls(n_modes)

    @classmethod
    def identity(cls, n_modes: int, coeff: complex = 1.0) -> "FermionOperator":
        return cls(n_modes, [LadderTerm((), coeff)])

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        _check_modes(self, other)
        return FermionOperator(self.n_modes, self.terms + other.terms)

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + other * -1.0

    def __mul__(self, other):
        if isinstance(other, FermionOperator):
            _check_modes(self, other)
            return FermionOperator(self.n_modes, [
                LadderTerm(a.factors + b.factors, a.coefficient * b.coefficient)
                for a in self.terms for b in other.terms])
        return FermionOperator(self.n_modes, [LadderTerm(t.factors, t.coefficient * other)
                                              for t in self.terms])

    __rmul__ = __mul__

    def adjoint(self) -> "FermionOperator":
        return FermionOperator(self.n_modes, [t.adjoint() for t in self.terms])

    def to_sparse(self) -> sp.csr_matrix:
        """Matrix on the 2**n_modes Fock space, built from occupation numbers."""
        n = self.n_modes
        dim = 1 << n
        rows, cols, vals = [], [], []
        for factors, coeff in self._terms.items():
            r, c, v = _term_action(factors, n)
            rows.append(r)
            cols.append(c)
            vals.append(coeff * v)
        if not rows:
            return sp.csr_matrix((dim, dim), dtype=complex)
        mat = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(dim, dim)).tocsr()
        mat.sum_duplicates()
        return mat

    def to_matrix(self) -> np.ndarray:
        return self.to_sparse().toarray()


def _check_modes(a: FermionOperator, b: FermionOperator):
    if a.n_modes != b.n_modes:
        raise DomainError(f"mode count mismatch: {a.n_modes} vs {b.n_modes}")


def _term_action(factors: Sequence[Factor], n: int):
    """Rows, columns and signs of one ladder product on every basis state."""
    start = np.arange(1 << n, dtype=np.int64)
    idx = start.copy()
    sign = np.ones(idx.size)
    alive = np.ones(idx.size, dtype=bool)
    for p, create in reversed(factors):
        bit = 1 << (n - 1 - p)
        occupied = (idx & bit) != 0
        alive &= ~occupied if create else occupied
        # modes q < p sit on the bits above p's bit
        parity = np.bitwise_count(idx >> (n - p)).astype(np.int64) & 1
        sign *= 1 - 2 * parity
        idx = idx ^ bit
    return idx[alive], start[alive], sign[alive]


def ladder(p: int, create: bool, n_modes: int) -> FermionOperator:
    return FermionOperator(n_modes, [LadderTerm(((p, create),))])


def number_operator(n_modes: int, modes: Iterable[int] | None = None) -> FermionOperator:
    modes = range(n_modes) if modes is None else modes
    return FermionOperator(n_modes, [LadderTerm(((p, CREATE), (p, ANNIHILATE))) for p in modes])


def gamma_operator(p: int, q: int, s: int, t: int, n_modes: int) -> FermionOperator:
    """f+_p f+_q f_t f_s; the zero operator when p == q or s == t."""
    for m in (p, q, s, t):
        if not 0 <= m < n_modes:
            raise DomainError(f"mode {m} outside [0, {n_modes})")
    if p == q or s == t:
        return FermionOperator.zero(n_modes)
    return FermionOperator(n_modes, [LadderTerm(((p, CREATE), (q, CREATE),
                                                 (t, ANNIHILATE), (s, ANNIHILATE)))])


@functools.lru_cache(maxsize=None)
def jw_ladder(p: int, create: bool, n_modes: int) -> PauliSum:
    """(X_p -/+ i Y_p)/2 with a Z string on modes below ``p``."""
    z_mask = 0
    for q in range(p):
        z_mask |= 1 << (n_modes - 1 - q)
    bit = 1 << (n_modes - 1 - p)
    xs = PauliString(n_modes, bit, z_mask)
    ys = PauliString(n_modes, bit, z_mask | bit)
    return PauliSum(n_modes, {xs: 0.5, ys: -0.5j if create else 0.5j})


def jordan_wigner(f: FermionOperator) -> PauliSum:
    n = f.n_modes
    total: dict = {}
    for term in f.terms:
        prod = PauliSum.identity(n, term.coefficient)
        for p, create in term.factors:
            prod = multiply(prod, jw_ladder(p, create, n))
        for s, c in prod.terms.items():
            total[s] = total.get(s, 0.0) + c
    return PauliSum(n, total)


@functools.lru_cache(maxsize=None)
def jordan_wigner_gamma(p: int, q: int, s: int, t: int, n_modes: int) -> PauliSum:
    """Memoized mapped two-body operator."""
    return jordan_wigner(gamma_operator(p, q, s, t, n_modes))


def anticommutation_check(n_modes: int,
                          ladder_matrix: Callable[[int, bool, int], np.ndarray] | None = None,
                          tol: float = 1e-12) -> bool:
    """Exhaustively verify the canonical anticommutation relations.

    ``ladder_matrix(p, create, n)`` defaults to the Jordan-Wigner matrices.
    """
    if n_modes > 4:
        raise DomainError("exhaustive check limited to 4 modes")
    if ladder_matrix is None:
        def ladder_matrix(p, create, n):
            return jw_ladder(p, create, n).to_matrix()
    dim = 1 << n_modes
    ann = [np.asarray(ladder_matrix(p, False, n_modes)) for p in range(n_modes)]
    cre = [np.asarray(ladder_matrix(p, True, n_modes)) for p in range(n_modes)]
    eye = np.eye(dim)
    for p in range(n_modes):
        for q in range(n_modes):
            if np.max(np.abs(ann[p] @ cre[q] + cre[q] @ ann[p] - (p == q) * eye)) > tol:
                return False
            if np.max(np.abs(ann[p] @ ann[q] + ann[q] @ ann[p])) > tol:
                return False
    return True


@dataclass(frozen=True)
class SectorBasis:
    n_modes: int
    n_particles: int
    sz: float
    determinant_indices: tuple[int, ...] = field(default=())

    @property
    def dim(self) -> int:
        return len(self.determinant_indices)

    @property
    def n_qubits(self) -> int:
        return 0 if self.dim <= 1 else math.ceil(math.log2(self.dim))

    def occupations(self, index: int) -> list[int]:
        return [(index >> (self.n_modes - 1 - p)) & 1 for p in range(self.n_modes)]


def determinant_sz(index: int, n_modes: int) -> float:
    sz = 0.0
    for p in range(n_modes):
        if (index >> (n_modes - 1 - p)) & 1:
            sz += 0.5 if p % 2 == 0 else -0.5
    return sz


def sector_basis(n_modes: int, n_particles: int, sz: float) -> SectorBasis:
    if not 0 <= n_particles <= n_modes:
        raise DomainError(f"particle number {n_particles} outside [0, {n_modes}]")
    idx = tuple(i for i in range(1 << n_modes)
                if i.bit_count() == n_particles and determinant_sz(i, n_modes) == sz)
    return SectorBasis(n_modes, n_particles, sz, idx)


def _as_sparse(h, n_modes: int | None = None) -> sp.csr_matrix:
    if isinstance(h, (FermionOperator, PauliSum)):
        return h.to_sparse()
    if sp.issparse(h):
        return sp.csr_matrix(h)
    return sp.csr_matrix(np.asarray(h))


@dataclass(frozen=True)
class CompressedHamiltonian:
    """Symmetry block re-encoded on ``n_qubits`` qubits (zero padded)."""

    matrix: np.ndarray
    n_qubits: int
    basis: SectorBasis

    @property
    def dim(self) -> int:
        return self.basis.dim

    def block(self) -> np.ndarray:
        d = self.dim
        return self.matrix[:d, :d]

    def pauli(self) -> PauliSum:
        return PauliSum.from_matrix(self.matrix)

    def embed(self, vec) -> np.ndarray:
        """Map compressed amplitudes back to the full Fock space."""
        full = np.zeros(1 << self.basis.n_modes, dtype=complex)
        full[list(self.basis.determinant_indices)] = np.asarray(vec)[: self.dim]
        return full


def compress_to_sector(h, basis: SectorBasis, tol: float = 1e-12) -> CompressedHamiltonian:
    """Project ``h`` on a (N, S_z) block and pad it to a power-of-two size."""
    full = _as_sparse(h)
    if full.shape[0] != 1 << basis.n_modes:
        raise DomainError("operator and sector basis act on different mode counts")
    idx = np.array(basis.determinant_indices, dtype=np.int64)
    cols = full[:, idx].toarray()
    outside = np.ones(full.shape[0], dtype=bool)
    outside[idx] = False
    leak = np.max(np.abs(cols[outside]), initial=0.0)
    if leak > tol:
        raise PreconditionError(f"operator couples the sector to its complement ({leak:.2e})")
    block = cols[idx]
    size = 1 << basis.n_qubits
    mat = np.zeros((size, size), dtype=complex)
    mat[: basis.dim, : basis.dim] = block
    return CompressedHamiltonian(mat, basis.n_qubits, basis)
