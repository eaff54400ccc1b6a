"""Ensemble anti-Hermitian contracted Schrodinger equation (ACSE) machinery.

Residual convention: entry ``k`` of a residual tensor is
``Re sum_v w_v <phi_v|[H, Gamma_k]|phi_v>``.  Along the anti-Hermitian
direction ``Gamma_k - Gamma_k^dagger`` the ensemble energy then changes at
rate ``2 * entry``.

Two operator pools are provided:

* :class:`TwoBodyPool` -- the fermionic two-body operators
  ``f+_p f+_q f_t f_s`` with ``p < q`` and ``s < t`` (molecular problems);
* :class:`PauliPool` -- ``Gamma_P = (i/2) P`` for Pauli strings (all of them
  by default).  Generic qubit Hamiltonians carry no fermionic structure and
  the fermionic pool degenerates on one or two modes, so qubit models use
  this pool instead.

Ensembles come in two representations with identical results: a
:class:`SeparateEnsemble` holding the K states and weights, and the
:class:`~ensemble_cqe.hilbert.PurifiedState`.  Purified quantities are
evaluated as ``(O (x) I)|rho>`` by acting on the physical factor of the
reshaped amplitude array.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from .exceptions import DomainError, NumericalError, PreconditionError
from .fermion import ANNIHILATE, CREATE, FermionOperator, LadderTerm, jordan_wigner_gamma, ladder
from .hilbert import PurifiedState, StateVector, WeightVector, orthonormality_error
from .pauli import PauliString, PauliSum, taylor_expm_multiply

DEGENERACY_TOL = 1e-8
IMAG_TOL = 1e-10


def as_sparse(h) -> sp.csr_matrix:
    """Sparse matrix of a PauliSum, FermionOperator, dense or sparse matrix."""
    if hasattr(h, "to_sparse"):
        return h.to_sparse()
    if sp.issparse(h):
        return sp.csr_matrix(h)
    return sp.csr_matrix(np.asarray(h, dtype=complex))


def _is_real(mat) -> bool:
    data = mat.data if sp.issparse(mat) else np.asarray(mat)
    return not np.iscomplexobj(data) or np.max(np.abs(np.imag(data)), initial=0.0) <= 1e-14


class TwoBodyPool:
    """Fermionic two-body operators indexed by ``(p, q, s, t)``, p<q, s<t."""

    kind = "two-body"

    def __init__(self, n_modes: int):
        if n_modes < 2:
            raise DomainError("two-body pool needs at least two modes")
        self.n_modes = n_modes
        self.n_qubits = n_modes
        self.pairs = list(itertools.combinations(range(n_modes), 2))
        self.shape = (len(self.pairs), len(self.pairs))

    @property
    def labels(self) -> list[tuple[int, int, int, int]]:
        return [(p, q, s, t) for (p, q) in self.pairs for (s, t) in self.pairs]

    def index(self, p: int, q: int, s: int, t: int) -> tuple[int, int]:
        return self.pairs.index((p, q)), self.pairs.index((s, t))

    @cached_property
    def _pair_stack(self) -> sp.csr_matrix:
        # rows [k*dim:(k+1)*dim] hold B_k = f_t f_s for pair k = (s, t), so
        # Gamma^{pq}_{st} = B_(pq)^dagger B_(st)
        mats = []
        for s, t in self.pairs:
            op = ladder(t, ANNIHILATE, self.n_modes) * ladder(s, ANNIHILATE, self.n_modes)
            mats.append(op.to_sparse())
        return sp.vstack(mats).tocsr()

    def _apply_pairs(self, vecs: np.ndarray) -> np.ndarray:
        dim = 1 << self.n_modes
        out = self._pair_stack @ vecs
        return out.reshape(len(self.pairs), dim, *vecs.shape[1:])

    def transition(self, bra: np.ndarray, ket: np.ndarray) -> np.ndarray:
        """<bra|Gamma_k|ket> for every pool member; 2-D inputs sum over columns."""
        b_bra = self._apply_pairs(bra)
        b_ket = self._apply_pairs(ket)
        if bra.ndim == 1:
            return b_bra.conj() @ b_ket.T
        return np.einsum("pia,sia->ps", b_bra.conj(), b_ket)

    def generator(self, coeffs: np.ndarray) -> sp.csr_matrix:
        """Sparse sum_k c_k (Gamma_k - Gamma_k^dagger)."""
        dim = 1 << self.n_modes
        b = self._pair_stack
        x = b.conj().T @ sp.kron(sp.csr_matrix(np.asarray(coeffs)), sp.identity(dim), format="csr") @ b
        return (x - x.conj().T).tocsr()

    def gamma_matrix(self, label) -> sp.csr_matrix:
        i, j = self.index(*label)
        dim = 1 << self.n_modes
        b = self._pair_stack
        return (b[i * dim:(i + 1) * dim].conj().T @ b[j * dim:(j + 1) * dim]).tocsr()

    def gamma_pauli(self, label) -> PauliSum:
        return jordan_wigner_gamma(*label, self.n_modes)

    def operator(self, coeffs: np.ndarray) -> FermionOperator:
        terms = []
        for (p, q, s, t), c in zip(self.labels, np.asarray(coeffs).reshape(-1)):
            if c == 0 or (p, q) == (s, t):
                continue
            terms.append(LadderTerm(((p, CREATE), (q, CREATE), (t, ANNIHILATE), (s, ANNIHILATE)), c))
            terms.append(LadderTerm(((s, CREATE), (t, CREATE), (q, ANNIHILATE), (p, ANNIHILATE)),
                                    -np.conj(c)))
        return FermionOperator(self.n_modes, terms)


class PauliPool:
    """``Gamma_P = (i/2) P`` for every non-identity Pauli string of weight <= max_weight.

    The default ``max_weight=None`` takes all strings, so the residual is the
    complete energy gradient and vanishes only at true stationary ensembles.
    """

    kind = "pauli"

    def __init__(self, n_qubits: int, max_weight: int | None = None):
        if n_qubits < 1:
            raise DomainError("Pauli pool needs at least one qubit")
        max_weight = n_qubits if max_weight is None else max_weight
        self.n_qubits = n_qubits
        self.max_weight = max_weight
        strings = []
        for w in range(1, max_weight + 1):
            for qubits in itertools.combinations(range(n_qubits), w):
                for letters in itertools.product("XYZ", repeat=w):
                    label = ["I"] * n_qubits
                    for qb, ch in zip(qubits, letters):
                        label[qb] = ch
                    strings.append(PauliString.from_label("".join(label)))
        self.strings = sorted(strings)
        self.shape = (len(self.strings),)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.strings]

    @cached_property
    def _matrices(self) -> list[sp.csr_matrix]:
        return [PauliSum(self.n_qubits, {s: 1.0}).to_sparse() for s in self.strings]

    def transition(self, bra: np.ndarray, ket: np.ndarray) -> np.ndarray:
        if bra.ndim == 1:
            return np.array([0.5j * np.vdot(bra, m @ ket) for m in self._matrices])
        return np.array([0.5j * np.sum(bra.conj() * (m @ ket)) for m in self._matrices])

    def generator(self, coeffs: np.ndarray) -> sp.csr_matrix:
        dim = 1 << self.n_qubits
        out = sp.csr_matrix((dim, dim), dtype=complex)
        for c, m in zip(np.asarray(coeffs).reshape(-1), self._matrices):
            if c != 0:
                out = out + (1j * c) * m
        return out.tocsr()

    def gamma_matrix(self, label) -> sp.csr_matrix:
        k = self.labels.index(label)
        return 0.5j * self._matrices[k]

    def gamma_pauli(self, label) -> PauliSum:
        return PauliSum(self.n_qubits, {PauliString.from_label(label): 0.5j})

    def operator(self, coeffs: np.ndarray) -> PauliSum:
        return PauliSum(self.n_qubits, {s: 1j * c for s, c in
                                        zip(self.strings, np.asarray(coeffs).reshape(-1))})


Pool = Union[TwoBodyPool, PauliPool]


@dataclass(frozen=True)
class ResidualTensor:
    """Real residual entries over a pool; ``entries.shape == pool.shape``."""

    pool: Pool
    entries: np.ndarray

    @property
    def frobenius_sq(self) -> float:
        return float(np.sum(self.entries ** 2))

    def __getitem__(self, label):
        if isinstance(self.pool, TwoBodyPool):
            return float(self.entries[self.pool.index(*label)])
        return float(self.entries[self.pool.labels.index(label)])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries), initial=0.0))


@dataclass(frozen=True)
class SeparateEnsemble:
    states: tuple[StateVector, ...]
    weights: WeightVector

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.states) != len(self.weights):
            raise DomainError(f"{len(self.states)} states but {len(self.weights)} weights")
        err = orthonormality_error(self.states)
        if err > 1e-8:
            raise PreconditionError(f"ensemble states are not orthonormal (deviation {err:.2e})")

    @property
    def n_qubits(self) -> int:
        return self.states[0].n_qubits

    def matrix(self) -> np.ndarray:
        """States as columns, shape ``(dim, K)``."""
        return np.array([s.amplitudes for s in self.states]).T


EnsembleState = Union[SeparateEnsemble, PurifiedState]


def _members(ens: EnsembleState):
    """Yield ``(weight_or_None, vecs)``: separate states one by one, purified as one block."""
    if isinstance(ens, PurifiedState):
        yield None, ens.blocks()
    else:
        for w, s in zip(ens.weights, ens.states):
            yield w, s.amplitudes


def _n_physical(ens: EnsembleState) -> int:
    return ens.physical.n_qubits if isinstance(ens, PurifiedState) else ens.n_qubits


def _real_entries(values: np.ndarray, check: bool) -> np.ndarray:
    if check:
        imag = np.max(np.abs(values.imag), initial=0.0)
        if imag > IMAG_TOL:
            raise NumericalError(f"residual has imaginary part {imag:.2e} for a real problem")
    return np.ascontiguousarray(values.real)


def _raw_residual(hmat, pool: Pool, vecs: np.ndarray) -> np.ndarray:
    hv = hmat @ vecs
    return pool.transition(hv, vecs) - pool.transition(vecs, hv)


def _check_register(hmat, pool: Pool, n_qubits: int):
    dim = 1 << n_qubits
    if hmat.shape != (dim, dim):
        raise DomainError(f"operator of shape {hmat.shape} on a {n_qubits}-qubit register")
    if pool.n_qubits != n_qubits:
        raise DomainError(f"{pool.n_qubits}-qubit pool on a {n_qubits}-qubit register")


def exact_state_residual(h, phi: StateVector, pool: Pool | None = None) -> ResidualTensor:
    """Re <phi|[H, Gamma_k]|phi> for all pool members."""
    pool = pool or TwoBodyPool(phi.n_qubits)
    hmat = as_sparse(h)
    _check_register(hmat, pool, phi.n_qubits)
    raw = _raw_residual(hmat, pool, phi.amplitudes)
    check = _is_real(hmat) and _is_real(phi.amplitudes)
    return ResidualTensor(pool, _real_entries(raw, check))


def ensemble_residual(h, ens: EnsembleState, pool: Pool | None = None) -> ResidualTensor:
    """Weighted residual sum_v w_v <phi_v|[H, Gamma]|phi_v>, either representation."""
    n = _n_physical(ens)
    pool = pool or TwoBodyPool(n)
    hmat = as_sparse(h)
    _check_register(hmat, pool, n)
    total = np.zeros(pool.shape, dtype=complex)
    check = _is_real(hmat)
    for w, vecs in _members(ens):
        check = check and _is_real(vecs)
        raw = _raw_residual(hmat, pool, vecs)
        total += raw if w is None else w * raw
    return ResidualTensor(pool, _real_entries(total, check))


def propagate(hmat, vecs: np.ndarray, t: float, norm_bound: float | None = None,
              tol: float = 1e-13) -> np.ndarray:
    """exp(i t H) applied to a vector or to every column of a block."""
    if norm_bound is None:
        norm_bound = float(abs(hmat).sum(axis=1).max())
    return taylor_expm_multiply(lambda v: 1j * t * (hmat @ v), vecs, abs(t) * norm_bound, tol)


def finite_eta_residual(h, ens: EnsembleState, eta: float, pool: Pool | None = None) -> ResidualTensor:
    """Residual recovered from expectation values of exp(+-i eta H)|.>.

    With ``D = <L+|Gamma|L+> - <L-|Gamma|L->`` one has
    ``D / (2i) = -eta <[H, Gamma]> + O(eta**3)``, so ``-D / (2i eta)``
    approximates the commutator residual to O(eta**2).
    """
    if not 0 < eta < 1:
        raise PreconditionError(f"eta must lie in (0, 1), got {eta}")
    n = _n_physical(ens)
    pool = pool or TwoBodyPool(n)
    hmat = as_sparse(h)
    _check_register(hmat, pool, n)
    bound = float(abs(hmat).sum(axis=1).max())
    total = np.zeros(pool.shape, dtype=complex)
    for w, vecs in _members(ens):
        plus = propagate(hmat, vecs, eta, bound)
        minus = propagate(hmat, vecs, -eta, bound)
        diff = pool.transition(plus, plus) - pool.transition(minus, minus)
        contrib = -diff / (2j * eta)
        total += contrib if w is None else w * contrib
    return ResidualTensor(pool, np.ascontiguousarray(total.real))


def build_a_operator(r: ResidualTensor):
    """A = sum_k r_k (Gamma_k - Gamma_k^dagger): FermionOperator or PauliSum."""
    return r.pool.operator(r.entries)


def generator_matrix(r: ResidualTensor, normalize: bool = False) -> sp.csr_matrix:
    """Sparse matrix of :func:`build_a_operator`, optionally scaled to unit residual norm."""
    coeffs = r.entries
    if normalize:
        nrm = np.sqrt(r.frobenius_sq)
        if nrm > 0:
            coeffs = coeffs / nrm
    return r.pool.generator(coeffs)


def ensemble_energy(h, ens: EnsembleState) -> float:
    hmat = as_sparse(h)
    total = 0.0
    for w, vecs in _members(ens):
        val = np.sum(vecs.conj() * (hmat @ vecs)).real
        total += val if w is None else w * val
    return float(total)


def state_energies(h, ens: EnsembleState) -> np.ndarray:
    hmat = as_sparse(h)
    if isinstance(ens, PurifiedState):
        b = ens.blocks()[:, : ens.n_states]
        return np.sum(b.conj() * (hmat @ b), axis=0).real / np.asarray(ens.weights)
    m = ens.matrix()
    return np.sum(m.conj() * (hmat @ m), axis=0).real


def degenerate_clusters(eigenvalues, tol: float = DEGENERACY_TOL) -> list[list[int]]:
    """Group ascending eigenvalues whose successive gaps are below ``tol``."""
    clusters: list[list[int]] = []
    for i, e in enumerate(eigenvalues):
        if clusters and e - eigenvalues[clusters[-1][-1]] < tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def eigenstate_overlaps(states: Sequence[StateVector], eigenvalues, eigenvectors,
                        tol: float = DEGENERACY_TOL) -> np.ndarray:
    """Per-state overlap with its target eigenstate (projector overlap for clusters).

    ``eigenvectors`` holds the oracle eigenvectors as columns, ascending.
    """
    vecs = np.asarray(eigenvectors)
    evals = np.asarray(eigenvalues)
    if vecs.shape[1] < len(states):
        raise DomainError("fewer oracle eigenvectors than states")
    if any(s.dim != vecs.shape[0] for s in states):
        raise DomainError("state and eigenvector dimensions differ")
    cluster_of = {}
    for cl in degenerate_clusters(evals, tol):
        for i in cl:
            cluster_of[i] = cl
    out = np.empty(len(states))
    for nu, s in enumerate(states):
        proj = vecs[:, cluster_of[nu]].conj().T @ s.amplitudes
        out[nu] = float(np.sum(np.abs(proj) ** 2))
    return out


def overlap_table(states: Sequence[StateVector], eigenvectors) -> np.ndarray:
    """Full table |<psi_mu|phi_nu>|^2, rows mu (eigenstates), columns nu."""
    vecs = np.asarray(eigenvectors)
    m = np.array([s.amplitudes for s in states]).T
    return np.abs(vecs.conj().T @ m) ** 2
