"""Ensemble CQE drivers: the purified (parallel) and weighted-random algorithms.

Each iteration evaluates the residual tensor ``r`` of the current ensemble,
builds ``A = sum_k r_k (Gamma_k - Gamma_k^dagger)`` and moves every state by
the same unitary ``exp(theta* A)``, with ``theta*`` from a line search on the
ensemble energy.  The generator is scaled to unit residual norm so that the
search interval ``[-theta_bound, theta_bound]`` keeps its meaning as the
residual shrinks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .acse import (
    EnsembleState,
    Pool,
    SeparateEnsemble,
    TwoBodyPool,
    as_sparse,
    eigenstate_overlaps,
    ensemble_residual,
    finite_eta_residual,
    overlap_table,
)
from .exceptions import CapacityError, DegeneracyError, DomainError, PreconditionError
from .fermion import SectorBasis
from .hilbert import PurifiedState, StateVector, WeightVector, orthonormality_error, purify
from .sampling import RngStream, multinomial_allocate, sampled_purified_residual, sampled_residual

MODES = ("exact", "finite-eta", "sampled")
DIRECTIONS = ("conjugate", "steepest")
DENSE_CAP_QUBITS = 12
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``mode="sampled"`` uses ``n_total`` shots per measurement setting and
    ``shots_per_entry`` shots per repetition; ``shots_per_entry=None`` is the
    infinite-shot switch and, together with ``n_total=None``, the noiseless
    limit.  ``shared_plan`` reuses one multinomial plan per iteration instead
    of drawing one per setting.

    ``direction="steepest"`` steps along the residual itself;
    ``"conjugate"`` mixes in the previous step (Polak-Ribiere), which removes
    the zigzag of steepest descent when the ensemble energy is anisotropic.
    """

    eta: float = 0.3
    delta: float = 1e-8
    max_iterations: int = 500
    theta_bound: float = 1.0
    theta_tolerance: float = 1e-6
    mode: str = "exact"
    n_total: int | None = 64
    shots_per_entry: int | None = 1
    seed: int = 0
    shared_plan: bool = False
    normalize_generator: bool = True
    direction: str = "conjugate"

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise DomainError(f"eta must lie in (0, 1), got {self.eta}")
        if self.delta <= 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if self.max_iterations < 0:
            raise DomainError("max_iterations must be non-negative")
        if self.theta_bound <= 0 or self.theta_tolerance <= 0:
            raise DomainError("theta_bound and theta_tolerance must be positive")
        if self.direction not in DIRECTIONS:
            raise DomainError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "sampled":
            if self.n_total is None and self.shots_per_entry is not None:
                raise DomainError("n_total=None needs shots_per_entry=None")
            if self.n_total is not None and self.n_total < 1:
                raise DomainError("n_total must be at least 1")


@dataclass
class IterationRecord:
    iteration: int
    ensemble_energy: float
    per_state_energies: np.ndarray
    residual_frobenius_sq: float
    theta_star: float
    orthonormality_error: float
    norm_error: float
    overlaps: np.ndarray | None = None
    target_overlaps: np.ndarray | None = None


@dataclass
class Trajectory:
    records: list[IterationRecord]
    converged: bool
    final_states: EnsembleState
    states: list[StateVector] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        """Number of unitary updates applied."""
        return len(self.records) - 1

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.ensemble_energy for r in self.records])


# -- oracle ------------------------------------------------------------------

def exact_diagonalize(h, k: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``k`` eigenpairs of a Hermitian operator by dense diagonalization."""
    if hasattr(h, "n_qubits"):
        dim = 1 << h.n_qubits
    elif hasattr(h, "n_modes"):
        dim = 1 << h.n_modes
    else:
        dim = h.shape[0]
    if dim > 1 << DENSE_CAP_QUBITS:
        raise CapacityError(f"dense diagonalization capped at 2^{DENSE_CAP_QUBITS}, got {dim}")
    mat = h.to_matrix() if hasattr(h, "to_matrix") else as_sparse(h).toarray()
    k = dim if k is None else k
    if not 1 <= k <= dim:
        raise DomainError(f"cannot take {k} eigenpairs of a {dim}-dimensional operator")
    if not np.allclose(mat, mat.conj().T, atol=1e-12):
        raise PreconditionError("operator is not Hermitian")
    evals, evecs = np.linalg.eigh(mat)
    return evals[:k], evecs[:, :k]


# -- seeding -----------------------------------------------------------------

def _diagonal(h) -> np.ndarray:
    return np.real(as_sparse(h).diagonal())


def initial_guesses(h, k: int, basis: SectorBasis | None = None) -> list[StateVector]:
    """The ``k`` basis determinants with the lowest diagonal energy (ties by index)."""
    diag = _diagonal(h)
    candidates = np.arange(diag.size) if basis is None else np.asarray(basis.determinant_indices)
    if not 1 <= k <= candidates.size:
        raise DomainError(f"cannot pick {k} determinants from {candidates.size}")
    # round so that symmetry-equal diagonals tie exactly and fall back to the index
    keys = np.round(diag[candidates], 10)
    order = np.lexsort((candidates, keys))[:k]
    out = []
    for idx in candidates[order]:
        v = np.zeros(diag.size, dtype=complex)
        v[idx] = 1.0
        out.append(StateVector(v))
    return out


def _truncate(amps: np.ndarray, keep: int) -> np.ndarray:
    order = np.argsort(-np.abs(amps), kind="stable")[:keep]
    v = np.zeros_like(amps)
    v[order] = amps[order]
    return v / np.linalg.norm(v)


def warm_start(previous: Sequence[StateVector], keep: int = 2) -> list[StateVector]:
    """Seed from the ``keep`` dominant determinants of each previous state.

    States are truncated, renormalized and orthonormalized in index order; a
    state that becomes dependent on its predecessors gets one more determinant.
    """
    if orthonormality_error(previous) > 1e-8:
        raise PreconditionError("previous states must be orthonormal")
    out: list[np.ndarray] = []
    for j, s in enumerate(previous):
        amps = np.asarray(s.amplitudes, dtype=complex)
        for n_keep in (keep, keep + 1):
            v = _truncate(amps, n_keep)
            for _ in range(2):
                for u in out:
                    v = v - np.vdot(u, v) * u
            nrm = np.linalg.norm(v)
            if nrm > 1e-8:
                out.append(v / nrm)
                break
        else:
            raise DegeneracyError(f"warm-start state {j} is linearly dependent on its predecessors")
    return [StateVector(v) for v in out]


# -- line search ---------------------------------------------------------------

class _Propagator:
    """exp(theta A) through eigendecompositions of the Hermitian matrix iA.

    ``A`` and ``H`` are split into the connected components of their joint
    sparsity pattern (the symmetry sectors they both conserve) and each block
    is diagonalized on its own, so roundoff cannot couple sectors that the
    exact dynamics keeps apart.
    """

    def __init__(self, a_op, hmat):
        a = sp.csr_matrix(as_sparse(a_op))
        scale = max(abs(a).max(), 1.0) if a.nnz else 1.0
        if a.nnz and abs(a + a.conj().T).max() > 1e-10 * scale:
            raise PreconditionError("generator is not anti-Hermitian")
        dim = a.shape[0]
        pattern = (abs(a) + abs(sp.csr_matrix(hmat))).tocsr()
        n_blocks, labels = connected_components(pattern, directed=False)
        self.blocks = []
        dense_a = a.toarray()
        dense_h = sp.csr_matrix(hmat).toarray() if sp.issparse(hmat) else np.asarray(hmat)
        for k in range(n_blocks):
            idx = np.flatnonzero(labels == k)
            lam, vecs = np.linalg.eigh(1j * dense_a[np.ix_(idx, idx)])
            h_eig = vecs.conj().T @ dense_h[np.ix_(idx, idx)] @ vecs
            self.blocks.append((idx, lam, vecs, h_eig))
        self.dim = dim

    def apply(self, theta: float, cols: np.ndarray) -> np.ndarray:
        # exp(theta A) = V exp(-i theta lam) V^dagger since A = -i V lam V^dagger
        out = np.empty_like(cols, dtype=complex)
        for idx, lam, vecs, _ in self.blocks:
            out[idx] = vecs @ (np.exp(-1j * theta * lam)[:, None] * (vecs.conj().T @ cols[idx]))
        return out

    def energy_function(self, cols: np.ndarray, weights: np.ndarray) -> Callable[[float], float]:
        parts = []
        for idx, lam, vecs, h_eig in self.blocks:
            c0 = vecs.conj().T @ cols[idx]
            if np.any(c0):
                parts.append((lam, h_eig, c0))

        def energy(theta: float) -> float:
            total = np.zeros(cols.shape[1])
            for lam, h_eig, c0 in parts:
                c = np.exp(-1j * theta * lam)[:, None] * c0
                total += np.sum(c.conj() * (h_eig @ c), axis=0).real
            return float(weights @ total)

        return energy


def minimize_on_interval(f: Callable[[float], float], bound: float, tol: float,
                         n_scan: int = 33) -> tuple[float, float]:
    """Scan ``[-bound, bound]`` on ``n_scan`` points, refine by golden section.

    Never returns a point worse than ``theta = 0``.
    """
    grid = np.linspace(-bound, bound, n_scan)
    grid[n_scan // 2] = 0.0
    values = np.array([f(t) for t in grid])
    f0 = values[n_scan // 2]
    i = int(np.argmin(values))
    best_t, best_f = float(grid[i]), float(values[i])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_scan - 1)]
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
    for t, v in ((c, fc), (d, fd)):
        if v < best_f:
            best_t, best_f = float(t), float(v)
    if not best_f < f0:
        return 0.0, float(f0)
    return best_t, best_f


def _columns(ens: EnsembleState) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(ens, PurifiedState):
        blocks = ens.blocks()
        return blocks, np.ones(blocks.shape[1])
    return ens.matrix(), np.asarray(ens.weights.weights)


def line_search_theta(h, a_op, ens: EnsembleState, bound: float = 1.0,
                      tol: float = 1e-6) -> tuple[float, float]:
    """theta* minimizing the ensemble energy along exp(theta A) on ``[-bound, bound]``."""
    if bound <= 0:
        raise DomainError("bound must be positive")
    hmat = as_sparse(h)
    cols, weights = _columns(ens)
    prop = _Propagator(a_op, hmat)
    return minimize_on_interval(prop.energy_function(cols, weights), bound, tol)


# -- drivers -----------------------------------------------------------------

def _state_matrix(initial_states: Sequence[StateVector], w: WeightVector) -> np.ndarray:
    if len(initial_states) != len(w):
        raise DomainError(f"{len(initial_states)} states but {len(w)} weights")
    if orthonormality_error(initial_states) > 1e-8:
        raise PreconditionError("initial states must be orthonormal")
    return np.array([s.amplitudes for s in initial_states], dtype=complex).T


def _record(n: int, hmat, phi: np.ndarray, w: np.ndarray, r_sq: float, oracle) -> IterationRecord:
    per_state = np.sum(phi.conj() * (hmat @ phi), axis=0).real
    gram = phi.conj().T @ phi
    ortho = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    norm_err = float(np.max(np.abs(np.linalg.norm(phi, axis=0) - 1.0)))
    rec = IterationRecord(n, float(w @ per_state), per_state, r_sq, 0.0, ortho, norm_err)
    if oracle is not None:
        evals, evecs = oracle
        states = [StateVector(c) for c in phi.T]
        rec.overlaps = overlap_table(states, evecs)
        rec.target_overlaps = eigenstate_overlaps(states, evals, evecs)
    return rec


def _search_direction(r: np.ndarray, prev_r, prev_p, conjugate: bool) -> np.ndarray:
    """Descent coefficients: -r, or Polak-Ribiere (restarted when not downhill)."""
    p = -r
    if conjugate and prev_p is not None:
        gamma = max(0.0, float(np.sum(r * (r - prev_r)) / np.sum(prev_r * prev_r)))
        q = -r + gamma * prev_p
        if np.sum(q * r) < 0:
            p = q
    return p


def _run(h, initial_states, w, config: SolverConfig, pool: Pool | None, oracle, residual_fn,
         wrap) -> Trajectory:
    w = w if isinstance(w, WeightVector) else WeightVector(np.asarray(w, dtype=float))
    phi = _state_matrix(initial_states, w)
    hmat = as_sparse(h)
    n_qubits = int(np.log2(phi.shape[0]))
    pool = pool or TwoBodyPool(n_qubits)
    weights = np.asarray(w.weights)
    records = []
    converged = False
    prev_r = prev_p = None
    for n in range(config.max_iterations + 1):
        ens = wrap(phi, w)
        r = residual_fn(hmat, ens, pool, n)
        rec = _record(n, hmat, phi, weights, r.frobenius_sq, oracle)
        records.append(rec)
        if r.frobenius_sq <= config.delta:
            converged = True
            break
        if n == config.max_iterations:
            break
        p = _search_direction(r.entries, prev_r, prev_p, config.direction == "conjugate")
        scale = np.sqrt(np.sum(p * p)) if config.normalize_generator else 1.0
        prop = _Propagator(pool.generator(p / scale), hmat)
        cols, col_w = _columns(ens)
        theta, _ = minimize_on_interval(prop.energy_function(cols, col_w), config.theta_bound,
                                        config.theta_tolerance)
        rec.theta_star = theta
        if theta == 0.0:
            if config.mode != "sampled":
                # no descent along a deterministic direction: repeating would not help
                break
            prev_r = prev_p = None
            continue
        phi = prop.apply(theta, phi)
        prev_r, prev_p = r.entries, np.sign(theta) * p
    states = [StateVector(c) for c in phi.T]
    return Trajectory(records, converged, wrap(phi, w), states)


def _purified(phi: np.ndarray, w: WeightVector) -> PurifiedState:
    return purify([StateVector(c) for c in phi.T], w)


def _separate(phi: np.ndarray, w: WeightVector) -> SeparateEnsemble:
    return SeparateEnsemble(tuple(StateVector(c) for c in phi.T), w)


def parallel_cqe(h, initial_states: Sequence[StateVector], w, config: SolverConfig = SolverConfig(),
                 pool: Pool | None = None, oracle=None) -> Trajectory:
    """Purified-ensemble CQE: one residual per iteration measured on |rho(w)>.

    ``oracle=(eigenvalues, eigenvectors)`` adds overlap tables to the records.
    """
    stream = RngStream(config.seed, stream_id=1)

    def residual(hmat, ens, pool, n):
        if config.mode == "exact":
            return ensemble_residual(hmat, ens, pool)
        if config.mode == "finite-eta" or config.n_total is None or config.shots_per_entry is None:
            return finite_eta_residual(hmat, ens, config.eta, pool)
        shots = config.n_total * config.shots_per_entry
        return sampled_purified_residual(hmat, ens, shots, stream.child(n), config.eta, pool)

    return _run(h, initial_states, w, config, pool, oracle, residual, _purified)


def weighted_random_cqe(h, initial_states: Sequence[StateVector], w,
                        config: SolverConfig = SolverConfig(mode="sampled"),
                        pool: Pool | None = None, oracle=None) -> Trajectory:
    """Separate-state CQE: every shot picks a state with probability ``w_v``."""
    stream = RngStream(config.seed, stream_id=2)

    def residual(hmat, ens, pool, n):
        if config.mode == "exact":
            return ensemble_residual(hmat, ens, pool)
        if config.mode == "finite-eta":
            return finite_eta_residual(hmat, ens, config.eta, pool)
        plan = config.n_total
        if config.shared_plan and plan is not None:
            plan = multinomial_allocate(plan, ens.weights, stream.child(n, 0))
        return sampled_residual(hmat, ens, plan, config.shots_per_entry, stream.child(n, 1),
                                config.eta, pool)

    return _run(h, initial_states, w, config, pool, oracle, residual, _separate)
