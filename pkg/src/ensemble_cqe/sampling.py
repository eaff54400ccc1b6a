"""Seeded shot-noise layer: multinomial shot allocation and sampled estimators.

Measurement model: every Pauli term is measured independently; a shot on
term ``P`` returns +1 with probability ``(1 + <P>)/2``.  Summing ``n`` shots
is therefore one binomial draw, which is what the estimators below use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .acse import (
    Pool,
    ResidualTensor,
    SeparateEnsemble,
    TwoBodyPool,
    as_sparse,
    propagate,
)
from .exceptions import DomainError, PreconditionError
from .hilbert import PurifiedState, StateVector, WeightVector
from .pauli import PauliSum


@dataclass(frozen=True)
class RngStream:
    """Keyed random stream; ``child(*keys)`` derives independent sub-streams."""

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, *self.path))
        return np.random.default_rng(seq)

    def child(self, *keys: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + tuple(int(k) for k in keys))


@dataclass(frozen=True)
class ShotPlan:
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(np.sum(self.counts))


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def multinomial_allocate(n: int, w: WeightVector, rng) -> ShotPlan:
    """m ~ Multinomial(n, w)."""
    if n < 1:
        raise PreconditionError(f"need at least one shot, got {n}")
    p = np.asarray(w.weights if isinstance(w, WeightVector) else w, dtype=float)
    counts = _generator(rng).multinomial(n, p / p.sum())
    return ShotPlan(counts.astype(np.int64))


def proportional_allocate(n: int, w: WeightVector) -> ShotPlan:
    """Deterministic allocation N_v = floor(n w_v) (used to show the shot floor)."""
    p = np.asarray(w.weights if isinstance(w, WeightVector) else w, dtype=float)
    return ShotPlan(np.floor(n * p + 1e-12).astype(np.int64))


def _pauli_expectations(op: PauliSum, vec: np.ndarray) -> list[tuple[complex, float]]:
    """(coefficient, exact <P>) for every non-identity term; identity reported as <P> = 1."""
    out = []
    for s, c in op.terms.items():
        if s.is_identity():
            out.append((c, 1.0))
            continue
        single = PauliSum(op.n_qubits, {s: 1.0})
        out.append((c, float(np.vdot(vec, single.matvec(vec)).real)))
    return out


def _binomial_mean(gen: np.random.Generator, shots: int, expval: float) -> float:
    p = min(1.0, max(0.0, 0.5 * (1.0 + expval)))
    k = gen.binomial(shots, p)
    return (2.0 * k - shots) / shots


def sampled_expectation(h: PauliSum, v: StateVector, shots: int, rng) -> tuple[float, float]:
    """Shot-noise estimate of <v|h|v> and its standard error."""
    if shots < 1:
        raise PreconditionError(f"need at least one shot, got {shots}")
    if not h.is_hermitian():
        raise PreconditionError("sampled_expectation requires a Hermitian operator")
    gen = _generator(rng)
    estimate = 0.0
    var = 0.0
    for c, ev in _pauli_expectations(h, v.amplitudes):
        mean = _binomial_mean(gen, shots, ev)
        estimate += c.real * mean
        if shots > 1:
            s2 = shots / (shots - 1) * (1.0 - mean ** 2)
            var += c.real ** 2 * s2 / shots
    return float(estimate), float(np.sqrt(var))


def _branch_values(hmat, pool: Pool, vec: np.ndarray, eta: float, bound: float):
    """Exact per-term <lambda^z|P|lambda^z> for both branches, per pool entry."""
    branches = {}
    for z in (1, -1):
        lam = propagate(hmat, vec, z * eta, bound)
        per_entry = []
        for label in pool.labels:
            per_entry.append(_pauli_expectations(pool.gamma_pauli(label), lam))
        branches[z] = per_entry
    return branches


def sampled_residual(h, ens: SeparateEnsemble, plan: ShotPlan | int | None, shots_per_entry: int | None = 1,
                     rng=None, eta: float = 0.1, pool: Pool | None = None) -> ResidualTensor:
    """Weighted-random estimate of the finite-eta ensemble residual.

    Each measurement setting (one Pauli term of one ``Gamma``, on one branch
    ``z = +-1``) receives ``N`` shots distributed over the ensemble states.
    With a :class:`ShotPlan` every setting reuses its counts ``m``; with an
    integer ``N`` each setting draws its own ``m ~ Multinomial(N, w)``, so
    every shot independently picks its state with probability ``w_v`` and the
    estimator has exactly the statistics of measuring the purified state.

    Repetitions ``l = 1..m_v`` each contribute ``shots_per_entry`` shots; the
    accumulated sum is divided by ``N`` and by ``-eta`` to estimate the
    commutator residual.  ``shots_per_entry=None`` uses exact per-term values
    (infinite shots) while keeping the multinomial state sampling, and
    ``plan=None`` together with it replaces ``m_v / N`` by ``w_v`` (the
    noiseless limit, equal to :func:`finite_eta_residual`).
    """
    if not isinstance(ens, SeparateEnsemble):
        raise DomainError("sampled_residual works on the separate-state representation")
    pool = pool or TwoBodyPool(ens.n_qubits)
    k = len(ens.states)
    shared = isinstance(plan, ShotPlan)
    limit = plan is None
    if limit:
        if shots_per_entry is not None:
            raise PreconditionError("plan=None (infinite shots) requires shots_per_entry=None")
        n_total = 1
    elif shared:
        if len(plan.counts) != k:
            raise DomainError(f"plan has {len(plan.counts)} entries for {k} states")
        n_total = plan.total
    else:
        n_total = int(plan)
        if n_total < 1:
            raise PreconditionError("need at least one shot")
    if not 0 < eta < 1:
        raise PreconditionError(f"eta must lie in (0, 1), got {eta}")
    stream = rng if isinstance(rng, RngStream) else RngStream(0 if rng is None else int(rng))
    hmat = as_sparse(h)
    bound = float(abs(hmat).sum(axis=1).max())
    values = [_branch_values(hmat, pool, s.amplitudes, eta, bound) for s in ens.states]
    n_entries = len(pool.labels)
    reps = shots_per_entry or 1
    acc = np.zeros(n_entries, dtype=complex)
    noise_gen = stream.child(0).generator()
    alloc_stream = stream.child(1)
    setting = 0
    for e in range(n_entries):
        for z in (1, -1):
            n_terms = len(values[0][z][e])
            for t in range(n_terms):
                if limit:
                    counts = np.asarray(ens.weights.weights, dtype=float)
                elif shared:
                    counts = plan.counts
                else:
                    counts = multinomial_allocate(n_total, ens.weights, alloc_stream.child(setting)).counts
                setting += 1
                coeff = values[0][z][e][t][0]
                total = 0.0
                for nu in range(k):
                    m = counts[nu]
                    if m == 0:
                        continue
                    ev = values[nu][z][e][t][1]
                    if shots_per_entry is None:
                        total += m * ev
                    else:
                        # sum over m repetitions of per-repetition means
                        total += m * _binomial_mean(noise_gen, int(m) * reps, ev)
                acc[e] += z * coeff * total / (2j)
    estimate = -(acc / n_total) / eta
    return ResidualTensor(pool, np.ascontiguousarray(estimate.real).reshape(pool.shape))


def sampled_purified_residual(h, rho: PurifiedState, shots: int, rng=None, eta: float = 0.1,
                              pool: Pool | None = None) -> ResidualTensor:
    """Same estimator measured on the purified state: ``shots`` shots per setting."""
    if shots < 1:
        raise PreconditionError("need at least one shot")
    pool = pool or TwoBodyPool(rho.physical.n_qubits)
    stream = rng if isinstance(rng, RngStream) else RngStream(0 if rng is None else int(rng))
    gen = stream.child(0).generator()
    hmat = as_sparse(h)
    bound = float(abs(hmat).sum(axis=1).max())
    blocks = rho.blocks()
    acc = np.zeros(len(pool.labels), dtype=complex)
    for z in (1, -1):
        lam = propagate(hmat, blocks, z * eta, bound)
        for e, label in enumerate(pool.labels):
            for s, c in pool.gamma_pauli(label).terms.items():
                single = PauliSum(pool.n_qubits, {s: 1.0})
                ev = float(np.sum(lam.conj() * single.matvec(lam)).real)
                acc[e] += z * c * _binomial_mean(gen, shots, ev) / (2j)
    estimate = -acc / eta
    return ResidualTensor(pool, np.ascontiguousarray(estimate.real).reshape(pool.shape))


def estimator_statistics(trials: Sequence[ResidualTensor]) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise sample mean and unbiased sample variance."""
    if len(trials) < 2:
        raise PreconditionError("need at least two trials")
    shape = trials[0].entries.shape
    if any(t.entries.shape != shape for t in trials):
        raise DomainError("trials have different shapes")
    data = np.stack([t.entries for t in trials])
    return data.mean(axis=0), data.var(axis=0, ddof=1)
