import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_cqe.acse import (
    PauliPool,
    ResidualTensor,
    SeparateEnsemble,
    TwoBodyPool,
    build_a_operator,
    degenerate_clusters,
    eigenstate_overlaps,
    ensemble_energy,
    ensemble_residual,
    exact_state_residual,
    finite_eta_residual,
    generator_matrix,
    overlap_table,
    state_energies,
)
from ensemble_cqe.exceptions import DomainError, PreconditionError
from ensemble_cqe.fermion import jordan_wigner
from ensemble_cqe.hilbert import StateVector, WeightVector, purify
from ensemble_cqe.pauli import random_hamiltonian

from conftest import fock_gamma, random_orthonormal

seeds = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="module")
def h2_fock(h2_sector):
    h = h2_sector[0]
    return h, h.to_matrix()


def commutator_expectation(hmat, g, v):
    return np.vdot(v, (hmat @ g - g @ hmat) @ v)


def separate(vectors, raw_weights):
    return SeparateEnsemble(tuple(StateVector(v) for v in vectors), WeightVector.from_raw(raw_weights))


def test_eigenvector_residual_vanishes(h2_fock):
    h, hm = h2_fock
    _, vecs = np.linalg.eigh(hm)
    for k in range(16):
        r = exact_state_residual(h, StateVector(vecs[:, k]))
        assert r.max_abs() < 1e-10


def test_determinant_residual_matches_dense(h2_fock):
    h, hm = h2_fock
    v = np.zeros(16)
    v[0b1100] = 1.0
    r = exact_state_residual(h, StateVector(v))
    pool = r.pool
    for p, q, s, t in pool.labels:
        ref = commutator_expectation(hm, fock_gamma(p, q, s, t, 4), v).real
        assert abs(r[(p, q, s, t)] - ref) < 1e-12
    assert r.frobenius_sq > 0


def test_residual_antisymmetry_on_real_states(h2_fock):
    h, _ = h2_fock
    rng = np.random.default_rng(0)
    r = exact_state_residual(h, StateVector(rng.standard_normal(16)).normalized())
    assert np.max(np.abs(r.entries + r.entries.T)) < 1e-10


def test_register_mismatch(h2_fock):
    h, _ = h2_fock
    with pytest.raises(DomainError):
        exact_state_residual(h, StateVector(np.eye(8)[0]))
    with pytest.raises(DomainError):
        exact_state_residual(h, StateVector(np.eye(16)[0]), PauliPool(3))


def test_any_eigenstate_subset_gives_zero(h2_fock):
    h, hm = h2_fock
    _, vecs = np.linalg.eigh(hm)
    for subset in ([0, 1, 2], [3, 7, 12], [15, 4]):
        ens = separate([vecs[:, i] for i in subset], list(range(len(subset), 0, -1)))
        assert ensemble_residual(h, ens).max_abs() < 1e-10
        assert ensemble_residual(h, purify(ens.states, ens.weights)).max_abs() < 1e-10


def test_single_state_reduction(h2_fock):
    h, _ = h2_fock
    v = random_orthonormal(np.random.default_rng(1), 16, 1, real=True)[:, 0]
    ens = separate([v], [1.0])
    a = ensemble_residual(h, ens).entries
    b = exact_state_residual(h, StateVector(v)).entries
    assert np.array_equal(a, b)


def test_separate_and_purified_agree(h2_fock):
    h, _ = h2_fock
    q = random_orthonormal(np.random.default_rng(2), 16, 3)
    ens = separate(q.T, [3, 2, 1])
    rho = purify(ens.states, ens.weights)
    assert np.max(np.abs(ensemble_residual(h, ens).entries
                         - ensemble_residual(h, rho).entries)) < 1e-10
    assert abs(ensemble_energy(h, ens) - ensemble_energy(h, rho)) < 1e-10
    assert np.allclose(state_energies(h, ens), state_energies(h, rho), atol=1e-10)
    assert np.max(np.abs(finite_eta_residual(h, ens, 0.1).entries
                         - finite_eta_residual(h, rho, 0.1).entries)) < 1e-10


def test_finite_eta_richardson(h2_fock):
    h, _ = h2_fock
    q = random_orthonormal(np.random.default_rng(3), 16, 2, real=True)
    ens = separate(q.T, [2, 1])
    exact = ensemble_residual(h, ens).entries
    err1 = np.max(np.abs(finite_eta_residual(h, ens, 0.02).entries - exact))
    err2 = np.max(np.abs(finite_eta_residual(h, ens, 0.01).entries - exact))
    assert 3 <= err1 / err2 <= 5
    # Richardson extrapolation removes the eta^2 term
    rich = (4 * finite_eta_residual(h, ens, 0.01).entries
            - finite_eta_residual(h, ens, 0.02).entries) / 3
    assert np.max(np.abs(rich - exact)) < err2 / 10


def test_finite_eta_eigenstates(h2_fock):
    h, hm = h2_fock
    _, vecs = np.linalg.eigh(hm)
    ens = separate([vecs[:, 0], vecs[:, 5]], [2, 1])
    norm = np.linalg.norm(hm, 2)
    for eta in (0.05, 0.3, 0.9):
        assert finite_eta_residual(h, ens, eta).max_abs() < eta ** 2 * norm * 1e-8


def test_finite_eta_first_step_nonzero(h2_sector):
    _, _, comp, _, _ = h2_sector
    ens = separate(np.eye(4)[[0, 1, 2, 3]], [9, 9, 1, 1])
    r = finite_eta_residual(comp.matrix, ens, 0.3, PauliPool(2))
    assert r.frobenius_sq > 1e-3


def test_finite_eta_range():
    h = random_hamiltonian(2, 0)
    ens = separate(np.eye(4)[:1], [1.0])
    for eta in (0.0, 1.0, -0.1):
        with pytest.raises(PreconditionError):
            finite_eta_residual(h, ens, eta, PauliPool(2))


def test_a_operator_zero():
    pool = TwoBodyPool(4)
    r = ResidualTensor(pool, np.zeros(pool.shape))
    assert len(build_a_operator(r)) == 0
    assert generator_matrix(r).nnz == 0


def test_a_operator_single_entry():
    pool = TwoBodyPool(4)
    entries = np.zeros(pool.shape)
    entries[pool.index(0, 1, 2, 3)] = 1.0
    a = build_a_operator(ResidualTensor(pool, entries))
    dense = jordan_wigner(a).to_matrix()
    ref = fock_gamma(0, 1, 2, 3, 4) - fock_gamma(2, 3, 0, 1, 4)
    assert np.allclose(dense, ref, atol=1e-14)
    assert np.max(np.abs(dense + dense.conj().T)) < 1e-14
    assert np.allclose(generator_matrix(ResidualTensor(pool, entries)).toarray(), ref, atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_a_operator_always_anti_hermitian(seed):
    rng = np.random.default_rng(seed)
    for pool in (TwoBodyPool(4), PauliPool(2)):
        a = generator_matrix(ResidualTensor(pool, rng.standard_normal(pool.shape))).toarray()
        assert np.max(np.abs(a + a.conj().T)) == 0


def test_descent_alignment(h2_fock):
    h, hm = h2_fock
    v = random_orthonormal(np.random.default_rng(4), 16, 1, real=True)[:, 0]
    r = exact_state_residual(h, StateVector(v))
    a = generator_matrix(r).toarray()
    # d/dtheta <v|exp(-theta A) H exp(theta A)|v> at 0 is <[H, A]>
    slope = commutator_expectation(hm, a, v).real
    assert slope == pytest.approx(2 * r.frobenius_sq, rel=1e-10)
    assert slope >= 0


def test_energy_saturates_bound(h2_sector):
    _, _, comp, evals, evecs = h2_sector
    w = WeightVector.from_raw([4, 3, 2, 1])
    ens = separate(evecs.T, w.weights)
    assert abs(ensemble_energy(comp.matrix, ens) - w.weights @ evals) < 1e-12
    one = separate([evecs[:, 1]], [1.0])
    assert abs(ensemble_energy(comp.matrix, one) - evals[1]) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), seeds)
def test_energy_variational_bound(k, seed):
    rng = np.random.default_rng(seed)
    h = random_hamiltonian(3, seed % 997)
    evals = np.linalg.eigvalsh(h.to_matrix())
    raw = np.sort(rng.uniform(0.05, 1, k))[::-1]
    ens = separate(random_orthonormal(rng, 8, k).T, raw)
    assert ensemble_energy(h, ens) >= ens.weights.weights @ evals[:k] - 1e-9


def test_overlaps_identity_and_bessel():
    h = random_hamiltonian(2, 7)
    evals, evecs = np.linalg.eigh(h.to_matrix())
    states = [StateVector(c) for c in evecs.T]
    assert np.allclose(eigenstate_overlaps(states, evals, evecs), 1)
    rng = np.random.default_rng(7)
    q = random_orthonormal(rng, 4, 3)
    table = overlap_table([StateVector(c) for c in q.T], evecs)
    assert np.all(table >= 0) and np.all(table <= 1 + 1e-12)
    assert np.all(table.sum(axis=0) <= 1 + 1e-12)


def test_overlaps_use_cluster_projector():
    evals = np.array([-1.0, -1.0 + 1e-10, 2.0, 3.0])
    evecs = np.eye(4)
    mixed = StateVector(np.array([0.6, 0.8, 0.0, 0.0]))
    other = StateVector(np.array([0.8, -0.6, 0.0, 0.0]))
    out = eigenstate_overlaps([mixed, other], evals, evecs)
    assert np.allclose(out, [1.0, 1.0])
    assert degenerate_clusters(evals) == [[0, 1], [2], [3]]


def test_overlaps_dimension_mismatch():
    with pytest.raises(DomainError):
        eigenstate_overlaps([StateVector(np.eye(8)[0])], [0.0, 1.0], np.eye(2))


@pytest.mark.parametrize("eps", [1e-4, 1e-5])
def test_gradient_identity_single_entries(h2_fock, eps):
    h, hm = h2_fock
    rng = np.random.default_rng(5)
    q = random_orthonormal(rng, 16, 3, real=True)
    ens = separate(q.T, [3, 2, 1])
    w = ens.weights.weights
    r = ensemble_residual(h, ens)
    for p, qq, s, t in [(0, 1, 2, 3), (0, 2, 1, 3), (1, 2, 0, 3), (0, 3, 1, 2)]:
        gen = fock_gamma(p, qq, s, t, 4)
        gen = gen - gen.conj().T

        def energy(x):
            u = scipy.linalg.expm(x * gen) @ q
            return float(w @ np.sum(u.conj() * (hm @ u), axis=0).real)

        fd = (energy(eps) - energy(-eps)) / (2 * eps)
        assert abs(fd - 2 * r[(p, qq, s, t)]) < 10 * eps ** 2 * np.linalg.norm(hm, 2) + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), seeds)
def test_stationarity_iff_eigenvectors(k, seed):
    rng = np.random.default_rng(seed)
    h = random_hamiltonian(2, seed % 1009)
    pool = PauliPool(2)
    evals, evecs = np.linalg.eigh(h.to_matrix())
    raw = np.arange(k, 0, -1)
    chosen = rng.choice(4, size=k, replace=False)
    ens = separate(evecs[:, chosen].T, raw)
    assert np.sqrt(ensemble_residual(h, ens, pool).frobenius_sq) < 1e-10
    # a small rotation away from the eigenbasis is detected
    mix = scipy.linalg.expm(0.05 * (lambda a: a - a.T)(rng.standard_normal((4, 4))))
    moved = separate((mix @ evecs[:, chosen]).T, raw)
    assert np.sqrt(ensemble_residual(h, moved, pool).frobenius_sq) > 1e-6


def test_complete_pauli_pool_size():
    assert PauliPool(2).shape == (15,)
    assert PauliPool(3, max_weight=1).shape == (9,)
