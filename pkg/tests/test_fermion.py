import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_cqe.exceptions import DomainError, PreconditionError
from ensemble_cqe.fermion import (
    ANNIHILATE,
    CREATE,
    FermionOperator,
    LadderTerm,
    anticommutation_check,
    compress_to_sector,
    gamma_operator,
    jordan_wigner,
    ladder,
    number_operator,
    sector_basis,
)
from ensemble_cqe.pauli import PauliSum

from conftest import fock_matrix


def test_gamma_number_product():
    g = gamma_operator(0, 1, 0, 1, 2)
    assert np.allclose(jordan_wigner(g).to_matrix(), np.diag([0, 0, 0, 1]), atol=1e-15)


def test_gamma_antisymmetry_example():
    a = jordan_wigner(gamma_operator(0, 1, 1, 0, 2)).to_matrix()
    b = jordan_wigner(gamma_operator(0, 1, 0, 1, 2)).to_matrix()
    assert np.allclose(a, -b, atol=1e-15)


def test_gamma_zero_for_repeated_index():
    assert len(gamma_operator(1, 1, 0, 2, 3)) == 0


def test_gamma_mode_range():
    with pytest.raises(DomainError):
        gamma_operator(0, 4, 1, 2, 4)


def test_gamma_adjoint_all_four_modes():
    for p, q, s, t in itertools.product(range(4), repeat=4):
        g = jordan_wigner(gamma_operator(p, q, s, t, 4)).to_matrix()
        gd = jordan_wigner(gamma_operator(s, t, p, q, 4)).to_matrix()
        assert np.allclose(g.conj().T, gd, atol=1e-14)


def test_gamma_index_symmetry_dense():
    for p, q, s, t in itertools.product(range(4), repeat=4):
        g = fock_matrix(gamma_operator(p, q, s, t, 4))
        assert np.allclose(g, -fock_matrix(gamma_operator(q, p, s, t, 4)))
        assert np.allclose(g, -fock_matrix(gamma_operator(p, q, t, s, 4)))


def test_jw_single_creator():
    op = jordan_wigner(ladder(0, CREATE, 1))
    assert op.coefficient("X") == 0.5 and op.coefficient("Y") == -0.5j and len(op) == 2


def test_jw_number_operator():
    op = jordan_wigner(number_operator(1))
    assert op == PauliSum.from_labels({"I": 0.5, "Z": -0.5})


def random_two_body(rng, n, n_terms=8):
    terms = []
    for _ in range(n_terms):
        modes = rng.integers(0, n, 4)
        c = complex(rng.standard_normal(), rng.standard_normal())
        terms.append(LadderTerm(((modes[0], CREATE), (modes[1], CREATE),
                                 (modes[2], ANNIHILATE), (modes[3], ANNIHILATE)), c))
    return FermionOperator(n, terms)


def test_jw_random_three_mode_two_body():
    op = random_two_body(np.random.default_rng(0), 3)
    assert np.allclose(jordan_wigner(op).to_matrix(), fock_matrix(op), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_jw_isomorphism(n, seed):
    op = random_two_body(np.random.default_rng(seed), n)
    assert np.allclose(jordan_wigner(op).to_matrix(), fock_matrix(op), atol=1e-12)
    assert np.allclose(op.to_matrix(), fock_matrix(op), atol=1e-12)


def test_anticommutation():
    assert anticommutation_check(1)
    assert anticommutation_check(2)
    assert anticommutation_check(4)


def test_anticommutation_negative_control():
    # drop the Z string: plain qubit lowering operators commute across modes
    def broken(p, create, n):
        low = np.array([[0, 1], [0, 0]])
        mats = [np.eye(2)] * n
        mats[p] = low.T if create else low
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    assert not anticommutation_check(2, broken)


def test_sector_basis_examples():
    assert sector_basis(4, 2, 0).dim == 4
    assert sector_basis(2, 0, 0).determinant_indices == (0,)
    # brute-force count: choose 2 of 4 alpha and 2 of 4 beta modes
    assert sector_basis(8, 4, 0).dim == 36


def test_sector_basis_members():
    b = sector_basis(6, 3, 0.5)
    for idx in b.determinant_indices:
        occ = b.occupations(idx)
        assert sum(occ) == 3
        assert sum(occ[0::2]) - sum(occ[1::2]) == 1


def test_compress_identity_and_number():
    basis = sector_basis(4, 2, 0)
    ident = compress_to_sector(FermionOperator.identity(4), basis)
    assert np.allclose(ident.block(), np.eye(4))
    num = compress_to_sector(number_operator(4), basis)
    assert np.allclose(num.block(), 2 * np.eye(4))


def test_compress_rejects_leaking_operator():
    with pytest.raises(PreconditionError):
        compress_to_sector(ladder(0, CREATE, 4), sector_basis(4, 2, 0))


def test_compress_h2_spectrum(h2_sector):
    h, basis, comp, evals, _ = h2_sector
    assert comp.n_qubits == 2
    full = np.linalg.eigvalsh(h.to_matrix())
    # each sector eigenvalue appears in the full spectrum
    for ev in evals:
        assert np.min(np.abs(full - ev)) < 1e-10
    # sector block equals the full matrix restricted to the determinants
    idx = list(basis.determinant_indices)
    assert np.allclose(comp.block(), h.to_matrix()[np.ix_(idx, idx)], atol=1e-14)


def test_embed_round_trip(h2_sector):
    _, basis, comp, _, evecs = h2_sector
    full = comp.embed(evecs[:, 0])
    assert np.allclose(full[list(basis.determinant_indices)], evecs[:, 0])
    assert abs(np.linalg.norm(full) - 1) < 1e-12
