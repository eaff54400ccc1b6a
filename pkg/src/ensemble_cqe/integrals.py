"""STO-3G integrals for hydrogen clusters, closed-shell RHF, and the
second-quantized molecular Hamiltonian.

All quantities are in atomic units (Bohr, Hartree).  Two-electron integrals
use chemists' notation ``eri[p, q, r, s] = (pq|rs)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .exceptions import DomainError, GeometryError, PreconditionError, SCFError, UnsupportedElementError
from .fermion import ANNIHILATE, CREATE, FermionOperator, LadderTerm

ANGSTROM_TO_BOHR = 1.8897259886

# standard STO-3G hydrogen 1s contraction (zeta = 1.24 already folded in)
STO3G_H_EXPONENTS = np.array([3.42525091, 0.62391373, 0.16885540])
STO3G_H_COEFFS = np.array([0.15432897, 0.53532814, 0.44463454])

NUCLEAR_CHARGE = {"H": 1}


@dataclass(frozen=True)
class Geometry:
    atoms: tuple[tuple[str, tuple[float, float, float]], ...]
    charge: int = 0
    multiplicity: int = 1

    @classmethod
    def from_angstrom(cls, atoms, charge: int = 0, multiplicity: int = 1) -> "Geometry":
        return cls(tuple((el, tuple(float(c) * ANGSTROM_TO_BOHR for c in pos)) for el, pos in atoms),
                   charge, multiplicity)

    @classmethod
    def hydrogen_chain(cls, n_atoms: int, spacing_angstrom: float) -> "Geometry":
        """Linear equidistant H_n along z, centred at the origin."""
        offset = (n_atoms - 1) / 2
        return cls.from_angstrom([("H", (0.0, 0.0, (i - offset) * spacing_angstrom))
                                  for i in range(n_atoms)])

    @property
    def n_electrons(self) -> int:
        return sum(NUCLEAR_CHARGE.get(el, 0) for el, _ in self.atoms) - self.charge

    def coordinates(self) -> np.ndarray:
        return np.array([pos for _, pos in self.atoms], dtype=float)

    def translated(self, shift) -> "Geometry":
        shift = np.asarray(shift, dtype=float)
        return Geometry(tuple((el, tuple(np.asarray(pos) + shift)) for el, pos in self.atoms),
                        self.charge, self.multiplicity)


@dataclass
class IntegralSet:
    n_spatial: int
    e_nuc: float
    h_core: np.ndarray
    eri: np.ndarray
    basis_label: str = "STO-3G"
    n_electrons: int | None = None
    ms2: int = 0

    def check_symmetry(self, tol: float = 1e-12):
        if np.max(np.abs(self.h_core - self.h_core.T), initial=0.0) > tol:
            raise PreconditionError("one-electron integrals are not symmetric")
        g = self.eri
        for perm in _ERI_PERMUTATIONS:
            if np.max(np.abs(g - g.transpose(perm)), initial=0.0) > tol:
                raise PreconditionError("two-electron integrals lack 8-fold symmetry")


_ERI_PERMUTATIONS = [
    (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
    (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0),
]


@dataclass
class MolecularOrbitals:
    coefficients: np.ndarray
    orbital_energies: np.ndarray
    scf_energy: float
    converged: bool = True
    iterations: int = 0
    method: str = "rhf"


@dataclass(frozen=True)
class SCFConfig:
    max_cycles: int = 200
    damping: float = 0.5
    energy_tol: float = 1e-10
    density_tol: float = 1e-8


def boys0(x):
    """F0(x) = 1/2 sqrt(pi/x) erf(sqrt x), with a series near zero."""
    x = np.asarray(x, dtype=float)
    small = x < 1e-8
    safe = np.where(small, 1.0, x)
    val = 0.5 * np.sqrt(np.pi / safe) * erf(np.sqrt(safe))
    return np.where(small, 1.0 - x / 3.0, val)


def _primitive_norms(alpha):
    return (2.0 * alpha / np.pi) ** 0.75


def build_ao_integrals(geometry: Geometry):
    """Overlap matrix and AO-basis :class:`IntegralSet` for a hydrogen cluster."""
    for el, _ in geometry.atoms:
        if el.capitalize() != "H":
            raise UnsupportedElementError(f"built-in STO-3G engine supports H only, got {el!r}")
    coords = geometry.coordinates()
    n = len(coords)
    if n == 0:
        raise GeometryError("geometry has no atoms")
    for a, b in itertools.combinations(range(n), 2):
        if np.linalg.norm(coords[a] - coords[b]) <= 1e-6:
            raise GeometryError(f"atoms {a} and {b} coincide")
    charges = np.ones(n)

    alpha = STO3G_H_EXPONENTS
    d = STO3G_H_COEFFS * _primitive_norms(alpha)
    # renormalize the contraction: tabulated coefficients carry 8 digits only
    self_overlap = np.einsum("i,j,ij->", d, d, (np.pi / (alpha[:, None] + alpha[None, :])) ** 1.5)
    d = d / np.sqrt(self_overlap)

    # primitive pair quantities, indices (A, B, i, j)
    a_i = alpha[None, None, :, None]
    a_j = alpha[None, None, None, :]
    p = a_i + a_j
    mu = a_i * a_j / p
    rab2 = np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=-1)[:, :, None, None]
    kab = np.exp(-mu * rab2)
    dd = d[:, None] * d[None, :]
    # product centres, shape (A, B, i, j, 3)
    centre = (a_i[..., None] * coords[:, None, None, None, :]
              + a_j[..., None] * coords[None, :, None, None, :]) / p[..., None]

    s_prim = (np.pi / p) ** 1.5 * kab
    overlap = np.einsum("ij,abij->ab", dd, s_prim)
    kinetic = np.einsum("ij,abij->ab", dd, mu * (3.0 - 2.0 * mu * rab2) * s_prim)

    nuclear = np.zeros((n, n))
    for c in range(n):
        rpc2 = np.sum((centre - coords[c]) ** 2, axis=-1)
        nuclear -= charges[c] * np.einsum("ij,abij->ab", dd,
                                          2.0 * np.pi / p * kab * boys0(p * rpc2))

    # (ab|cd) over primitive quadruples, computed for a<=b, c<=d, ab<=cd then symmetrized
    eri = np.zeros((n, n, n, n))
    pairs = [(a, b) for a in range(n) for b in range(a + 1)]
    for x, (a, b) in enumerate(pairs):
        for y, (c, e) in enumerate(pairs[: x + 1]):
            p1 = p[0, 0][:, :, None, None]
            p2 = p[0, 0][None, None, :, :]
            pref = 2.0 * np.pi ** 2.5 / (p1 * p2 * np.sqrt(p1 + p2))
            k = kab[a, b][:, :, None, None] * kab[c, e][None, None, :, :]
            rpq2 = np.sum((centre[a, b][:, :, None, None, :] - centre[c, e][None, None, :, :, :]) ** 2,
                          axis=-1)
            val = np.einsum("ij,kl,ijkl->", dd, dd, pref * k * boys0(p1 * p2 / (p1 + p2) * rpq2))
            for i, j, k_, l in ((a, b, c, e), (b, a, c, e), (a, b, e, c), (b, a, e, c),
                                (c, e, a, b), (e, c, a, b), (c, e, b, a), (e, c, b, a)):
                eri[i, j, k_, l] = val

    e_nuc = 0.0
    for a, b in itertools.combinations(range(n), 2):
        e_nuc += charges[a] * charges[b] / np.linalg.norm(coords[a] - coords[b])

    overlap = 0.5 * (overlap + overlap.T)
    h_core = kinetic + nuclear
    h_core = 0.5 * (h_core + h_core.T)
    ints = IntegralSet(n, float(e_nuc), h_core, eri, "STO-3G",
                       n_electrons=geometry.n_electrons, ms2=geometry.multiplicity - 1)
    return overlap, ints


def _fix_signs(c: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive."""
    c = c.copy()
    for k in range(c.shape[1]):
        j = np.argmax(np.abs(c[:, k]) - 1e-10 * np.arange(c.shape[0]))
        if c[j, k] < 0:
            c[:, k] *= -1
    return c


def _lowdin(overlap: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(overlap)
    if vals[0] <= 1e-8:
        raise PreconditionError(f"near-singular overlap (smallest eigenvalue {vals[0]:.2e})")
    return vecs @ np.diag(vals ** -0.5) @ vecs.T


def _fock(h, eri, dens):
    j = np.einsum("pqrs,rs->pq", eri, dens)
    k = np.einsum("prqs,rs->pq", eri, dens)
    return h + j - 0.5 * k


def restricted_hartree_fock(overlap: np.ndarray, ao: IntegralSet, n_electrons: int,
                            config: SCFConfig = SCFConfig()) -> MolecularOrbitals:
    """Closed-shell RHF with damped density fixed-point iterations.

    Starts from the core-Hamiltonian guess.  Raises :class:`SCFError` (carrying
    the last energy) if both convergence criteria are not met in
    ``config.max_cycles`` cycles.
    """
    if n_electrons % 2 or n_electrons <= 0:
        raise PreconditionError(f"closed-shell RHF needs a positive even electron count, got {n_electrons}")
    n_occ = n_electrons // 2
    if n_occ > ao.n_spatial:
        raise PreconditionError("more occupied orbitals than basis functions")
    x = _lowdin(overlap)
    h = ao.h_core

    def diagonalize(fock):
        eps, cp = np.linalg.eigh(x.T @ fock @ x)
        return eps, _fix_signs(x @ cp)

    eps, c = diagonalize(h)
    dens = 2.0 * c[:, :n_occ] @ c[:, :n_occ].T
    energy = None
    for cycle in range(1, config.max_cycles + 1):
        fock = _fock(h, ao.eri, dens)
        new_energy = 0.5 * np.sum(dens * (h + fock)) + ao.e_nuc
        eps, c = diagonalize(fock)
        target = 2.0 * c[:, :n_occ] @ c[:, :n_occ].T
        new_dens = (1.0 - config.damping) * target + config.damping * dens
        d_change = np.max(np.abs(target - dens))
        e_change = abs(new_energy - energy) if energy is not None else np.inf
        dens, energy = new_dens, new_energy
        if e_change < config.energy_tol and d_change < config.density_tol:
            fock = _fock(h, ao.eri, target)
            eps, c = diagonalize(fock)
            final = 0.5 * np.sum(target * (h + fock)) + ao.e_nuc
            return MolecularOrbitals(c, eps, float(final), True, cycle, "rhf")
    raise SCFError(f"RHF not converged in {config.max_cycles} cycles", last_energy=energy)


def core_hamiltonian_orbitals(overlap: np.ndarray, ao: IntegralSet,
                              n_electrons: int) -> MolecularOrbitals:
    """Fallback orbitals diagonalizing h_core in the Lowdin basis."""
    x = _lowdin(overlap)
    eps, cp = np.linalg.eigh(x.T @ ao.h_core @ x)
    c = _fix_signs(x @ cp)
    n_occ = n_electrons // 2
    dens = 2.0 * c[:, :n_occ] @ c[:, :n_occ].T
    fock = _fock(ao.h_core, ao.eri, dens)
    energy = 0.5 * np.sum(dens * (ao.h_core + fock)) + ao.e_nuc
    return MolecularOrbitals(c, eps, float(energy), False, 0, "core")


def molecular_orbitals(overlap, ao, n_electrons, config: SCFConfig = SCFConfig()) -> MolecularOrbitals:
    """RHF orbitals, falling back to core-Hamiltonian orbitals if SCF fails."""
    try:
        return restricted_hartree_fock(overlap, ao, n_electrons, config)
    except SCFError:
        return core_hamiltonian_orbitals(overlap, ao, n_electrons)


def transform_to_mo(ao: IntegralSet, mos: MolecularOrbitals) -> IntegralSet:
    c = np.asarray(mos.coefficients)
    if c.shape[0] != ao.n_spatial:
        raise DomainError(f"{c.shape[0]}-row coefficients for {ao.n_spatial} basis functions")
    h = c.T @ ao.h_core @ c
    g = np.einsum("pqrs,pi->iqrs", ao.eri, c)
    g = np.einsum("iqrs,qj->ijrs", g, c)
    g = np.einsum("ijrs,rk->ijks", g, c)
    g = np.einsum("ijks,sl->ijkl", g, c)
    return IntegralSet(c.shape[1], ao.e_nuc, 0.5 * (h + h.T), _symmetrize_eri(g),
                       ao.basis_label, ao.n_electrons, ao.ms2)


def _symmetrize_eri(g: np.ndarray) -> np.ndarray:
    acc = g.copy()
    for perm in _ERI_PERMUTATIONS:
        acc += g.transpose(perm)
    return acc / 8.0


def build_hamiltonian(mo: IntegralSet, tol: float = 1e-12) -> FermionOperator:
    """Second-quantized H over 2*n_spatial interleaved spin orbitals.

    H = e_nuc + sum h_pq f+_{p s} f_{q s}
        + 1/2 sum (pq|rs) f+_{p s} f+_{r t} f_{s t} f_{q s}
    """
    mo.check_symmetry(1e-10)
    n = mo.n_spatial
    n_modes = 2 * n
    terms = [LadderTerm((), mo.e_nuc)] if mo.e_nuc else []
    for p, q in itertools.product(range(n), repeat=2):
        if abs(mo.h_core[p, q]) < tol:
            continue
        for spin in (0, 1):
            terms.append(LadderTerm(((2 * p + spin, CREATE), (2 * q + spin, ANNIHILATE)),
                                    mo.h_core[p, q]))
    for p, q, r, s in itertools.product(range(n), repeat=4):
        v = mo.eri[p, q, r, s]
        if abs(v) < tol:
            continue
        for sig, tau in itertools.product((0, 1), repeat=2):
            a, b = 2 * p + sig, 2 * r + tau
            c, d = 2 * s + tau, 2 * q + sig
            if a == b or c == d:
                continue
            terms.append(LadderTerm(((a, CREATE), (b, CREATE), (c, ANNIHILATE), (d, ANNIHILATE)),
                                    0.5 * v))
    return FermionOperator(n_modes, terms)


def hydrogen_chain_integrals(n_atoms: int, spacing_angstrom: float,
                             scf: SCFConfig = SCFConfig()) -> tuple[IntegralSet, MolecularOrbitals]:
    """Convenience pipeline: geometry -> AO integrals -> orbitals -> MO integrals."""
    geom = Geometry.hydrogen_chain(n_atoms, spacing_angstrom)
    s, ao = build_ao_integrals(geom)
    mos = molecular_orbitals(s, ao, geom.n_electrons, scf)
    return transform_to_mo(ao, mos), mos
