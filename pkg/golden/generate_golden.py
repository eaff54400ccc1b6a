"""Regenerate the reference energies in this directory.

Requires pyscf, which is *not* a dependency of the package; the values are
produced once by an independent program and committed.  Distances are in
Angstrom, energies in Hartree, geometries are linear equidistant chains
centred at the origin (same convention as ``Geometry.hydrogen_chain``).

    python golden/generate_golden.py
"""

import json
from pathlib import Path

import numpy as np
from pyscf import ao2mo, fci, gto, scf

BOHR_PER_ANGSTROM = 1.8897259886


def chain(n_atoms, spacing):
    offset = (n_atoms - 1) / 2
    return [("H", (0.0, 0.0, (i - offset) * spacing * BOHR_PER_ANGSTROM)) for i in range(n_atoms)]


def reference(n_atoms, spacing, nroots):
    mol = gto.M(atom=chain(n_atoms, spacing), unit="Bohr", basis="sto-3g", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    e_scf = mf.kernel()
    h1 = mf.mo_coeff.T @ mf.get_hcore() @ mf.mo_coeff
    h2 = ao2mo.restore(1, ao2mo.kernel(mol, mf.mo_coeff), mol.nao)
    solver = fci.direct_spin1.FCI()
    solver.conv_tol = 1e-13
    nelec = (n_atoms // 2, n_atoms // 2)
    energies, _ = solver.kernel(h1, h2, mol.nao, nelec, nroots=nroots, ecore=mol.energy_nuc())
    return {
        "distance_angstrom": spacing,
        "e_nuc": mol.energy_nuc(),
        "scf_energy": float(e_scf),
        "orbital_energies": [float(x) for x in mf.mo_energy],
        "sector_eigenvalues": [float(x) for x in np.atleast_1d(energies)],
    }


def main():
    here = Path(__file__).parent
    h2_points = sorted({0.7, 1.4 / BOHR_PER_ANGSTROM, *np.round(np.linspace(0.5, 5.0, 10), 10)})
    h4_points = sorted({1.0, 2.5, 2.9, 3.0, *np.round(np.linspace(0.7, 3.5, 8), 10)})
    data = {
        "program": "pyscf",
        "basis": "sto-3g",
        "sector": "N = n_atoms, S_z = 0 (all spin multiplicities)",
        "h2": {f"{d:.10f}": reference(2, float(d), 4) for d in h2_points},
        "h4": {f"{d:.10f}": reference(4, float(d), 8) for d in h4_points},
    }
    (here / "sto3g_hydrogen.json").write_text(json.dumps(data, indent=2) + "\n")


if __name__ == "__main__":
    main()
