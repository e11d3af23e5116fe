"""Build Pauli-sum Hamiltonians, expand them to matrices, and compute
exact ground energies.

Run: python3 demos/01_pauli_hamiltonians.py
"""

import numpy as np

from qracle import (
    FermionicTerm,
    PauliString,
    PauliSum,
    bundled_h2_path,
    expand_to_matrix,
    fermi_hubbard,
    heisenberg_xyz,
    ising_2d,
    jordan_wigner,
    load_h2,
    min_eigenvalue,
    multiply_strings,
)

# --- Pauli algebra basics ---------------------------------------------------

phase, product = multiply_strings(PauliString("XZ"), PauliString("YZ"))
print(f"(X@Z) * (Y@Z) = {phase} * {product}")

h = PauliSum.from_terms(2, [(0.5, PauliString("XX")), (0.5, PauliString("XX"))])
print(f"duplicate terms merge: {h.simplify().as_dict()}")

# --- spin-chain models --------------------------------------------------------

ring = heisenberg_xyz(4, 1.0, 1.0, 1.0)
m = expand_to_matrix(ring)
print(f"\nisotropic 4-site ring: {len(ring)} terms, "
      f"{len(m.entries)} matrix entries, ground energy {min_eigenvalue(m):+.6f}")

lattice = ising_2d(2, 4, j=1.0, mu=0.5)
print(f"2x4 Ising lattice: {len(lattice)} terms, "
      f"ground energy {min_eigenvalue(expand_to_matrix(lattice)):+.6f}")

# --- fermions via the Jordan-Wigner mapping -----------------------------------

number_op = jordan_wigner(FermionicTerm.of((0, True), (0, False)), 1)
print(f"\nnumber operator on one mode: {number_op.as_dict()}")

hubbard = fermi_hubbard(4, t=1.0, u=0.5)
print(f"4-site hopping+interaction ring: {len(hubbard)} Pauli terms, "
      f"ground energy {min_eigenvalue(expand_to_matrix(hubbard)):+.6f}")

# --- the bundled molecular coefficients ----------------------------------------

blocks = load_h2(bundled_h2_path())
energies = []
for meta, hamiltonian in blocks[::25]:
    e0 = min_eigenvalue(expand_to_matrix(hamiltonian))
    energies.append((meta.params["bond_length_angstrom"], e0))
print("\nH2 dissociation samples (bond length in Angstrom, energy in Hartree):")
for bond, e0 in energies:
    bar = "#" * int((e0 + 1.2) * -50 / 1.2) if e0 < 0 else ""
    print(f"  {bond:5.2f}  {e0:+.6f}")
best = min(blocks, key=lambda p: min_eigenvalue(expand_to_matrix(p[1])))
print(f"minimum over the curve at {best[0].params['bond_length_angstrom']:.2f} A")
