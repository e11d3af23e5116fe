"""One-off generator for the bundled H2 coefficient fixture.

Computes minimal-basis (STO-3G) H2 qubit Hamiltonians from closed-form
s-orbital Gaussian integrals, maps the second-quantized operator onto four
qubits with the package's Jordan-Wigner transform, and writes one
coefficient block per bond length (0.5 A to 4.97 A in 0.03 A steps).

Sanity anchors printed at the end: near the equilibrium bond length the
minimum eigenvalue must sit at about -1.137 Ha, and at the far end of the
range it must approach twice the isolated-atom energy (about -0.93 Ha).

Usage: python3 tools/gen_h2_fixture.py [out_path]
"""

import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from qracle.models import Application, InstanceMeta, dump_h2  # noqa: E402
from qracle.pauli import (  # noqa: E402
    FermionicTerm,
    PauliSum,
    expand_to_matrix,
    jordan_wigner_sum,
    min_eigenvalue,
)

BOHR_PER_ANGSTROM = 1.8897261254578281

# STO-3G hydrogen 1s: exponents and contraction coefficients.
ALPHA = np.array([3.425250914, 0.6239137298, 0.1688554040])
COEF = np.array([0.1543289673, 0.5353281423, 0.4446345422])


def _norm(a):
    return (2.0 * a / math.pi) ** 0.75


def _f0(t):
    if t < 1e-12:
        return 1.0
    return 0.5 * math.sqrt(math.pi / t) * math.erf(math.sqrt(t))


def _s_prim(a, b, r2):
    return (math.pi / (a + b)) ** 1.5 * math.exp(-a * b / (a + b) * r2)


def _t_prim(a, b, r2):
    mu = a * b / (a + b)
    return mu * (3.0 - 2.0 * mu * r2) * (math.pi / (a + b)) ** 1.5 * math.exp(-mu * r2)


def _v_prim(a, b, za, zb, zc):
    # Attraction of the (a, za)x(b, zb) product Gaussian to a unit charge at zc.
    p = a + b
    zp = (a * za + b * zb) / p
    k = math.exp(-a * b / p * (za - zb) ** 2)
    return -2.0 * math.pi / p * k * _f0(p * (zp - zc) ** 2)


def _eri_prim(a, b, c, d, za, zb, zc, zd):
    p, q = a + b, c + d
    zp = (a * za + b * zb) / p
    zq = (c * zc + d * zd) / q
    k = math.exp(-a * b / p * (za - zb) ** 2 - c * d / q * (zc - zd) ** 2)
    pref = 2.0 * math.pi**2.5 / (p * q * math.sqrt(p + q))
    return pref * k * _f0(p * q / (p + q) * (zp - zq) ** 2)


def _contracted():
    """Contraction coefficients folded with primitive norms, renormalized."""
    d = COEF * _norm(ALPHA)
    self_overlap = sum(
        d[i] * d[j] * _s_prim(ALPHA[i], ALPHA[j], 0.0)
        for i in range(3)
        for j in range(3)
    )
    return d / math.sqrt(self_overlap)


def h2_qubit_hamiltonian(bond_angstrom: float) -> PauliSum:
    r = bond_angstrom * BOHR_PER_ANGSTROM
    centers = [0.0, r]
    d = _contracted()

    s = np.zeros((2, 2))
    hcore = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            r2 = (centers[i] - centers[j]) ** 2
            for a, da in zip(ALPHA, d):
                for b, db in zip(ALPHA, d):
                    w = da * db
                    s[i, j] += w * _s_prim(a, b, r2)
                    hcore[i, j] += w * _t_prim(a, b, r2)
                    for zc in centers:
                        hcore[i, j] += w * _v_prim(a, b, centers[i], centers[j], zc)

    eri = np.zeros((2, 2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    acc = 0.0
                    for a, da in zip(ALPHA, d):
                        for b, db in zip(ALPHA, d):
                            for c, dc in zip(ALPHA, d):
                                for e, de in zip(ALPHA, d):
                                    acc += (
                                        da * db * dc * de
                                        * _eri_prim(a, b, c, e, centers[i], centers[j],
                                                    centers[k], centers[l])
                                    )
                    eri[i, j, k, l] = acc

    # Symmetry-adapted molecular orbitals (exact for the homonuclear dimer).
    cg = np.array([1.0, 1.0]) / math.sqrt(2.0 * (1.0 + s[0, 1]))
    cu = np.array([1.0, -1.0]) / math.sqrt(2.0 * (1.0 - s[0, 1]))
    c = np.stack([cg, cu], axis=1)

    h_mo = c.T @ hcore @ c
    eri_mo = np.einsum("up,vq,lr,ws,uvlw->pqrs", c, c, c, c, eri, optimize=True)

    # Spin orbitals 2p (alpha) and 2p+1 (beta) for spatial orbital p.
    n_spin = 4
    terms = []
    for pp in range(n_spin):
        for qq in range(n_spin):
            if pp % 2 != qq % 2:
                continue
            v = h_mo[pp // 2, qq // 2]
            if abs(v) > 1e-12:
                terms.append(FermionicTerm.of((pp, True), (qq, False), coefficient=v))
    for pp in range(n_spin):
        for qq in range(n_spin):
            for rr in range(n_spin):
                for ss in range(n_spin):
                    if pp % 2 != rr % 2 or qq % 2 != ss % 2:
                        continue
                    v = eri_mo[pp // 2, rr // 2, qq // 2, ss // 2]
                    if abs(v) > 1e-12:
                        terms.append(
                            FermionicTerm.of((pp, True), (qq, True), (ss, False), (rr, False),
                                             coefficient=0.5 * v)
                        )

    h = jordan_wigner_sum(terms, n_spin) + PauliSum.identity(n_spin, 1.0 / r)
    h = h.simplify()
    # Hermitian by construction; keep coefficients exactly real.
    return PauliSum.from_terms(4, [(cc.real, ps) for cc, ps in h.terms])


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "src/qracle/data/h2_sto3g.txt"
    )
    bonds = [0.5 + 0.03 * k for k in range(150)]
    instances = []
    for idx, bond in enumerate(bonds):
        h = h2_qubit_hamiltonian(bond)
        meta = InstanceMeta(Application.H2, idx, 4, {"bond_length_angstrom": bond})
        instances.append((meta, h))
        if idx % 25 == 0:
            print(f"  block {idx}: bond {bond:.2f} A, {len(h)} terms")
    dump_h2(instances, out)
    print(f"wrote {len(instances)} blocks to {out}")

    for probe in (0.74, 4.97):
        idx = min(range(150), key=lambda k: abs(bonds[k] - probe))
        e0 = min_eigenvalue(expand_to_matrix(instances[idx][1]))
        print(f"  min eigenvalue at {bonds[idx]:.2f} A: {e0:.6f} Ha")


if __name__ == "__main__":
    main()
