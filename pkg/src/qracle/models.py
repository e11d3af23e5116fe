"""Constructors for the application Hamiltonian families.

Each constructor returns a simplified, Hermitian :class:`~qracle.pauli.PauliSum`
plus (via :class:`InstanceMeta`) the named couplings that later become graph
node features.  Ring models close the boundary periodically (the sums run
i = 0..n-1 with an i+1 index, which only makes sense on a ring).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError, ParseError, ShapeError
from .pauli import (
    FermionicTerm,
    PauliString,
    PauliSum,
    format_term,
    jordan_wigner_sum,
    parse_term_line,
)


class Application(str, enum.Enum):
    HEISENBERG_XYZ = "heisenberg_xyz"
    ISING_2D = "ising_2d"
    FERMI_HUBBARD = "fermi_hubbard"
    H2 = "h2"
    RANDOM_VQE = "random_vqe"


#: Ordered coupling names per application; the order fixes the trailing
#: node-feature layout.
PARAM_KEYS = {
    Application.HEISENBERG_XYZ: ("J1", "J2", "J3"),
    Application.ISING_2D: ("j", "mu"),
    Application.FERMI_HUBBARD: ("t", "U"),
    Application.H2: ("bond_length_angstrom",),
    Application.RANDOM_VQE: (),
}


@dataclass(frozen=True)
class InstanceMeta:
    application: Application
    index: int
    n_qubits: int
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        expected = PARAM_KEYS[self.application]
        if tuple(self.params.keys()) != expected:
            raise ShapeError(
                f"{self.application.value} expects params {expected}, "
                f"got {tuple(self.params.keys())}"
            )

    def param_values(self) -> tuple[float, ...]:
        return tuple(self.params[k] for k in PARAM_KEYS[self.application])


@dataclass(frozen=True)
class CouplingGrid:
    """Uniform coupling grid to draw instances from, without replacement."""

    axes: tuple[tuple[str, float, float, float], ...]
    count: int
    seed: int

    def axis_values(self) -> list[np.ndarray]:
        out = []
        for name, lo, hi, step in self.axes:
            if step <= 0:
                raise DomainError(f"axis {name}: step must be positive")
            if lo > hi:
                raise DomainError(f"axis {name}: min exceeds max")
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            out.append(lo + step * np.arange(n))
        return out

    @property
    def cardinality(self) -> int:
        return int(np.prod([len(v) for v in self.axis_values()]))


def sample_grid(grid: CouplingGrid) -> list[tuple[float, ...]]:
    """Draw ``grid.count`` distinct coupling tuples, seeded and deterministic."""
    values = grid.axis_values()
    total = int(np.prod([len(v) for v in values]))
    if grid.count > total:
        raise CapacityError(f"requested {grid.count} samples from a grid of {total}")
    rng = np.random.default_rng(grid.seed)
    flat = rng.choice(total, size=grid.count, replace=False)
    sizes = [len(v) for v in values]
    out = []
    for idx in flat:
        coords = np.unravel_index(int(idx), sizes)
        out.append(tuple(float(values[a][c]) for a, c in enumerate(coords)))
    return out


def _realified(h: PauliSum, tol: float = 1e-12) -> PauliSum:
    """Strip numerically-zero imaginary parts so Hermitian sums stay exactly real."""
    s = h.simplify()
    for c, _ in s.terms:
        if abs(c.imag) > tol:
            raise ValueError(f"expected real coefficients, found {c}")
    return PauliSum.from_terms(s.n_qubits, [(c.real, ps) for c, ps in s.terms])


def _two_site_string(n: int, i: int, k: int, letter: str) -> PauliString:
    ops = ["I"] * n
    ops[i] = letter
    ops[k] = letter
    return PauliString("".join(ops))


def heisenberg_xyz(n: int, j1: float, j2: float, j3: float) -> PauliSum:
    """Nearest-neighbour XX/YY/ZZ couplings on a periodic ring of ``n`` sites."""
    if n < 2:
        raise DomainError("heisenberg_xyz needs at least 2 sites")
    terms = []
    for i in range(n):
        k = (i + 1) % n
        for coup, letter in ((j1, "X"), (j2, "Y"), (j3, "Z")):
            terms.append((coup, _two_site_string(n, i, k, letter)))
    return _realified(PauliSum.from_terms(n, terms))


def ising_2d(rows: int, cols: int, j: float, mu: float,
             n_qubits: int | None = None) -> PauliSum:
    """-j * sum of ZZ over grid-adjacent pairs - mu * sum of Z, open boundary.

    Sites are numbered row-major on the rows x cols grid.  The field term is
    written with Z exactly as the model definition prints it.
    """
    if rows < 1 or cols < 1:
        raise DomainError("lattice must have at least one site")
    n = rows * cols
    if n_qubits is not None and n_qubits != n:
        raise ShapeError(f"{rows}x{cols} lattice has {n} sites, not {n_qubits}")
    terms = []
    for r in range(rows):
        for c in range(cols):
            site = r * cols + c
            if c + 1 < cols:
                terms.append((-j, _two_site_string(n, site, site + 1, "Z")))
            if r + 1 < rows:
                terms.append((-j, _two_site_string(n, site, site + cols, "Z")))
    for site in range(n):
        ops = ["I"] * n
        ops[site] = "Z"
        terms.append((-mu, PauliString("".join(ops))))
    return _realified(PauliSum.from_terms(n, terms))


def fermi_hubbard(n: int, t: float, u: float) -> PauliSum:
    """Spinless Fermi-Hubbard ring mapped to qubits via Jordan-Wigner.

    Hopping -t (c+_i c_{i+1} + h.c.) plus nearest-neighbour density-density
    interaction u * n_i n_{i+1}, both with i+1 taken mod n.
    """
    if n < 2:
        raise DomainError("fermi_hubbard needs at least 2 sites")
    terms = []
    for i in range(n):
        k = (i + 1) % n
        terms.append(FermionicTerm.of((i, True), (k, False), coefficient=-t))
        terms.append(FermionicTerm.of((k, True), (i, False), coefficient=-t))
        terms.append(
            FermionicTerm.of((i, True), (i, False), (k, True), (k, False), coefficient=u)
        )
    return _realified(jordan_wigner_sum(terms, n))


def random_hamiltonian(n: int, n_terms: int, coeff_range: tuple[float, float],
                       seed: int) -> PauliSum:
    """Uniformly drawn non-identity Pauli strings with uniform real coefficients.

    Strings are sampled without replacement (the all-identity string is
    excluded: it only shifts the spectrum), so the result is Hermitian by
    construction and has exactly ``n_terms`` terms.
    """
    if n_terms < 1:
        raise DomainError("need at least one term")
    space = 4**n - 1
    if n_terms > space:
        raise CapacityError(f"only {space} non-identity strings exist on {n} qubits")
    rng = np.random.default_rng(seed)
    if space <= 1 << 20:
        codes = rng.choice(space, size=n_terms, replace=False) + 1
    else:
        seen: list[int] = []
        taken = set()
        while len(seen) < n_terms:
            c = int(rng.integers(1, space + 1))
            if c not in taken:
                taken.add(c)
                seen.append(c)
        codes = np.array(seen)
    lo, hi = coeff_range
    coeffs = rng.uniform(lo, hi, size=n_terms)
    terms = []
    for code, coeff in zip(codes, coeffs):
        digits = []
        c = int(code)
        for _ in range(n):
            digits.append("IXYZ"[c % 4])
            c //= 4
        terms.append((float(coeff), PauliString("".join(reversed(digits)))))
    return PauliSum.from_terms(n, terms).simplify()


# --- H2 coefficient fixtures -------------------------------------------------
#
# Block format: a `# bond_length=<angstrom>` header line opens each instance,
# followed by term lines in the standard text format.  Other comment lines
# and blanks are ignored.

_H2_HEADER = "# bond_length="


def load_h2(path) -> list[tuple[InstanceMeta, PauliSum]]:
    """Load (meta, Hamiltonian) pairs from a bond-length-block coefficient file."""
    blocks: list[tuple[float, list[tuple[complex, PauliString]]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith(_H2_HEADER):
                try:
                    bond = float(line[len(_H2_HEADER):])
                except ValueError:
                    raise ParseError(f"bad bond length in {line!r}", line=lineno) from None
                blocks.append((bond, []))
                continue
            if line.startswith("#"):
                continue
            if not blocks:
                raise ParseError("term line before any bond_length header", line=lineno)
            blocks[-1][1].append(parse_term_line(line, lineno))
    out = []
    for index, (bond, terms) in enumerate(blocks):
        if not terms:
            raise ParseError(f"block at bond length {bond} has no terms")
        n = terms[0][1].n_qubits
        meta = InstanceMeta(Application.H2, index, n, {"bond_length_angstrom": bond})
        out.append((meta, PauliSum.from_terms(n, terms)))
    return out


def dump_h2(instances, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for meta, h in instances:
            bond = meta.params["bond_length_angstrom"]
            fh.write(f"{_H2_HEADER}{bond:.17g}\n")
            for c, s in h.terms:
                fh.write(format_term(c, s) + "\n")


def bundled_h2_path():
    """Path of the checked-in STO-3G H2 coefficient fixture."""
    from importlib.resources import files

    return files("qracle").joinpath("data/h2_sto3g.txt")
