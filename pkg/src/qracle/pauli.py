"""Pauli-string algebra for qubit Hamiltonians.

A Hamiltonian is held as a weighted sum of Pauli strings (Kronecker
products of I, X, Y, Z with qubit 0 leftmost).  This module covers
construction and simplification of such sums, symbolic string
multiplication, the Jordan-Wigner image of fermionic operators, expansion
into a sparse Hermitian matrix, and exact minimum eigenvalues for
ground-truth energies.

Row/column indices are 0-based everywhere in the API except
:func:`pauli_matrix_entry`, whose contract is stated for 1-based indices;
the conversion lives inside that single function.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CapacityError, ParseError, ShapeError, ValidityError

PAULI_LETTERS = "IXYZ"

#: Coefficients below this magnitude are dropped by ``simplify`` and by
#: matrix expansion (double-precision noise floor).
PRUNE_TOL = 1e-12

#: Guard rail for dense 2^n expansion.
MAX_EXPAND_QUBITS = 12

_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Single-qubit products a*b = phase * c.
_MULT_TABLE = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


@dataclass(frozen=True)
class PauliString:
    """One operator per qubit, e.g. ``"XXIZ"``; qubit 0 is the leftmost letter."""

    ops: str

    def __post_init__(self):
        if not self.ops:
            raise ValidityError("Pauli string must cover at least one qubit")
        bad = set(self.ops) - set(PAULI_LETTERS)
        if bad:
            raise ValidityError(f"invalid Pauli letters {sorted(bad)} in {self.ops!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.ops)

    @property
    def weight(self) -> int:
        """Number of non-identity factors."""
        return sum(1 for c in self.ops if c != "I")

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def __getitem__(self, k):
        return self.ops[k]

    def __str__(self):
        return self.ops

    @staticmethod
    def identity(n: int) -> "PauliString":
        return PauliString("I" * n)


def multiply_strings(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Qubit-wise product a·b = phase · c with phase in {1, i, -1, -i}."""
    if len(a) != len(b):
        raise ShapeError(f"string lengths differ: {len(a)} vs {len(b)}")
    phase = 1 + 0j
    out = []
    for x, y in zip(a.ops, b.ops):
        ph, c = _MULT_TABLE[(x, y)]
        phase *= ph
        out.append(c)
    return phase, PauliString("".join(out))


@dataclass(frozen=True)
class PauliSum:
    """Weighted sum of equal-length Pauli strings on ``n_qubits`` qubits.

    Immutable; ``simplify`` returns a new sum with like strings merged and
    coefficients of magnitude <= PRUNE_TOL removed.  Coefficients may be
    complex; Hermiticity (all-real coefficients) is checked only where an
    operation requires it.
    """

    n_qubits: int
    terms: tuple[tuple[complex, PauliString], ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidityError("n_qubits must be >= 1")
        for _, s in self.terms:
            if s.n_qubits != self.n_qubits:
                raise ShapeError(
                    f"term {s.ops!r} has {s.n_qubits} qubits, expected {self.n_qubits}"
                )

    @staticmethod
    def from_terms(n_qubits: int, terms) -> "PauliSum":
        return PauliSum(n_qubits, tuple((complex(c), s) for c, s in terms))

    @staticmethod
    def zero(n_qubits: int) -> "PauliSum":
        return PauliSum(n_qubits, ())

    @staticmethod
    def identity(n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return PauliSum.from_terms(n_qubits, [(coeff, PauliString.identity(n_qubits))])

    def __len__(self):
        return len(self.terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n_qubits != other.n_qubits:
            raise ShapeError("cannot add sums on different qubit counts")
        return PauliSum(self.n_qubits, self.terms + other.terms)

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            if self.n_qubits != other.n_qubits:
                raise ShapeError("cannot multiply sums on different qubit counts")
            prod = []
            for ca, sa in self.terms:
                for cb, sb in other.terms:
                    ph, sc = multiply_strings(sa, sb)
                    prod.append((ca * cb * ph, sc))
            return PauliSum.from_terms(self.n_qubits, prod)
        return self.scaled(other)

    def __rmul__(self, other):
        return self.scaled(other)

    def scaled(self, factor: complex) -> "PauliSum":
        return PauliSum.from_terms(self.n_qubits, [(factor * c, s) for c, s in self.terms])

    def simplify(self, tol: float = PRUNE_TOL) -> "PauliSum":
        merged: dict[str, complex] = {}
        for c, s in self.terms:
            merged[s.ops] = merged.get(s.ops, 0j) + c
        kept = [(c, PauliString(ops)) for ops, c in merged.items() if abs(c) > tol]
        return PauliSum.from_terms(self.n_qubits, kept)

    def coefficient(self, ops: str) -> complex:
        """Total coefficient of one string (summed over duplicates)."""
        return sum((c for c, s in self.terms if s.ops == ops), 0j)

    def as_dict(self) -> dict[str, complex]:
        return {s.ops: c for c, s in self.simplify().terms}

    def is_hermitian(self, tol: float = PRUNE_TOL) -> bool:
        """Pauli strings are Hermitian, so the sum is iff coefficients are real."""
        return all(abs(c.imag) <= tol for c, _ in self.simplify().terms)


@dataclass(frozen=True)
class FermionicTerm:
    """Product of fermionic ladder operators times a scalar.

    ``factors`` is an ordered list of (site, dagger); the leftmost factor
    acts last, matching operator-notation order.
    """

    factors: tuple[tuple[int, bool], ...]
    coefficient: complex = 1.0

    @staticmethod
    def of(*factors: tuple[int, bool], coefficient: complex = 1.0) -> "FermionicTerm":
        return FermionicTerm(tuple(factors), complex(coefficient))

    def adjoint(self) -> "FermionicTerm":
        rev = tuple((site, not dag) for site, dag in reversed(self.factors))
        return FermionicTerm(rev, self.coefficient.conjugate())


def _ladder_sum(site: int, dagger: bool, n: int) -> PauliSum:
    # Leading identities, (X -+ iY)/2 at the site, trailing Z string.
    x = "I" * site + "X" + "Z" * (n - site - 1)
    y = "I" * site + "Y" + "Z" * (n - site - 1)
    ycoef = -0.5j if dagger else 0.5j
    return PauliSum.from_terms(n, [(0.5, PauliString(x)), (ycoef, PauliString(y))])


def jordan_wigner(term: FermionicTerm, n: int) -> PauliSum:
    """Map a fermionic product term onto ``n`` qubits and simplify.

    Each annihilation operator at site j becomes (X+iY)/2 on qubit j with a
    Z string on every later qubit (the creation operator takes X-iY), the
    factor sums are multiplied out symbolically, and like strings merge.
    """
    for site, _ in term.factors:
        if not 0 <= site < n:
            raise ValidityError(f"site {site} outside [0, {n})")
    acc = PauliSum.identity(n, term.coefficient)
    for site, dagger in term.factors:
        acc = acc * _ladder_sum(site, dagger, n)
    return acc.simplify()


def jordan_wigner_sum(terms, n: int) -> PauliSum:
    """Jordan-Wigner image of a sum of fermionic terms, simplified."""
    acc = PauliSum.zero(n)
    for t in terms:
        acc = acc + jordan_wigner(t, n)
    return acc.simplify()


@dataclass(frozen=True)
class SparseHermitian:
    """Sparse 2^n x 2^n matrix held as a 0-based (row, col) -> value map.

    Valid instances satisfy entry (p, q) present iff (q, p) present with the
    conjugate value; ``check_hermitian`` verifies this where required.
    """

    dim: int
    entries: dict[tuple[int, int], complex]

    @cached_property
    def coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, values) arrays in deterministic row-major order."""
        items = sorted(self.entries.items())
        if not items:
            return (np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp),
                    np.zeros(0, dtype=complex))
        rows = np.array([k[0] for k, _ in items], dtype=np.intp)
        cols = np.array([k[1] for k, _ in items], dtype=np.intp)
        vals = np.array([v for _, v in items], dtype=complex)
        return rows, cols, vals

    def to_dense(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim), dtype=complex)
        rows, cols, vals = self.coo
        m[rows, cols] = vals
        return m

    def check_hermitian(self, tol: float = 1e-10) -> None:
        for (p, q), v in self.entries.items():
            w = self.entries.get((q, p))
            if w is None or abs(w - v.conjugate()) > tol:
                raise ValidityError(f"entry ({p}, {q}) has no conjugate partner")


def pauli_matrix_entry(s: PauliString, p: int, q: int) -> complex:
    """Matrix element (p, q) of the Kronecker product, 1-based indices.

    The element factorizes over qubits: qubit k contributes its 2x2 entry
    indexed by bit k of p-1 and q-1 (bit 0 most significant), which is the
    uniform form of the ceiling/modulo index map.
    """
    n = s.n_qubits
    dim = 1 << n
    if not (1 <= p <= dim and 1 <= q <= dim):
        raise IndexError(f"indices ({p}, {q}) outside [1, {dim}]")
    r, c = p - 1, q - 1
    val = 1 + 0j
    for k, letter in enumerate(s.ops):
        shift = n - k - 1
        val *= _PAULI_MATS[letter][(r >> shift) & 1, (c >> shift) & 1]
        if val == 0:
            return 0j
    return val


def _term_row_action(s: PauliString):
    """Per-row column offsets and values of one Pauli string.

    Returns (flip_mask, values) with values[r] the matrix element
    (r, r ^ flip_mask); each row holds exactly one nonzero.
    """
    n = s.n_qubits
    dim = 1 << n
    r = np.arange(dim)
    vals = np.ones(dim, dtype=complex)
    flip = 0
    for k, letter in enumerate(s.ops):
        mask = 1 << (n - k - 1)
        bit = (r & mask) != 0
        if letter == "X":
            flip |= mask
        elif letter == "Y":
            flip |= mask
            vals = vals * np.where(bit, 1j, -1j)
        elif letter == "Z":
            vals = vals * np.where(bit, -1.0, 1.0)
    return flip, vals


def expand_to_matrix(h: PauliSum, tol: float = PRUNE_TOL) -> SparseHermitian:
    """Expand a simplified sum into its 2^n x 2^n sparse matrix.

    Entries of magnitude <= ``tol`` after summation are dropped.
    """
    if h.n_qubits > MAX_EXPAND_QUBITS:
        raise CapacityError(
            f"{h.n_qubits} qubits exceeds the {MAX_EXPAND_QUBITS}-qubit expansion limit"
        )
    dim = 1 << h.n_qubits
    rows = np.arange(dim)
    if dim <= 1024:
        dense = np.zeros((dim, dim), dtype=complex)
        for coeff, s in h.terms:
            flip, vals = _term_row_action(s)
            dense[rows, rows ^ flip] += coeff * vals
        rr, cc = np.nonzero(np.abs(dense) > tol)
        entries = {(int(r), int(c)): complex(dense[r, c]) for r, c in zip(rr, cc)}
    else:
        acc: dict[tuple[int, int], complex] = {}
        for coeff, s in h.terms:
            flip, vals = _term_row_action(s)
            cols = rows ^ flip
            for r, c, v in zip(rows, cols, coeff * vals):
                key = (int(r), int(c))
                acc[key] = acc.get(key, 0j) + v
        entries = {k: v for k, v in sorted(acc.items()) if abs(v) > tol}
    return SparseHermitian(dim, entries)


def min_eigenvalue(m: SparseHermitian, max_dim: int = 4096) -> float:
    """Smallest eigenvalue of the densified matrix.

    Raises ValidityError if the stored entries fail the Hermitian symmetry
    check and CapacityError above ``max_dim``.
    """
    if m.dim > max_dim:
        raise CapacityError(f"dimension {m.dim} exceeds the {max_dim} eigensolver limit")
    m.check_hermitian()
    if not m.entries:
        return 0.0
    return float(np.linalg.eigvalsh(m.to_dense())[0])


# --- text format -----------------------------------------------------------
#
# One term per line: "<re>[+-]<im>i <LETTERS>", e.g. "0.5+0.0i XXIZ".
# Blank lines and '#' comments are ignored.

_FLOAT = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM_RE = re.compile(rf"^\s*({_FLOAT})\s*([+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i\s+([IXYZ]+)\s*$")


def parse_term_line(line: str, lineno: int | None = None) -> tuple[complex, PauliString]:
    m = _TERM_RE.match(line)
    if m is None:
        raise ParseError(f"malformed term {line.strip()!r}", line=lineno)
    re_part, im_part, letters = m.groups()
    return complex(float(re_part), float(im_part)), PauliString(letters)


def format_term(coeff: complex, s: PauliString) -> str:
    return f"{coeff.real:.17g}{coeff.imag:+.17g}i {s.ops}"


def loads_pauli_sum(text: str, n_qubits: int | None = None) -> PauliSum:
    """Parse the one-term-per-line text format into a PauliSum."""
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        terms.append(parse_term_line(line, lineno))
    if not terms:
        if n_qubits is None:
            raise ParseError("no terms and no qubit count given")
        return PauliSum.zero(n_qubits)
    n = n_qubits if n_qubits is not None else terms[0][1].n_qubits
    return PauliSum.from_terms(n, terms)


def dumps_pauli_sum(h: PauliSum) -> str:
    return "\n".join(format_term(c, s) for c, s in h.terms) + ("\n" if h.terms else "")
