"""Bit strings, GF(2) matrices, affine subspaces and GF(2^m) arithmetic.

Bit strings are stored as Python ints plus an explicit length.  Bit ``i`` of
the int is index ``i`` of the string, and the text form lists bits in index
order, so ``BitString.from_str("100")`` has only bit 0 set.  Concatenation
puts the left operand in the low indices, which keeps ``x1 + x2`` reading the
same way it is written.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionError

ENUM_BUDGET_BITS = 24


def mask(n: int) -> int:
    return (1 << n) - 1


def parity(v: int) -> int:
    return v.bit_count() & 1


@dataclass(frozen=True)
class BitString:
    value: int
    length: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise DimensionError("negative length")
        if self.value < 0 or self.value >> self.length:
            raise DimensionError(f"value {self.value} does not fit in {self.length} bits")

    @classmethod
    def from_str(cls, text: str) -> BitString:
        text = text.strip()
        if any(c not in "01" for c in text):
            raise ValueError(f"not a bit string: {text!r}")
        return cls(sum(1 << i for i, c in enumerate(text) if c == "1"), len(text))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitString:
        bits = list(bits)
        return cls(sum((b & 1) << i for i, b in enumerate(bits)), len(bits))

    @classmethod
    def zeros(cls, n: int) -> BitString:
        return cls(0, n)

    def __str__(self) -> str:
        return "".join("1" if (self.value >> i) & 1 else "0" for i in range(self.length))

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not -self.length <= i < self.length:
            raise IndexError(i)
        return (self.value >> (i % self.length)) & 1

    def __iter__(self) -> Iterator[int]:
        return (int((self.value >> i) & 1) for i in range(self.length))

    def __xor__(self, other: BitString) -> BitString:
        if other.length != self.length:
            raise DimensionError(f"xor of lengths {self.length} and {other.length}")
        return BitString(self.value ^ other.value, self.length)

    def __add__(self, other: BitString) -> BitString:
        return self.concat(other)

    def concat(self, other: BitString) -> BitString:
        return BitString(self.value | (other.value << self.length), self.length + other.length)

    def prefix(self, d: int) -> BitString:
        """Length-``d`` prefix (the ``Slice`` of the compositions)."""
        if d > self.length:
            raise DimensionError(f"slice of {d} bits from a {self.length}-bit string")
        return BitString(self.value & mask(d), d)

    def slice(self, start: int, stop: int) -> BitString:
        if not 0 <= start <= stop <= self.length:
            raise DimensionError(f"bad slice [{start}:{stop}] of {self.length} bits")
        return BitString((self.value >> start) & mask(stop - start), stop - start)

    @property
    def weight(self) -> int:
        return self.value.bit_count()


def concat(*parts: BitString) -> BitString:
    out = BitString(0, 0)
    for p in parts:
        out = out.concat(p)
    return out


def slice_prefix(y: BitString, d: int) -> BitString:
    return y.prefix(d)


def _coerce_row(row, ncols: int | None) -> tuple[int, int]:
    if isinstance(row, BitString):
        return row.value, row.length
    if isinstance(row, str):
        b = BitString.from_str(row)
        return b.value, b.length
    if isinstance(row, int):
        if ncols is None:
            raise DimensionError("integer rows need an explicit column count")
        return row, ncols
    b = BitString.from_bits(row)
    return b.value, b.length


@dataclass(frozen=True)
class Gf2Matrix:
    """Row-major GF(2) matrix; row ``i`` is an int whose bit ``j`` is entry (i, j)."""

    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self) -> None:
        for r in self.rows:
            if r < 0 or r >> self.ncols:
                raise DimensionError(f"row {r} does not fit in {self.ncols} columns")

    @classmethod
    def from_rows(cls, rows: Sequence, ncols: int | None = None) -> Gf2Matrix:
        vals = []
        width = ncols
        for row in rows:
            v, w = _coerce_row(row, ncols)
            if width is None:
                width = w
            elif w != width:
                raise DimensionError("ragged rows")
            vals.append(v)
        return cls(tuple(vals), width or 0)

    @classmethod
    def identity(cls, n: int) -> Gf2Matrix:
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> Gf2Matrix:
        return cls((0,) * nrows, ncols)

    @classmethod
    def from_columns(cls, cols: Sequence[int], nrows: int) -> Gf2Matrix:
        rows = [0] * nrows
        for j, c in enumerate(cols):
            for i in range(nrows):
                if (c >> i) & 1:
                    rows[i] |= 1 << j
        return cls(tuple(rows), len(cols))

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> j) & 1

    def matvec(self, x: int) -> int:
        out = 0
        for i, r in enumerate(self.rows):
            out |= parity(r & x) << i
        return out

    def __matmul__(self, other):
        if isinstance(other, BitString):
            if other.length != self.ncols:
                raise DimensionError(f"{self.shape} matrix times {other.length}-bit vector")
            return BitString(self.matvec(other.value), self.nrows)
        if isinstance(other, Gf2Matrix):
            if other.nrows != self.ncols:
                raise DimensionError(f"{self.shape} @ {other.shape}")
            t = other.transpose()
            return Gf2Matrix(tuple(t.matvec(r) for r in self.rows), other.ncols)
        return NotImplemented

    def __add__(self, other: Gf2Matrix) -> Gf2Matrix:
        if other.shape != self.shape:
            raise DimensionError(f"{self.shape} + {other.shape}")
        return Gf2Matrix(tuple(a ^ b for a, b in zip(self.rows, other.rows)), self.ncols)

    def transpose(self) -> Gf2Matrix:
        cols = [0] * self.ncols
        for i, r in enumerate(self.rows):
            j = 0
            while r:
                if r & 1:
                    cols[j] |= 1 << i
                r >>= 1
                j += 1
        return Gf2Matrix(tuple(cols), self.nrows)

    def columns(self) -> list[int]:
        return list(self.transpose().rows)

    def rank(self) -> int:
        return gf2_rank(self)

    def to_array(self) -> np.ndarray:
        return np.array([[self.entry(i, j) for j in range(self.ncols)] for i in range(self.nrows)], dtype=np.uint8)

    def __str__(self) -> str:
        return "\n".join(str(BitString(r, self.ncols)) for r in self.rows)


def _rank_of_rows(rows: Iterable[int]) -> int:
    # xor-basis keyed by leading bit
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top not in basis:
                basis[top] = r
                break
            r ^= basis[top]
    return len(basis)


def gf2_rank(m: Gf2Matrix | Sequence[int]) -> int:
    """Dimension of the row space."""
    rows = m.rows if isinstance(m, Gf2Matrix) else m
    return _rank_of_rows(rows)


def gf2_solve(A: Gf2Matrix, b: BitString) -> BitString | None:
    """Return some ``x`` with ``A x = b``, or ``None`` if the system is inconsistent."""
    if A.nrows != b.length:
        raise DimensionError(f"{A.nrows} equations but right-hand side has {b.length} bits")
    n = A.ncols
    # augmented rows: coefficients in bits 0..n-1, rhs at bit n
    rows = [r | (((b.value >> i) & 1) << n) for i, r in enumerate(A.rows)]
    pivots: list[tuple[int, int]] = []
    used = 0
    for col in range(n):
        piv = next((i for i in range(used, len(rows)) if (rows[i] >> col) & 1), None)
        if piv is None:
            continue
        rows[used], rows[piv] = rows[piv], rows[used]
        for i in range(len(rows)):
            if i != used and (rows[i] >> col) & 1:
                rows[i] ^= rows[used]
        pivots.append((used, col))
        used += 1
    for i in range(used, len(rows)):
        if rows[i] >> n & 1:
            return None
    x = 0
    for i, col in pivots:
        if (rows[i] >> n) & 1:
            x |= 1 << col
    return BitString(x, n)


def in_span(v: int, basis: Sequence[int]) -> bool:
    return _rank_of_rows(list(basis) + [v]) == _rank_of_rows(basis)


def rref_basis(vectors: Sequence[int], n: int) -> tuple[int, ...]:
    """Reduced row-echelon basis with pivots taken at the lowest set index."""
    rows = [v for v in vectors]
    out: list[int] = []
    for col in range(n):
        piv = next((i for i, r in enumerate(rows) if (r >> col) & 1), None)
        if piv is None:
            continue
        p = rows.pop(piv)
        rows = [r ^ p if (r >> col) & 1 else r for r in rows]
        out = [o ^ p if (o >> col) & 1 else o for o in out]
        out.append(p)
    return tuple(out)


@dataclass(frozen=True)
class AffineSubspace:
    basis: tuple[int, ...]
    offset: int
    ambient_len: int

    def __post_init__(self) -> None:
        lim = 1 << self.ambient_len
        if any(not 0 <= b < lim for b in self.basis) or not 0 <= self.offset < lim:
            raise DimensionError("vector outside the ambient space")
        if _rank_of_rows(self.basis) != len(self.basis):
            raise DimensionError("basis vectors are linearly dependent")

    @classmethod
    def from_strings(cls, basis: Sequence[str], offset: str) -> AffineSubspace:
        off = BitString.from_str(offset)
        return cls(tuple(BitString.from_str(b).value for b in basis), off.value, off.length)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, v: int | BitString) -> bool:
        if isinstance(v, BitString):
            v = v.value
        return in_span(v ^ self.offset, self.basis)

    def points(self) -> np.ndarray:
        """All ``2^dim`` points as an int64 array, coefficient vector ``c`` at index ``c``."""
        if self.dim > ENUM_BUDGET_BITS:
            raise BudgetExceeded(f"affine subspace of dimension {self.dim}")
        pts = np.full(1, self.offset, dtype=np.int64)
        for b in self.basis:
            pts = np.concatenate([pts, pts ^ b])
        return pts

    def canonical(self) -> AffineSubspace:
        """Same subspace with RREF basis and the offset reduced against it."""
        basis = rref_basis(self.basis, self.ambient_len)
        off = self.offset
        for b in basis:
            low = (b & -b).bit_length() - 1
            if (off >> low) & 1:
                off ^= b
        return AffineSubspace(basis, off, self.ambient_len)


def affine_enumerate(s: AffineSubspace, budget: int = ENUM_BUDGET_BITS) -> Iterator[BitString]:
    """Yield the ``2^dim`` points of ``s`` in Gray-code order."""
    if s.dim > budget:
        raise BudgetExceeded(f"affine subspace of dimension {s.dim} exceeds budget {budget}")
    v = s.offset
    yield BitString(v, s.ambient_len)
    for i in range(1, 1 << s.dim):
        v ^= s.basis[(i & -i).bit_length() - 1]
        yield BitString(v, s.ambient_len)


# --- GF(2^m) ---------------------------------------------------------------

# modulus polynomials as ints, bit i = coefficient of x^i
IRREDUCIBLE: dict[int, int] = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,  # x^3 + x + 1
    4: 0b10011,  # x^4 + x + 1
    5: 0b100101,
    6: 0b1011011,
    7: 0b10000011,
    8: 0x11B,  # x^8 + x^4 + x^3 + x + 1
    9: 0b1000010001,
    10: 0b10001101111,
    11: 0b100000000101,
    12: 0b1000011101011,
    13: 0b10000000011011,
    14: 0b100000010101001,
    15: 0b1000000000110101,
    16: 0b10000000000101101,
}


def poly_mulmod(a: int, b: int, degree: int) -> int:
    mod = IRREDUCIBLE[degree]
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if (a >> degree) & 1:
            a ^= mod
    return out


@dataclass(frozen=True)
class FieldElem:
    degree: int
    coeffs: int

    def __post_init__(self) -> None:
        if self.degree not in IRREDUCIBLE:
            raise DimensionError(f"unsupported field degree {self.degree}")
        if not 0 <= self.coeffs < (1 << self.degree):
            raise DimensionError(f"{self.coeffs} is not an element of GF(2^{self.degree})")

    def _check(self, other: FieldElem) -> None:
        if other.degree != self.degree:
            raise DimensionError(f"mixed field degrees {self.degree} and {other.degree}")

    def __add__(self, other: FieldElem) -> FieldElem:
        self._check(other)
        return FieldElem(self.degree, self.coeffs ^ other.coeffs)

    def __mul__(self, other: FieldElem) -> FieldElem:
        return field_mul(self, other)

    def __pow__(self, e: int) -> FieldElem:
        out, base = FieldElem(self.degree, 1), self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def inverse(self) -> FieldElem:
        if self.coeffs == 0:
            raise ZeroDivisionError("zero has no inverse")
        return self ** ((1 << self.degree) - 2)


def field_mul(a: FieldElem, b: FieldElem) -> FieldElem:
    a._check(b)
    return FieldElem(a.degree, poly_mulmod(a.coeffs, b.coeffs, a.degree))


def mul_table(degree: int) -> np.ndarray:
    """Full multiplication table of GF(2^degree); only sensible for degree <= 10."""
    q = 1 << degree
    tbl = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        for b in range(a, q):
            tbl[a, b] = tbl[b, a] = poly_mulmod(a, b, degree)
    return tbl


def gaussian_binomial(n: int, k: int) -> int:
    """Number of ``k``-dimensional subspaces of GF(2)^n."""
    if not 0 <= k <= n:
        return 0
    num = den = 1
    for i in range(k):
        num *= (1 << (n - i)) - 1
        den *= (1 << (i + 1)) - 1
    return num // den


def rref_subspaces(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """Every ``k``-dimensional subspace of GF(2)^n once, as its reduced echelon basis.

    Basis vector ``i`` has its lowest set bit at pivot ``p_i``, no other
    basis vector touches ``p_i``, and the free entries above ``p_i`` range
    over all values.
    """
    for pivots in itertools.combinations(range(n), k):
        pset = set(pivots)
        free = [[j for j in range(p + 1, n) if j not in pset] for p in pivots]
        total = sum(len(f) for f in free)
        for bits in range(1 << total):
            basis = []
            off = 0
            for p, fr in zip(pivots, free):
                v = 1 << p
                for j, c in enumerate(fr):
                    if (bits >> (off + j)) & 1:
                        v |= 1 << c
                off += len(fr)
                basis.append(v)
            yield tuple(basis)


def coset_offsets(n: int, basis: Sequence[int]) -> list[int]:
    """One representative per coset: vectors that vanish on every pivot of ``basis``."""
    pivots = {(b & -b).bit_length() - 1 for b in basis}
    free = [j for j in range(n) if j not in pivots]
    out = []
    for bits in range(1 << len(free)):
        out.append(sum(((bits >> i) & 1) << c for i, c in enumerate(free)))
    return out
