import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from nmext.errors import BudgetExceeded, DimensionError
from nmext.gf2core import (
    IRREDUCIBLE,
    AffineSubspace,
    BitString,
    FieldElem,
    Gf2Matrix,
    affine_enumerate,
    field_mul,
    gf2_rank,
    gf2_solve,
    in_span,
    mul_table,
)


def _poly_rem(a: int, b: int) -> int:
    while a and a.bit_length() >= b.bit_length():
        a ^= b << (a.bit_length() - b.bit_length())
    return a


def test_bitstring_text_roundtrip_and_order():
    b = BitString.from_str("1000")
    assert b.value == 1 and str(b) == "1000"
    assert str(BitString.from_str("10") + BitString.from_str("011")) == "10011"
    assert str(BitString.from_str("110101").prefix(3)) == "110"
    with pytest.raises(DimensionError):
        BitString.from_str("10") ^ BitString.from_str("101")


def test_rank_examples():
    assert gf2_rank(Gf2Matrix.identity(4)) == 4
    assert gf2_rank(Gf2Matrix.zeros(3, 5)) == 0
    assert gf2_rank(Gf2Matrix.from_rows(["11", "11"])) == 1


def test_solve_examples():
    b = BitString.from_str("1010")
    assert gf2_solve(Gf2Matrix.identity(4), b) == b
    assert gf2_solve(Gf2Matrix.zeros(4, 4), b) is None
    A = Gf2Matrix.from_rows(["11", "01"])
    x = gf2_solve(A, BitString.from_str("10"))
    assert A @ x == BitString.from_str("10")
    with pytest.raises(DimensionError):
        gf2_solve(A, BitString.from_str("101"))


def test_solve_random_consistent_systems():
    rng = random.Random(3)
    for _ in range(200):
        rows = [rng.getrandbits(7) for _ in range(5)]
        A = Gf2Matrix(tuple(rows), 7)
        x = BitString(rng.getrandbits(7), 7)
        b = A @ x
        sol = gf2_solve(A, b)
        assert sol is not None and A @ sol == b


def test_rank_equals_transpose_rank_and_row_ops():
    rng = random.Random(11)
    for _ in range(300):
        rows = [rng.getrandbits(6) for _ in range(6)]
        m = Gf2Matrix(tuple(rows), 6)
        r = gf2_rank(m)
        assert r == gf2_rank(m.transpose())
        perm = rows[:]
        rng.shuffle(perm)
        assert gf2_rank(perm) == r
        i, j = rng.sample(range(6), 2)
        added = rows[:]
        added[i] ^= added[j]
        assert gf2_rank(added) == r


def test_field_examples_gf8():
    x = FieldElem(3, 0b010)
    assert field_mul(x, x) == FieldElem(3, 0b100)
    assert field_mul(FieldElem(3, 0b100), x) == FieldElem(3, 0b011)
    for a in range(8):
        assert field_mul(FieldElem(3, a), FieldElem(3, 1)).coeffs == a
    with pytest.raises(DimensionError):
        field_mul(FieldElem(3, 1), FieldElem(4, 1))


def test_gf16_exhaustive_field_laws():
    els = [FieldElem(4, v) for v in range(16)]
    for a, b in itertools.product(els, els):
        assert a * b == b * a
        for c in els:
            assert a * (b + c) == a * b + a * c
            assert (a * b) * c == a * (b * c)
    for a in els[1:]:
        assert (a * a.inverse()).coeffs == 1


@pytest.mark.parametrize("degree", sorted(IRREDUCIBLE))
def test_moduli_are_irreducible(degree):
    p = IRREDUCIBLE[degree]
    assert p.bit_length() - 1 == degree
    assert all(_poly_rem(p, q) for q in range(2, 1 << (degree // 2 + 1)))


def test_mul_table_matches_scalar():
    tbl = mul_table(4)
    for a in range(16):
        for b in range(16):
            assert tbl[a, b] == field_mul(FieldElem(4, a), FieldElem(4, b)).coeffs


def test_affine_enumerate_examples():
    s0 = AffineSubspace((), 0b101, 3)
    assert [str(v) for v in affine_enumerate(s0)] == ["101"]
    s = AffineSubspace.from_strings(["100", "010"], "001")
    assert {str(v) for v in affine_enumerate(s)} == {"001", "101", "011", "111"}
    big = AffineSubspace(tuple(1 << i for i in range(25)), 0, 25)
    with pytest.raises(BudgetExceeded):
        next(affine_enumerate(big))


def test_dependent_basis_rejected():
    with pytest.raises(DimensionError):
        AffineSubspace.from_strings(["110", "110"], "000")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 6), st.randoms(use_true_random=False))
def test_enumeration_closed_under_difference(k, rnd):
    n = 8
    basis: list[int] = []
    while len(basis) < k:
        v = rnd.getrandbits(n)
        if v and not in_span(v, basis):
            basis.append(v)
    s = AffineSubspace(tuple(basis), rnd.getrandbits(n), n)
    pts = [p.value for p in affine_enumerate(s)]
    assert len(set(pts)) == 2**k
    assert sorted(pts) == sorted(s.points().tolist())
    for u in pts[:6]:
        for v in pts:
            assert in_span(u ^ v, basis)
    assert s.canonical().contains(pts[-1])
