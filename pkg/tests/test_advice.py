import random
from fractions import Fraction

import numpy as np
import pytest

from nmext.advice import (
    adv_gen,
    adv_gen_array,
    affine_adv_gen,
    affine_adv_gen_array,
    affine_error,
    affine_source_count,
    affine_source_points,
    build_adv_gen,
    build_affine_adv_gen,
    distinctness_affine,
    distinctness_two_source,
    linear_map_apply,
    restrict,
    search_affine_extractor,
)
from nmext.errors import DimensionError, InfeasiblePlan
from nmext.gf2core import BitString, mask
from nmext.oracle import gen_tamper_pair, random_affine_sources
from nmext.primitives import random_linear_code, repetition_parity_code


@pytest.fixture(scope="module")
def two():
    return build_adv_gen(8, 3, 4, 6, seed=1)


@pytest.fixture(scope="module")
def aff():
    return build_affine_adv_gen(8, 4, 4, 6, 3, 2, 2, 3, 3, seed=2)


def test_restrict_reference():
    cw = np.array([0b1011_0110, 0b0000_1111])
    pos = np.array([[1, 2, 7], [0, 4, 3]])
    want = [sum(((int(c) >> int(p)) & 1) << j for j, p in enumerate(ps)) for c, ps in zip(cw, pos)]
    assert restrict(cw, pos).tolist() == want


def test_two_source_length_and_determinism(two):
    x, y = BitString(0xA5, 8), BitString(0x3C, 8)
    y1 = y.prefix(two.d)
    z = adv_gen(two, x, y, y1)
    assert z.length == two.m1 + two.d + 2 * two.D_prime
    assert adv_gen(two, x, y, y1) == z
    with pytest.raises(DimensionError):
        adv_gen(two, x, y, BitString(0, 3))


def test_two_source_layout(two):
    x, y, y1 = 0x5A, 0xC3, 0x3
    z = int(adv_gen_array(two, x, y, y1))
    x1 = int(two.ext.table[y1, x])
    assert z & mask(two.m1) == x1
    assert (z >> two.m1) & mask(two.d) == y1
    s1 = two.samp(x1)
    w1 = sum(((int(two.code.encode_array(np.array([y]))[0]) >> p) & 1) << j for j, p in enumerate(s1))
    assert (z >> (two.m1 + two.d)) & mask(two.D_prime) == w1


def test_two_source_conditional_linearity(two):
    # with y1 fixed, w2 is linear in x; with x1 fixed, w1 is linear in y
    off2, off1 = two.m1 + two.d + two.D_prime, two.m1 + two.d
    rng = random.Random(0)
    for _ in range(50):
        y, y1 = rng.getrandbits(8), rng.getrandbits(4)
        a, b = rng.getrandbits(8), rng.getrandbits(8)
        w2 = lambda x: int(adv_gen_array(two, x, y, y1)) >> off2  # noqa: E731
        assert w2(a ^ b) == w2(a) ^ w2(b) ^ w2(0)
        x = rng.getrandbits(8)
        x1 = int(two.ext.table[y1, x])
        pos = two.samp_table[x1]
        w1 = lambda yy: int(restrict(two.code.encode_array(np.array([yy])), pos[None])[0])  # noqa: E731
        assert w1(a ^ b) == w1(a) ^ w1(b)
        assert (int(adv_gen_array(two, x, a, y1)) >> off1) & mask(two.D_prime) == w1(a)


def test_two_source_requires_d_at_least_m1():
    with pytest.raises(InfeasiblePlan):
        build_adv_gen(8, 4, 3, 6)


def test_distinctness_two_source_matches_pairwise_count(two):
    rng = np.random.default_rng(3)
    xs, ys = rng.choice(256, 8, replace=False), rng.choice(256, 8, replace=False)
    f, g = gen_tamper_pair(8, "table", 0)
    ft, gt = f.as_table(), g.as_table()
    got = distinctness_two_source(two, xs, ys, ft, gt)
    diff = 0
    for x in xs:
        for y in ys:
            z = int(adv_gen_array(two, x, y, y & mask(two.d)))
            zt = int(adv_gen_array(two, ft[x], gt[y], gt[y] & mask(two.d)))
            diff += z != zt
    assert got == Fraction(diff, 64)


def test_distinctness_identity_is_zero(two):
    ident = np.arange(256)
    assert distinctness_two_source(two, np.arange(8), np.arange(8), ident, ident) == 0


def test_larger_distance_code_does_not_lower_distinctness():
    weak = build_adv_gen(12, 4, 4, 16, seed=0, code=repetition_parity_code(12))
    strong = build_adv_gen(12, 4, 4, 16, seed=0, code=random_linear_code(12, 48, seed=0))
    assert strong.code.min_distance > weak.code.min_distance
    rng = np.random.default_rng(5)
    lo_weak, lo_strong = Fraction(1), Fraction(1)
    for i in range(40):
        xs, ys = rng.choice(4096, 32, replace=False), rng.choice(4096, 32, replace=False)
        f, g = gen_tamper_pair(12, "table", i)
        lo_weak = min(lo_weak, distinctness_two_source(weak, xs, ys, f.as_table(), g.as_table()))
        lo_strong = min(lo_strong, distinctness_two_source(strong, xs, ys, f.as_table(), g.as_table()))
    assert lo_strong >= lo_weak


def test_affine_extractor_certificate_matches_slow_check():
    a = search_affine_extractor(5, 1, 3, seed=0, tries=30)
    pts = affine_source_points(5, 3)
    assert len(pts) == affine_source_count(5, 3) == 155 * 4
    worst = Fraction(0)
    for row in pts:
        ones = sum(int(a.table[p]) for p in row)
        worst = max(worst, abs(Fraction(ones, len(row)) - Fraction(1, 2)))
    assert a.eps == worst == affine_error(a.table, 1, pts)
    assert a.sources_checked == len(pts)


def test_affine_extractor_full_dimension_is_perfect():
    assert search_affine_extractor(4, 2, 4).eps == 0


def test_affine_extractor_limits():
    with pytest.raises(InfeasiblePlan):
        search_affine_extractor(13, 1, 4)
    with pytest.raises(InfeasiblePlan):
        search_affine_extractor(6, 4, 3)


def test_affine_length_determinism_and_remainder(aff):
    x = BitString(0x9E, 8)
    y = BitString(0x5B, 8)
    z = affine_adv_gen(aff, x, y)
    assert z.length == aff.l1 + aff.l2 + aff.D + aff.n3
    assert affine_adv_gen(aff, x, y) == z
    # bits past l1 + l2 are ignored
    assert affine_adv_gen(aff, x, BitString(0x5B | (0b101 << 8), 11)) == z
    with pytest.raises(DimensionError):
        affine_adv_gen(aff, x, BitString(1, 7))


def test_affine_w2_linear_in_x(aff):
    rng = random.Random(1)
    off = aff.y_len + aff.D
    for _ in range(50):
        y = rng.getrandbits(8)
        a, b = rng.getrandbits(8), rng.getrandbits(8)
        w2 = lambda x: int(affine_adv_gen_array(aff, x, y)) >> off  # noqa: E731
        assert w2(a ^ b) == w2(a) ^ w2(b)


def test_distinctness_affine_matches_direct_count(aff):
    src = random_affine_sources(8, 4, 1, seed=0)[0]
    xs = src.support_array()
    rng = random.Random(4)
    L = np.array([rng.getrandbits(8) for _ in range(aff.y_len)])
    A, _ = gen_tamper_pair(8, "affine", 3)
    got = distinctness_affine(aff, xs, L, np.array(A.matrix.rows), A.offset)
    diff = 0
    for x in xs:
        xt = int(A(np.array([x]))[0])
        z = int(affine_adv_gen_array(aff, x, linear_map_apply(L, np.array([x]))[0]))
        zt = int(affine_adv_gen_array(aff, xt, linear_map_apply(L, np.array([xt]))[0]))
        diff += z != zt
    assert got == Fraction(diff, len(xs))


def test_desk_distinctness_two_source():
    p = build_adv_gen(12, 4, 4, 16, seed=0, code=random_linear_code(12, 48, seed=0))
    rng = np.random.default_rng(0)
    for i in range(30):
        xs, ys = rng.choice(4096, 64, replace=False), rng.choice(4096, 64, replace=False)
        f, g = gen_tamper_pair(12, "table", i)
        assert distinctness_two_source(p, xs, ys, f.as_table(), g.as_table()) >= Fraction(7, 8)
