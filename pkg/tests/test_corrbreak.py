from collections import Counter
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from nmext.corrbreak import (
    advice_trace,
    affine_adv_cb,
    breaker_fixture_family,
    breaker_from_bytes,
    breaker_to_bytes,
    build_breaker,
    certify_breaker,
    fixture_distance,
    fixture_outputs,
    same_tables,
    tuple_check,
)
from nmext.errors import DimensionError, InfeasiblePlan, PreconditionError
from nmext.gf2core import BitString
from nmext.measure import strong_error
from nmext.suites import DESK_BREAKER, DESK_BREAKER_EPS, DESK_BREAKER_FIXTURES


def _reference(b, x, y, alpha):
    # scalar flip-flop, written out independently of the vectorized run
    q = y % (1 << b.w)
    p = int(b.init.table[q, x])
    for j, (ex, ey) in enumerate(b.rounds):
        if (alpha >> j) & 1:
            q = int(ey.table[p, y])
            p = int(ex.table[q, x])
        else:
            p = int(ex.table[q, x])
            q = int(ey.table[p, y])
    return q % (1 << b.m)


def _slow_distance(z, m, label, w):
    # Fraction reference for the distance of (Z, label) from (U_m, label)
    total = sum(int(v) for v in w)
    joint, marg = Counter(), Counter()
    for zi, li, wi in zip(z.tolist(), label.tolist(), w.tolist()):
        joint[(zi, li)] += wi
        marg[li] += wi
    dist = Fraction(0)
    for li, mass in marg.items():
        for zi in range(1 << m):
            dist += abs(Fraction(joint[(zi, li)], total) - Fraction(mass, total * (1 << m)))
    return dist / 2


@pytest.fixture(scope="module")
def small():
    return build_breaker(8, 5, 3, 1, t=1, w=3, seed=7)


def test_matches_scalar_reference(small):
    rng = np.random.default_rng(0)
    xs = rng.integers(0, 256, 200)
    ys = rng.integers(0, 32, 200)
    al = rng.integers(0, 8, 200)
    got = small(xs, ys, al)
    assert [int(v) for v in got] == [_reference(small, int(x), int(y), int(a)) for x, y, a in zip(xs, ys, al)]


def test_deterministic(small):
    a = affine_adv_cb(small, BitString(77, 8), BitString(9, 5), BitString(5, 3))
    b = affine_adv_cb(small, BitString(77, 8), BitString(9, 5), BitString(5, 3))
    assert a == b and a.length == 1


def test_dimension_checks(small):
    with pytest.raises(DimensionError):
        affine_adv_cb(small, BitString(1, 7), BitString(0, 5), BitString(0, 3))
    with pytest.raises(InfeasiblePlan):
        build_breaker(8, 5, 2, 3, w=4)
    with pytest.raises(InfeasiblePlan):
        build_breaker(8, 3, 2, 1, w=4)


def test_first_advice_bit_changes_round_zero_order(small):
    diverged = 0
    for x in range(0, 256, 5):
        for y in range(32):
            s0, s1 = advice_trace(small, x, y, 0b000), advice_trace(small, x, y, 0b001)
            assert s0[0] == s1[0]
            diverged += s0[1] != s1[1]
    assert diverged > 0


def test_advice_prefix_keeps_early_state(small):
    for x, y in [(3, 4), (200, 31), (91, 0)]:
        for a1, a2, shared in [(0b010, 0b110, 2), (0b001, 0b011, 1), (0b101, 0b101, 3)]:
            t1, t2 = advice_trace(small, x, y, a1), advice_trace(small, x, y, a2)
            assert t1[: shared + 1] == t2[: shared + 1]


def test_equal_advice_fixture_rejected(small):
    fx = breaker_fixture_family(small, 3, 1, seed=0)[0]
    bad = replace(fx, alphas=(fx.alpha,))
    with pytest.raises(PreconditionError):
        bad.validate(small.d)


def test_no_tampering_reduces_to_strong_error(small):
    for fx in breaker_fixture_family(small, 3, 4, seed=1, t=0):
        z, _, y, _, w = fixture_outputs(small, fx)
        assert np.all(w == 1)
        # outputs as a (seed, point) table over the A + B support
        order = np.lexsort((np.arange(len(y)), y))
        table = z[order].reshape(1 << small.d, -1)
        assert fixture_distance(small, fx) == strong_error(table, small.m)


def test_fixture_distance_matches_slow_reference(small):
    for fx in breaker_fixture_family(small, 3, 4, seed=2):
        z, zt, y, yt, w = fixture_outputs(small, fx)
        label = (y << small.m | zt[:, 0]) << small.d | yt[:, 0]
        assert fixture_distance(small, fx) == _slow_distance(z, small.m, label, w)


def test_tuple_check_bound(small):
    for fx in breaker_fixture_family(small, 3, 6, seed=3):
        premise, joint = tuple_check(small, fx)
        assert joint <= (fx.t + 1) * premise


def test_desk_breaker_locked():
    b = build_breaker(**DESK_BREAKER)
    fixtures = breaker_fixture_family(b, **DESK_BREAKER_FIXTURES)
    certified, cert = certify_breaker(b, fixtures)
    assert cert.fixtures == 100
    assert cert.measured_eps == DESK_BREAKER_EPS
    assert cert.per_kind == {"affine": Fraction(2054, 16384), "two-source": DESK_BREAKER_EPS}
    assert cert.tuple_check
    assert certified.declared_eps == float(DESK_BREAKER_EPS)


def test_serialization_roundtrip(small):
    back = breaker_from_bytes(breaker_to_bytes(small))
    assert same_tables(small, back)
    assert (back.n, back.d, back.a, back.m, back.w) == (small.n, small.d, small.a, small.m, small.w)
