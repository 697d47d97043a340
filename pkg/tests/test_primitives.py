import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmext.errors import DimensionError, InfeasiblePlan, SearchExhausted
from nmext.gf2core import BitString, Gf2Matrix
from nmext.oracle import random_affine_sources
from nmext.primitives import (
    DisperserTable,
    averaging_sampler,
    brute_optimal_extractor,
    build_disperser,
    certify_disperser,
    code_encode,
    code_from_bytes,
    code_min_distance,
    code_to_bytes,
    disperser_from_bytes,
    disperser_to_bytes,
    extractor_as_sampler,
    extractor_from_bytes,
    extractor_to_bytes,
    flat_family,
    hash_extractor,
    lhl_error,
    linear_extractor,
    random_linear_code,
    random_linear_extractor,
    random_table_extractor,
    repetition_parity_code,
    sampler_failure_fraction,
    srsamp,
    srsamp_failure,
    strong_error_on,
    worst_flat_strong_error_m1,
)


def _slow_strong_error(table, m, support, seeds=None):
    # Fraction reference: average over seeds of the distance from U_m
    seeds = range(len(table)) if seeds is None else seeds
    total = Fraction(0)
    for s in seeds:
        counts = {}
        for x in support:
            v = int(table[s][x])
            counts[v] = counts.get(v, 0) + 1
        total += sum(abs(Fraction(counts.get(v, 0), len(support)) - Fraction(1, 2**m)) for v in range(2**m)) / 2
    return total / len(seeds)


def test_hash_extractor_inner_product_example():
    e = hash_extractor(2, m=1)
    # seed row 01 with x = 10: the inner product of (0,1) and (1,0) is 0
    row_01 = next(s for s, mat in enumerate(e.matrices) if mat.rows == (0b10,))
    assert e.eval(BitString.from_str("10"), BitString(row_01, e.d)).value == 0
    assert e.eval(BitString.from_str("01"), BitString(row_01, e.d)).value == 1


def test_hash_extractor_zero_input_and_linearity():
    e = hash_extractor(6, m=2)
    assert np.all(e.table[:, 0] == 0)
    for s in range(0, 1 << e.d, 7):
        for x, xp in [(5, 9), (63, 1), (12, 33)]:
            assert e.table[s, x ^ xp] == e.table[s, x] ^ e.table[s, xp]


def test_hash_extractor_preconditions():
    with pytest.raises(InfeasiblePlan):
        hash_extractor(4, d=3, m=2)
    with pytest.raises(InfeasiblePlan):
        hash_extractor(2, m=3)


def test_hash_extractor_certified_on_flat_family():
    e = hash_extractor(8, m=2, k=4)
    assert e.eps == pytest.approx(lhl_error(2, 4))
    fam = flat_family(8, 4, 200, seed=3)
    worst = max(strong_error_on(e, s) for s in fam)
    assert worst <= 0.25
    for s in fam[:3]:
        assert strong_error_on(e, s) == _slow_strong_error(e.table, 2, list(s))


def test_linear_extractor_is_linear_per_seed():
    e = random_linear_extractor(7, 3, 2, seed=5)
    assert e.linear and e.is_linear()
    for s in range(1 << e.d):
        for i, j in itertools.combinations(range(7), 2):
            assert e.table[s, (1 << i) ^ (1 << j)] == e.table[s, 1 << i] ^ e.table[s, 1 << j]


def test_random_table_extractor_shape_and_determinism():
    a = random_table_extractor(6, 3, 2, seed=1)
    b = random_table_extractor(6, 3, 2, seed=1)
    assert a.table.shape == (8, 64)
    assert np.array_equal(a.table, b.table)
    assert not a.linear


def test_worst_flat_m1_matches_brute_force():
    e = random_table_extractor(4, 2, 1, seed=2)
    brute = max(_slow_strong_error(e.table, 1, list(c)) for c in itertools.combinations(range(16), 4))
    assert worst_flat_strong_error_m1(e.table, 2) == brute


def test_brute_optimal_extractor_meets_target_and_recertifies():
    e = brute_optimal_extractor(4, 2, 1, 2, target=0.3, seed=0)
    assert e.eps <= 0.3
    # declared error is a measurement on the full family of flat 2-sources
    assert worst_flat_strong_error_m1(e.table, 2) == Fraction(e.eps)


def test_brute_optimal_extractor_vacuous_target():
    e = brute_optimal_extractor(3, 1, 1, 1, target=1.0, seed=0, iters=10, restarts=1)
    assert e.eps <= 1.0


def test_brute_optimal_extractor_unreachable_target():
    with pytest.raises(SearchExhausted):
        brute_optimal_extractor(3, 1, 1, 1, target=0.0, seed=0, iters=20, restarts=1)


def test_seed_deficiency_degrades_by_at_most_the_missing_factor():
    e = random_linear_extractor(8, 4, 1, seed=4)
    support = np.array(random.Random(0).sample(range(256), 16))
    full = strong_error_on(e, support)
    for lam in (1, 2):
        keep = np.array(sorted(random.Random(lam).sample(range(16), 16 >> lam)))
        w = np.zeros(16, dtype=np.int64)
        w[keep] = 1
        part = strong_error_on(e, support, seed_weights=w)
        assert part == _slow_strong_error(e.table, 1, list(support), list(keep))
        assert part <= (1 << lam) * full


def test_extractor_as_sampler_shapes():
    e = random_table_extractor(5, 3, 2, seed=0)
    samples = extractor_as_sampler(e, BitString(11, 5))
    assert len(samples) == 8 and all(s.length == 2 for s in samples)
    const = random_table_extractor(5, 3, 2, seed=0)
    const.table[:] = 3
    assert {s.value for s in extractor_as_sampler(const, BitString(0, 5))} == {3}


def test_averaging_sampler_examples():
    full = averaging_sampler(4, 9, 9)
    assert all(sorted(full(s)) == list(range(9)) for s in range(16))
    samp = averaging_sampler(6, 40, 8)
    ones = np.ones(40)
    assert np.all(ones[samp.all_samples()].mean(axis=1) == 1.0)
    assert all(len(set(samp(s))) == 8 for s in range(64))
    with pytest.raises(InfeasiblePlan):
        averaging_sampler(3, 4, 5)


def test_averaging_sampler_desk_failure_below_declared():
    samp = averaging_sampler(10, 64, 16)
    rng = np.random.default_rng(0)
    mu, theta = 0.5, 0.25
    gamma = samp.declared_gamma(mu, theta)
    worst = Fraction(0)
    for _ in range(200):
        f = np.zeros(64)
        f[rng.choice(64, 32, replace=False)] = 1
        worst = max(worst, sampler_failure_fraction(samp, f, mu, theta))
    assert worst <= gamma


def test_disperser_identity_table_always_covers():
    table = np.tile(np.arange(8), (16, 1))
    ok, method, _, _ = certify_disperser(table, 3, 1, 1.0)
    assert ok


def test_disperser_single_row_fails_when_coverage_too_high():
    table = np.zeros((8, 2), dtype=np.int64)
    table[:, 1] = 1
    ok, _, _, _ = certify_disperser(table, 3, 1, 0.5)
    assert not ok


def test_build_disperser_desk_instance():
    g = build_disperser(8, 3, 4, 16, 0.5, seed=0)
    assert g.table.shape == (256, 8)
    # independent check on random 16-subsets
    rng = np.random.default_rng(1)
    for _ in range(2000):
        pick = rng.choice(256, 16, replace=False)
        assert len(set(g.table[pick].ravel().tolist())) >= 8


def test_disperser_roundtrip():
    g = build_disperser(5, 2, 3, 4, 0.5, seed=2)
    back = disperser_from_bytes(disperser_to_bytes(g))
    assert isinstance(back, DisperserTable) and back == g


def test_srsamp_matches_plain_call_and_linearity():
    e = random_linear_extractor(6, 3, 2, seed=3)
    g = build_disperser(2, 1, 3, 2, 0.5, seed=0)
    x = BitString(45, 6)
    for s in range(4):
        for z in range(2):
            assert srsamp(e, g, x, s, z) == e.eval(x, BitString(int(g.table[s, z]), 3))
    assert srsamp(e, g, BitString(0, 6), 1, 1).value == 0
    with pytest.raises(DimensionError):
        srsamp(random_linear_extractor(6, 2, 2, seed=0), g, x, 0, 0)


def test_srsamp_failure_bounded_on_desk_instance():
    e = random_linear_extractor(8, 4, 3, seed=1)
    g = build_disperser(3, 2, 4, 4, 0.5, seed=0)
    support = np.array(sorted(random.Random(2).sample(range(256), 64)))
    assert srsamp_failure(e, g, support, 0.25) <= Fraction(1, 8)


def test_code_examples():
    c = repetition_parity_code(8)
    assert code_encode(c, BitString(0, 8)).value == 0
    assert c.min_distance == code_min_distance(c.generator)[0]
    # brute-force minimum weight over all 255 nonzero messages
    brute = min(bin(int(c.encode_array(np.array([msg]))[0])).count("1") for msg in range(1, 256))
    assert c.min_distance == brute == 5


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 255), st.integers(0, 255))
def test_code_distance_between_codewords(a, b):
    c = repetition_parity_code(8)
    ca, cb = code_encode(c, BitString(a, 8)), code_encode(c, BitString(b, 8))
    assert (ca ^ cb) == code_encode(c, BitString(a ^ b, 8))
    if a != b:
        assert bin((ca ^ cb).value).count("1") >= c.min_distance


def test_random_linear_code_distance():
    c = random_linear_code(12, 48, seed=0)
    assert c.n1 == 48 and c.min_distance >= 10
    assert code_from_bytes(code_to_bytes(c)).min_distance == c.min_distance


def test_extractor_roundtrip_keeps_matrices():
    e = random_linear_extractor(6, 2, 2, seed=9)
    back = extractor_from_bytes(extractor_to_bytes(e))
    assert np.array_equal(back.table, e.table)
    assert [m.rows for m in back.matrices] == [m.rows for m in e.matrices]


def test_strong_error_zero_on_full_cube_for_nonzero_functionals():
    mats = [Gf2Matrix((r,), 5) for r in range(1, 32)] + [Gf2Matrix((1,), 5)]
    e = linear_extractor("functionals", 5, 1, mats)
    assert strong_error_on(e, np.arange(32)) == 0
    assert _slow_strong_error(e.table, 1, list(range(32))) == 0


def test_affine_sources_certified_within_lhl_budget():
    e = hash_extractor(8, m=2, k=4)
    srcs = random_affine_sources(8, 4, 40, seed=0)
    worst = max(strong_error_on(e, s.support_array()) for s in srcs)
    assert worst <= 0.25
    assert math.isclose(lhl_error(2, 4), 2 ** ((2 - 4) / 2 - 1))
