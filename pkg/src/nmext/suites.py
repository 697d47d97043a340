"""Certification suites that turn oracle checks into budgeted measurements.

Each suite takes a resolved config and an oracle seed and returns a list of
:class:`~nmext.oracle.Measurement`.  A measurement passes when its value is
at most its budget; checks that count violations use a budget of zero.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .advice import distinctness_affine, distinctness_two_source
from .corrbreak import build_breaker, breaker_fixture_family, certify_breaker
from .distlab import Distribution, certify_nobf, kwise_generator, kwise_samples, twise_distance
from .oracle import (
    Measurement,
    bridge_check,
    case_scenario_suite,
    check_sampler_tail,
    check_xor_lemma,
    gen_tamper_pair,
    linear_affine_profile,
    nm_distance_affine,
    nm_distance_two_source,
    random_affine_sources,
)
from .pipelines import (
    PipelineTrace,
    build_components,
    extractor,
    is_two_source,
    lsrext_bad_budget,
    lsrext_bad_rows,
    output_bits,
    replay,
    stages,
    trace,
)
from .planner import PlannerConfig
from .primitives import flat_family, hash_extractor, random_table_extractor, strong_error_on
from .resilient import MAJ_XOR_CONSTANT, maj_xor_maj_bias, planted_samples

SUITES = ("components", "pipelines", "lemmas")

# Desk correlation breaker and its declared error, fixed when it was first
# certified on the fixture family below.
DESK_BREAKER = dict(n=10, d=6, a=2, m=1, t=1, w=4, seed=0)
DESK_BREAKER_FIXTURES = dict(k=5, count=100, seed=0)
DESK_BREAKER_EPS = Fraction(315, 2048)


def pmap(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Order-preserving map, threaded when ``jobs > 1``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _count(quantity: str, violations: int, count: int, seed: int | None, method: str = "exhaustive",
           **detail) -> Measurement:
    return Measurement(quantity, Fraction(violations), method, count, seed, 0.0,
                       {k: str(v) for k, v in detail.items()})


# --- components -------------------------------------------------------------


def hash_certification(seed: int, flat: int = 200, affine: int = 500) -> Measurement:
    """Strong error of Toeplitz hashing (n=8, m=2) on seeded flat and affine 4-sources."""
    e = hash_extractor(8, m=2, k=4)
    fam = list(flat_family(8, 4, flat, seed)) + [s.support_array() for s in random_affine_sources(8, 4, affine, seed)]
    worst = max(strong_error_on(e, np.asarray(s, dtype=np.int64)) for s in fam)
    return Measurement("hash_strong_error", worst, "exhaustive-family", len(fam), seed, 0.25,
                       {"n": "8", "k": "4", "m": "2", "flat": str(flat), "affine": str(affine)})


def advice_distinctness(cfg: PlannerConfig, seed: int, pairs: int | None = None, jobs: int = 1) -> Measurement:
    """``1 - min Pr[advice != tampered advice]`` over seeded fixed-point-free tamperings.

    Two-source configs use flat ``k``-sources and table tamperings; affine
    configs use random ``k``-dimensional affine sources with ``Y = L X``.
    """
    p = build_components(cfg)["advgen"]
    n, K = cfg.n, 1 << cfg.k
    if is_two_source(cfg):
        pairs = 200 if pairs is None else pairs
        rng = np.random.default_rng(seed)
        srcs = [(rng.choice(1 << n, K, replace=False), rng.choice(1 << n, K, replace=False)) for _ in range(pairs)]

        def one(i: int) -> Fraction:
            f, g = gen_tamper_pair(n, "table", seed + i)
            xs, ys = srcs[i]
            return distinctness_two_source(p, xs, ys, f.as_table(), g.as_table())
        kind = "table"
    else:
        pairs = 100 if pairs is None else pairs
        srcs = random_affine_sources(n, cfg.k, pairs, seed)
        prng = random.Random(seed)
        Ls = [np.array([prng.getrandbits(n) for _ in range(p.y_len)], dtype=np.int64) for _ in range(pairs)]

        def one(i: int) -> Fraction:
            A, _ = gen_tamper_pair(n, "affine", seed + i)
            return distinctness_affine(p, srcs[i].support_array(), Ls[i], np.array(A.matrix.rows, dtype=np.int64), A.offset)
        kind = "affine"
    vals = pmap(one, list(range(pairs)), jobs)
    worst = min(vals)
    return Measurement("advice_collision", 1 - worst, "exhaustive-per-tamper", pairs, seed, cfg.eps2,
                       {"kind": kind, "min_distinct": str(worst)})


def desk_breaker_certification() -> Measurement:
    """Breaker distance on the desk fixture family against the locked declared error."""
    b = build_breaker(**DESK_BREAKER)
    fixtures = breaker_fixture_family(b, **DESK_BREAKER_FIXTURES)
    _, cert = certify_breaker(b, fixtures)
    detail = {f"kind:{k}": str(v) for k, v in sorted(cert.per_kind.items())}
    detail["tuple_check"] = str(cert.tuple_check)
    return Measurement("breaker_distance", cert.measured_eps, "exhaustive-family", cert.fixtures,
                       DESK_BREAKER_FIXTURES["seed"], float(DESK_BREAKER_EPS), detail)


def maj_xor_bias(seed: int, n: int = 15, t: int = 4) -> Measurement:
    """``|Pr[Maj xor Maj = 1] - 1/2|`` under exact ``t``-wise independence, against ``C / sqrt(t)``."""
    b = maj_xor_maj_bias(kwise_samples(2 * n, t, seed), n)
    return Measurement("maj_xor_maj_bias", b, "exhaustive", 1 << (5 * t), seed, MAJ_XOR_CONSTANT / math.sqrt(t),
                       {"n": str(n), "t": str(t), "C": str(MAJ_XOR_CONSTANT)})


def nobf_checks(seed: int) -> list[Measurement]:
    """Empty bad set on uniform bits, planted coordinate found, zero t-wise distance of the generator."""
    out = []
    cert = certify_nobf(Distribution.uniform(8), q=0, t=2, gamma=0.0)
    out.append(_count("nobf_uniform_bad_set", cert.size, 1, None))
    misses = 0
    cases = [(n, t, s) for n in (5, 6, 7) for t in (2, 3) for s in range(2)]
    for n, t, s in cases:
        target = (seed + s) % n
        sp = planted_samples(kwise_samples(n, t, seed + s), n, target)
        c = certify_nobf(Distribution.from_samples(n, sp), q=1, t=t, gamma=0.0)
        misses += c.bad_set != (target,)
    out.append(_count("nobf_planted_missed", misses, len(cases), seed))
    worst = max(twise_distance(kwise_generator(n, t, seed), t) for n in range(2, 8) for t in range(1, min(n, 3) + 1))
    out.append(Measurement("kwise_twise_distance", Fraction(worst), "exhaustive", 0, seed, 0.0))
    return out


def lsrext_check(cfg: PlannerConfig, seed: int, count: int = 2000) -> Measurement:
    """Worst number of grid rows without an exactly uniform column, over sampled linear subspaces."""
    rng = random.Random(seed)
    bases = []
    for src in random_affine_sources(cfg.n, cfg.k, count, rng.getrandbits(32)):
        bases.append(src.payload.basis)
    bad = lsrext_bad_rows(cfg, np.array(bases, dtype=np.int64))
    return Measurement("lsrext_bad_rows", Fraction(int(bad.max())), "exhaustive-family", count, seed,
                       float(lsrext_bad_budget(cfg)), {"D": str(cfg.D), "B": str(cfg.B)})


def components_suite(cfg: PlannerConfig, seed: int, jobs: int = 1) -> list[Measurement]:
    out = [hash_certification(seed), advice_distinctness(cfg, seed, jobs=jobs), desk_breaker_certification(),
           maj_xor_bias(seed)]
    out.extend(nobf_checks(seed))
    if cfg.profile == "constaffine":
        out.append(lsrext_check(cfg, seed))
    return out


# --- pipelines --------------------------------------------------------------


def scenario_measurements(cfg: PlannerConfig, seed: int, jobs: int = 1) -> list[tuple[str, Measurement, object]]:
    """Exact nm-distance per case scenario, with the raw output pair for 1-bit profiles."""
    build_components(cfg)
    E, m = extractor(cfg), output_bits(cfg)
    scen = case_scenario_suite(cfg.profile, cfg.n, cfg.k, seed=seed)

    def one(sc):
        if is_two_source(cfg):
            ms = nm_distance_two_source(E, m, sc.X, sc.Y, sc.f, sc.g, budget=cfg.eps)
            xs, ys = sc.X.support_array(), sc.Y.support_array()
            x, y = np.repeat(xs, len(ys)), np.tile(ys, len(xs))
            pair = (E(x, y), E(sc.f(x), sc.g(y)))
        else:
            ms = nm_distance_affine(E, m, sc.X, sc.f, budget=cfg.eps)
            xs = sc.X.support_array()
            pair = (E(xs), E(sc.f(xs)))
        return f"{sc.regime}/{sc.variant}", ms, pair

    return pmap(one, scen, jobs)


def pipelines_suite(cfg: PlannerConfig, seed: int, jobs: int = 1) -> list[Measurement]:
    out = []
    rows = scenario_measurements(cfg, seed, jobs)
    slack_violations, bridge_violations = 0, 0
    for i, (name, ms, pair) in enumerate(rows):
        detail = dict(ms.detail, scenario=name, index=str(i))
        out.append(Measurement(ms.quantity, ms.value, ms.method, ms.count, seed, ms.budget, detail))
        slack_violations += Fraction(ms.detail["plain"]) > ms.value
        if output_bits(cfg) == 1:
            bridge_violations += not bridge_check(*pair)[2]
    out.append(_count("plain_exceeds_nm", slack_violations, len(rows), seed))
    if output_bits(cfg) == 1:
        out.append(_count("bridge_violations", bridge_violations, len(rows), seed))
    out.append(_count("replay_mismatches", replay_failures(cfg, seed), 16, seed))
    return out


def replay_failures(cfg: PlannerConfig, seed: int, count: int = 16) -> int:
    """Traces of seeded inputs that fail to round-trip through text and replay bit for bit."""
    rng = random.Random(seed)
    bad = 0
    for _ in range(count):
        x = rng.getrandbits(cfg.n)
        y = rng.getrandbits(cfg.n) if is_two_source(cfg) else None
        tr = trace(cfg, x, y)
        back = PipelineTrace.from_text(tr.to_text())
        expected = int(stages(cfg, np.array(x), None if y is None else np.array(y))["output"])
        bad += not (back == tr and replay(cfg, back) and back.output == expected)
    return bad


# --- lemmas -----------------------------------------------------------------


def xor_lemma_measurement(seed: int, trials: int = 10_000) -> Measurement:
    rep = check_xor_lemma(trials, seed)
    return _count("xor_lemma_violations", rep.violations, trials, seed, "sampled-exact",
                  worst_ratio=round(rep.worst_ratio, 12))


def sampler_tail_measurement(seed: int, targets: int = 20) -> Measurement:
    """Extractor-as-sampler tail on one flat ``(8, 4)`` source with ``k = 2``, ``d = m = 3``."""
    rng = random.Random(seed)
    e = random_table_extractor(8, 3, 3, rng.getrandbits(32))
    support = np.array(sorted(rng.sample(range(256), 16)), dtype=np.int64)
    Rs = [rng.randrange(1, 255) for _ in range(targets)]
    rep = check_sampler_tail(e, 2, support, Rs)
    return _count("sampler_tail_violations", rep.violations, targets, seed, eps=rep.eps,
                  worst_bad_fraction=rep.worst_bad_fraction, bound=rep.bound)


def affine_uniform_measurement(k: int = 4, bases: np.ndarray | None = None, seed: int | None = None) -> Measurement:
    """``1 - min`` fraction of seeds with exactly uniform output, against ``2 eps``.

    ``eps`` is the exact worst strong error of the same extractor over the
    same affine sources, so the check needs no tolerance.
    """
    e = hash_extractor(8, m=2, k=k)
    uniform, err = linear_affine_profile(e, k, bases)
    D = 1 << e.d
    eps = Fraction(int(err.max()), D << e.m)
    frac = Fraction(int(uniform.min()), D)
    method = "exhaustive" if bases is None else "exhaustive-family"
    return Measurement("affine_nonuniform_seeds", 1 - frac, method, len(uniform), seed, float(2 * eps),
                       {"eps": str(eps), "min_uniform_fraction": str(frac)})


def lemmas_suite(cfg: PlannerConfig, seed: int, jobs: int = 1) -> list[Measurement]:
    return [xor_lemma_measurement(seed), sampler_tail_measurement(seed), affine_uniform_measurement()]


RUNNERS: dict[str, Callable[[PlannerConfig, int, int], list[Measurement]]] = {
    "components": components_suite,
    "pipelines": pipelines_suite,
    "lemmas": lemmas_suite,
}


def resolve_suites(names: Iterable[str]) -> list[str]:
    """Expand ``all`` and drop duplicates, keeping the canonical order."""
    names = list(names)
    if not names:
        raise ValueError("no suite selected")
    for nm in names:
        if nm != "all" and nm not in RUNNERS:
            raise ValueError(f"unknown suite {nm!r}")
    chosen = set(SUITES) if "all" in names else set(names)
    return [s for s in SUITES if s in chosen]

