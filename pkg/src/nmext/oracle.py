"""Exhaustive ground truth: tamper functions, exact non-malleability, component certification.

Every measurement here is computed by enumerating the relevant supports and
is returned as an exact :class:`~fractions.Fraction` inside a
:class:`Measurement` that records how it was obtained.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .distlab import Source
from .errors import BudgetExceeded, DimensionError
from .gf2core import (
    AffineSubspace,
    BitString,
    Gf2Matrix,
    coset_offsets,
    gaussian_binomial,
    gf2_rank,
    gf2_solve,
    in_span,
    mask,
    rref_subspaces,
)
from .measure import conditional_distance, distance_from_uniform, parity
from .primitives import ExtractorSpec, strong_error_on, worst_flat_strong_error_m1

TABLE_TAMPER_MAX_BITS = 16
NM_PAIR_BUDGET = 1 << 24
AFFINE_DIM_BUDGET = 20


# --- tamper functions ------------------------------------------------------


@dataclass(frozen=True)
class TamperFunction:
    """Total map on ``{0,1}^n``: a lookup table or ``x -> M x + c``."""

    n: int
    kind: str
    fixed_point_free: bool
    table: np.ndarray | None = field(default=None, repr=False, compare=False)
    matrix: Gf2Matrix | None = field(default=None, repr=False)
    offset: int = 0
    label: str = ""

    def __call__(self, x):
        x = np.asarray(x, dtype=np.int64)
        if self.kind == "table":
            return self.table[x]
        out = np.zeros_like(x)
        for i, row in enumerate(self.matrix.rows):
            out |= parity(x & row) << i
        return out ^ self.offset

    def as_table(self) -> np.ndarray:
        if self.kind == "table":
            return self.table
        if self.n > TABLE_TAMPER_MAX_BITS:
            raise BudgetExceeded(f"table of 2^{self.n} entries")
        return self(np.arange(1 << self.n, dtype=np.int64))


def table_tamper(table: Sequence[int] | np.ndarray, label: str = "") -> TamperFunction:
    table = np.asarray(table, dtype=np.int64)
    n = max(len(table) - 1, 0).bit_length()
    if len(table) != 1 << n:
        raise DimensionError(f"table of {len(table)} entries is not a power of two")
    if n > TABLE_TAMPER_MAX_BITS:
        raise BudgetExceeded(f"table of 2^{n} entries")
    fpf = bool(np.all(table != np.arange(len(table))))
    return TamperFunction(n, "table", fpf, table, None, 0, label)


def affine_tamper(matrix: Gf2Matrix, offset: int, label: str = "") -> TamperFunction:
    """``x -> M x + c``; fixed-point-free iff ``(M + I) x = c`` has no solution."""
    n = matrix.ncols
    if matrix.shape != (n, n):
        raise DimensionError(f"affine tamper needs a square matrix, got {matrix.shape}")
    fpf = gf2_solve(matrix + Gf2Matrix.identity(n), BitString(offset, n)) is None
    return TamperFunction(n, "affine", fpf, None, matrix, offset, label)


def identity_tamper(n: int) -> TamperFunction:
    return affine_tamper(Gf2Matrix.identity(n), 0, "identity")


def complement_tamper(n: int) -> TamperFunction:
    return affine_tamper(Gf2Matrix.identity(n), mask(n), "complement")


def shift_tamper(n: int, c: int) -> TamperFunction:
    return affine_tamper(Gf2Matrix.identity(n), c, f"shift[{c}]")


def _random_derangement_table(rng: np.random.Generator, n: int, bijective: bool) -> np.ndarray:
    N = 1 << n
    xs = np.arange(N, dtype=np.int64)
    if bijective:
        # conjugate of a nonzero shift: a bijection with no fixed points
        perm = rng.permutation(N)
        inv = np.empty_like(perm)
        inv[perm] = xs
        c = int(rng.integers(1, N))
        return perm[inv ^ c]
    table = rng.integers(0, N, size=N, dtype=np.int64)
    fixed = table == xs
    table[fixed] ^= 1 << rng.integers(0, n, size=int(fixed.sum()))
    return table


def random_affine_fpf(rng: random.Random, n: int, rank: int | None = None) -> TamperFunction:
    """Random ``x -> (N + I) x + c`` with ``c`` outside the column space of ``N``."""
    while True:
        if rank is None:
            rows = tuple(rng.getrandbits(n) for _ in range(n))
        else:
            # N = U V with U n x rank, V rank x n
            U = [rng.getrandbits(rank) for _ in range(n)]
            V = [rng.getrandbits(n) for _ in range(rank)]
            rows = tuple(_combine(u, V) for u in U)
        N = Gf2Matrix(rows, n)
        if gf2_rank(rows) == n:
            continue
        c = rng.getrandbits(n)
        if not in_span(c, [v for v in N.columns() if v]):
            return affine_tamper(N + Gf2Matrix.identity(n), c, "affine-fpf")


def _combine(u: int, V: Sequence[int]) -> int:
    out = 0
    for j, v in enumerate(V):
        if (u >> j) & 1:
            out ^= v
    return out


def _span_dim(vectors: Iterable[int]) -> int:
    return gf2_rank(tuple(vectors))


def random_affine_map(rng: random.Random, n: int) -> TamperFunction:
    return affine_tamper(Gf2Matrix(tuple(rng.getrandbits(n) for _ in range(n)), n), rng.getrandbits(n), "affine")


def gen_tamper_pair(n: int, kind: str, seed: int) -> tuple[TamperFunction, TamperFunction]:
    """Deterministic pair with at least one fixed-point-free member.

    ``table`` pairs rotate through four styles keyed by ``seed % 4``:
    (random fpf, random), (random, random fpf), (shift, identity) and
    (identity, shift).  ``affine`` pairs are (random fpf affine, random affine).
    """
    if kind == "affine":
        rng = random.Random(seed)
        return random_affine_fpf(rng, n), random_affine_map(rng, n)
    if kind != "table":
        raise ValueError(f"unknown tamper kind {kind!r}")
    if n > TABLE_TAMPER_MAX_BITS:
        raise BudgetExceeded(f"table tampering on {n} bits")
    rng = np.random.default_rng(seed)
    N = 1 << n
    style = seed % 4
    if style == 0:
        return (table_tamper(_random_derangement_table(rng, n, False), "random-fpf"),
                table_tamper(rng.integers(0, N, size=N, dtype=np.int64), "random"))
    if style == 1:
        return (table_tamper(rng.integers(0, N, size=N, dtype=np.int64), "random"),
                table_tamper(_random_derangement_table(rng, n, False), "random-fpf"))
    c = 1 << int(rng.integers(0, n))
    shift = table_tamper(np.arange(N, dtype=np.int64) ^ c, f"shift[{c}]")
    ident = table_tamper(np.arange(N, dtype=np.int64), "identity")
    return (shift, ident) if style == 2 else (ident, shift)


# --- measurements ----------------------------------------------------------


@dataclass(frozen=True)
class Measurement:
    quantity: str
    value: Fraction
    method: str = "exhaustive"
    count: int = 0
    seed: int | None = None
    budget: float | None = None
    detail: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return self.budget is None or self.value <= Fraction(self.budget)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value"] = str(self.value)
        d["value_float"] = float(self.value)
        d["passed"] = self.passed
        return d


def _support(src) -> np.ndarray:
    if isinstance(src, Source):
        return src.support_array()
    return np.asarray(src, dtype=np.int64)


def nm_distance_two_source(E: Callable, m: int, X, Y, f: TamperFunction, g: TamperFunction,
                           budget: float | None = None) -> Measurement:
    """Exact distance of ``(E(X,Y), E(f X, g Y))`` from ``(U_m, E(f X, g Y))`` for flat ``X``, ``Y``."""
    xs, ys = _support(X), _support(Y)
    if len(xs) * len(ys) > NM_PAIR_BUDGET:
        raise BudgetExceeded(f"{len(xs) * len(ys)} source pairs")
    if not (f.fixed_point_free or g.fixed_point_free):
        raise ValueError("at least one tampering must be fixed-point-free")
    x = np.repeat(xs, len(ys))
    y = np.tile(ys, len(xs))
    z = np.asarray(E(x, y), dtype=np.int64)
    zt = np.asarray(E(f(x), g(y)), dtype=np.int64)
    value = conditional_distance(z, m, zt)
    plain = distance_from_uniform(z, m)
    return Measurement("nm_distance_two_source", value, "exhaustive", len(x), None, budget,
                       {"plain": str(plain), "f": f.label, "g": g.label})


def nm_distance_affine(E: Callable, m: int, X: Source | AffineSubspace, A: TamperFunction,
                       budget: float | None = None) -> Measurement:
    """Exact distance of ``(E(X), E(A X))`` from ``(U_m, E(A X))`` over an affine source."""
    sub = X.payload if isinstance(X, Source) else X
    if sub.dim > AFFINE_DIM_BUDGET:
        raise BudgetExceeded(f"affine source of dimension {sub.dim}")
    if not A.fixed_point_free:
        raise ValueError("affine tampering must be fixed-point-free")
    xs = np.asarray(sub.points(), dtype=np.int64)
    z = np.asarray(E(xs), dtype=np.int64)
    zt = np.asarray(E(A(xs)), dtype=np.int64)
    value = conditional_distance(z, m, zt)
    plain = distance_from_uniform(z, m)
    return Measurement("nm_distance_affine", value, "exhaustive", len(xs), None, budget,
                       {"plain": str(plain), "A": A.label})


# --- affine source enumeration ---------------------------------------------


@dataclass
class AffineEnumeration:
    """Canonical affine sources of one dimension, possibly truncated."""

    n: int
    k: int
    total: int
    sources: list[Source]

    @property
    def truncated(self) -> bool:
        return len(self.sources) < self.total


def iter_affine_sources(n: int, k: int, linear_only: bool = False) -> Iterator[Source]:
    """Every ``k``-dimensional affine subspace exactly once, in canonical (RREF, reduced offset) form."""
    for basis in rref_subspaces(n, k):
        offsets = [0] if linear_only else coset_offsets(n, basis)
        for c in offsets:
            yield Source.affine(AffineSubspace(tuple(basis), c, n))


def enumerate_affine_sources(n: int, k: int, limit: int | None = None, linear_only: bool = False) -> AffineEnumeration:
    if limit is None and n > 10:
        raise BudgetExceeded(f"full enumeration of affine sources in {n} bits needs a limit")
    total = gaussian_binomial(n, k) << (0 if linear_only else n - k)
    sources = list(itertools.islice(iter_affine_sources(n, k, linear_only), limit))
    return AffineEnumeration(n, k, total, sources)


def random_affine_sources(n: int, k: int, count: int, seed: int) -> list[Source]:
    """Uniformly random bases and offsets (duplicates possible)."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        basis: list[int] = []
        while len(basis) < k:
            v = rng.getrandbits(n)
            if v and not in_span(v, basis):
                basis.append(v)
        out.append(Source.affine(AffineSubspace(tuple(basis), rng.getrandbits(n), n)))
    return out


# --- extractor certification ------------------------------------------------


def certify_extractor(e: ExtractorSpec, family: Iterable | str, k: int | None = None,
                      declared: float | None = None) -> Measurement:
    """Worst exact strong-extractor distance over a family of sources.

    ``family`` is an iterable of supports or :class:`Source` objects, or the
    string ``"all"`` for every flat ``k``-source (1-bit outputs only).
    """
    budget = declared if declared is not None else e.eps
    if e.m == 0:
        return Measurement("strong_error", Fraction(0), "exhaustive", 0, None, budget)
    if isinstance(family, str):
        if family != "all" or e.m != 1 or k is None:
            raise ValueError("family 'all' needs a 1-bit extractor and an integer k")
        return Measurement("strong_error", worst_flat_strong_error_m1(e.table, k), "exhaustive-flat",
                           math.comb(1 << e.n, 1 << k), None, budget)
    worst, count = Fraction(0), 0
    for src in family:
        worst = max(worst, strong_error_on(e, _support(src)))
        count += 1
    return Measurement("strong_error", worst, "exhaustive-family", count, None, budget)


def affine_uniform_fraction(e: ExtractorSpec, sub: AffineSubspace) -> Fraction:
    """Fraction of seeds whose output on ``sub`` is exactly uniform (rank test; linear ``e`` only)."""
    if e.matrices is None:
        raise ValueError("rank test needs the extractor's matrices")
    good = 0
    for mat in e.matrices:
        images = [mat.matvec(b) for b in sub.basis]
        good += _span_dim(images) == e.m
    return Fraction(good, len(e.matrices))


def linear_affine_profile(e: ExtractorSpec, k: int, bases: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per ``k``-dimensional linear subspace: seeds with exactly uniform output, and strong error.

    On an affine source a linear map's output is uniform on an affine
    subspace of dimension ``r``, so its distance from uniform is
    ``1 - 2^(r - m)``.  ``r`` is found by counting the functionals ``u`` with
    ``u^T M`` orthogonal to the subspace.  Offsets shift outputs only, so
    linear subspaces cover every affine source.  Returns
    ``(uniform_counts, error_numerators)`` with errors over ``2^(d + m)``.
    """
    if e.matrices is None:
        raise ValueError("rank test needs the extractor's matrices")
    if bases is None:
        bases = np.array(list(rref_subspaces(e.n, k)), dtype=np.int64).reshape(-1, k)
    S, M = len(bases), 1 << e.m
    uniform = np.zeros(S, dtype=np.int64)
    err = np.zeros(S, dtype=np.int64)
    for mat in e.matrices:
        vanish = np.ones(S, dtype=np.int64)  # u = 0 always vanishes
        for u in range(1, M):
            r = 0
            for i, row in enumerate(mat.rows):
                if (u >> i) & 1:
                    r ^= row
            vanish += ~parity(bases & r).astype(bool).any(axis=1)
        uniform += vanish == 1
        # distance 1 - 2^(r-m) = 1 - 1/vanish, scaled by M
        err += M - M // vanish
    return uniform, err


# --- scenario suite ---------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    regime: str
    variant: str
    X: Source
    Y: Source | None
    f: TamperFunction
    g: TamperFunction | None


REGIMES = ("heavy-preimage", "injective", "mixed")


def _flat(rng: np.random.Generator, n: int, k: int) -> Source:
    return Source.flat(n, sorted(int(v) for v in rng.choice(1 << n, 1 << k, replace=False)))


def _collapse_to_point(n: int, support: np.ndarray, rng: np.random.Generator) -> TamperFunction:
    N = 1 << n
    outside = np.setdiff1d(np.arange(N), support)
    c = int(rng.choice(outside))
    table = np.full(N, c, dtype=np.int64)
    table[c] = c ^ 1
    return table_tamper(table, "collapse-to-point")


def _collapse_pairs(n: int, support: np.ndarray, rng: np.random.Generator) -> TamperFunction:
    """Map consecutive support pairs to one fresh point each; other inputs shift by one bit."""
    N = 1 << n
    table = np.arange(N, dtype=np.int64) ^ 1
    perm = rng.permutation(support)
    outside = rng.permutation(np.setdiff1d(np.arange(N), support))
    for j in range(0, len(perm) - 1, 2):
        table[perm[j]] = table[perm[j + 1]] = outside[j // 2]
    return table_tamper(table, "collapse-pairs")


def _bijection(n: int, rng: np.random.Generator) -> TamperFunction:
    return table_tamper(_random_derangement_table(rng, n, True), "bijection-fpf")


def _identity_table(n: int) -> TamperFunction:
    return table_tamper(np.arange(1 << n, dtype=np.int64), "identity")


def case_scenario_suite(profile: str, n: int, kx: int, ky: int | None = None, seed: int = 0,
                        per_regime: int = 2) -> list[Scenario]:
    """Tamperings engineered to land in each regime of the security argument.

    Two-source profiles: ``heavy-preimage`` collapses ``Y`` (or ``X``) to a
    single point, ``injective`` uses fixed-point-free bijections (or a single
    bit shift against the identity), ``mixed`` collapses ``Y`` pairwise so
    its entropy drops by exactly one bit.  Affine profiles use rank-deficient
    fixed-point-free maps, invertible ones, and maps whose kernel on the
    source is one-dimensional.
    """
    rng = np.random.default_rng(seed)
    prng = random.Random(seed)
    ky = kx if ky is None else ky
    out: list[Scenario] = []
    affine = profile.endswith("affine")
    for rep in range(per_regime):
        if affine:
            X = random_affine_sources(n, kx, 1, prng.getrandbits(32))[0]
            out.append(Scenario("heavy-preimage", "rank-1", X, None, random_affine_fpf(prng, n, rank=1), None))
            inj = _invertible_fpf(prng, n)
            out.append(Scenario("injective", "invertible" if rep else "shift", X, None,
                                inj if rep else shift_tamper(n, 1 << prng.randrange(n)), None))
            out.append(Scenario("mixed", "kernel-1", X, None, _kernel_one_on(prng, X.payload), None))
            continue
        X, Y = _flat(rng, n, kx), _flat(rng, n, ky)
        xs, ys = X.support_array(), Y.support_array()
        if rep % 2 == 0:
            out.append(Scenario("heavy-preimage", "y-to-point", X, Y,
                                table_tamper(rng.integers(0, 1 << n, 1 << n), "random"), _collapse_to_point(n, ys, rng)))
        else:
            out.append(Scenario("heavy-preimage", "x-to-point", X, Y, _collapse_to_point(n, xs, rng), _identity_table(n)))
        if rep % 2 == 0:
            out.append(Scenario("injective", "bijections", X, Y, _bijection(n, rng), _bijection(n, rng)))
        else:
            c = 1 << int(rng.integers(0, n))
            out.append(Scenario("injective", "y-shift", X, Y, _identity_table(n),
                                table_tamper(np.arange(1 << n) ^ c, f"shift[{c}]")))
        out.append(Scenario("mixed", "y-pairs", X, Y, _bijection(n, rng), _collapse_pairs(n, ys, rng)))
    return out


def _invertible_fpf(rng: random.Random, n: int) -> TamperFunction:
    while True:
        A = random_affine_fpf(rng, n)
        if _span_dim(A.matrix.rows) == n:
            return TamperFunction(n, "affine", True, None, A.matrix, A.offset, "invertible-fpf")


def _kernel_one_on(rng: random.Random, sub: AffineSubspace) -> TamperFunction:
    """Fixed-point-free affine map that collapses the source along one basis direction.

    ``M = I + e u^T`` style maps are invertible; instead take ``M`` killing
    the first basis vector and acting as the identity on a complement, then
    shift by a vector outside the image of ``M + I``.
    """
    n = sub.ambient_len
    while True:
        A = random_affine_fpf(rng, n)
        v = sub.basis[0]
        img = A.matrix.matvec(v)
        # adjust so that M v = 0: add (M v) w^T with w^T v = 1
        w = v & -v
        rows = tuple(row ^ (w if (img >> i) & 1 else 0) for i, row in enumerate(A.matrix.rows))
        M = Gf2Matrix(rows, n)
        cand = affine_tamper(M, A.offset, "kernel-1")
        if cand.fixed_point_free:
            return cand


# --- standalone numeric checks ----------------------------------------------


@dataclass(frozen=True)
class XorLemmaReport:
    trials: int
    seed: int
    violations: int
    worst_ratio: float


def xor_lemma_bound(p: np.ndarray) -> tuple[float, float, float]:
    """For a joint law ``p[w, w']`` on two bits: (cond. distance, dist of W, dist of W xor W')."""
    p = np.asarray(p, dtype=np.float64).reshape(2, 2)
    dw = abs(p[1].sum() - 0.5)
    dx = abs(p[0, 1] + p[1, 0] - 0.5)
    cond = 0.5 * np.abs(p - 0.5 * p.sum(axis=0, keepdims=True)).sum()
    return float(cond), float(dw), float(dx)


def check_xor_lemma(trials: int = 10_000, seed: int = 0, tol: float = 1e-12) -> XorLemmaReport:
    """Conditional distance of ``W`` given ``W'`` against four times the larger marginal distance.

    Half the trials use flat Dirichlet draws; the other half are near-uniform
    perturbations, where the inequality is tightest.
    """
    rng = np.random.default_rng(seed)
    ps = rng.dirichlet(np.ones(4), size=trials)
    near = 0.25 + rng.uniform(-0.05, 0.05, size=(trials, 4))
    near /= near.sum(axis=1, keepdims=True)
    ps[trials // 2:] = near[trials // 2:]
    violations, worst = 0, 0.0
    for p in ps:
        cond, dw, dx = xor_lemma_bound(p)
        eps = max(dw, dx)
        if cond > 4 * eps + tol:
            violations += 1
        if eps > 0:
            worst = max(worst, cond / (4 * eps))
    return XorLemmaReport(trials, seed, violations, worst)


def bridge_check(z: np.ndarray, zt: np.ndarray) -> tuple[Fraction, Fraction, bool]:
    """The XOR-lemma inequality on 1-bit pipeline outputs ``z`` and tampered ``zt``."""
    cond = conditional_distance(z, 1, zt)
    eps = max(distance_from_uniform(z, 1), distance_from_uniform(z ^ zt, 1))
    return cond, eps, cond <= 4 * eps


@dataclass(frozen=True)
class SamplerTailReport:
    k: int
    eps: Fraction
    targets: int
    worst_bad_fraction: Fraction
    bound: Fraction
    violations: int


def extractor_test_error(e: ExtractorSpec, k: int, R: int) -> Fraction:
    """Worst ``|Pr[E(X, U) in R] - |R|/2^m|`` over every flat ``k``-source, exact.

    For a fixed test the worst source is the ``2^k`` inputs with the most
    (or fewest) seeds landing in ``R``.
    """
    D, M = 1 << e.d, 1 << e.m
    hits = ((R >> e.table) & 1).sum(axis=0)
    K = 1 << k
    srt = np.sort(hits)
    mu = Fraction(bin(R).count("1"), M)
    hi = Fraction(int(srt[-K:].sum()), K * D) - mu
    lo = mu - Fraction(int(srt[:K].sum()), K * D)
    return max(hi, lo)


def check_sampler_tail(e: ExtractorSpec, k: int, support: np.ndarray, targets: Sequence[int]) -> SamplerTailReport:
    """Exhaustive check that few source points see a badly skewed seed sample of each test set.

    ``eps`` is certified exactly for the given tests first, so the check is
    of the sampler statement itself.
    """
    support = np.asarray(support, dtype=np.int64)
    if len(support) < 1 << (2 * k):
        raise ValueError(f"source needs at least 2^{2 * k} points")
    eps = max(extractor_test_error(e, k, R) for R in targets)
    D, M = 1 << e.d, 1 << e.m
    bound = Fraction(1, 1 << k)
    worst, violations = Fraction(0), 0
    outs = e.table[:, support]
    for R in targets:
        cnt = ((R >> outs) & 1).sum(axis=0)
        mu = Fraction(bin(R).count("1"), M)
        bad = sum(1 for c in cnt if abs(int(c) - mu * D) > eps * D)
        frac = Fraction(bad, len(support))
        worst = max(worst, frac)
        violations += frac >= bound
    return SamplerTailReport(k, eps, len(targets), worst, bound, violations)
