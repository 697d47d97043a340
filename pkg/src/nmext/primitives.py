"""Seeded extractors, samplers, dispersers and linear codes with checkable contracts.

Every extractor here is table backed: ``spec.table[s, x]`` is the output on
seed ``s`` and source string ``x``, so evaluation vectorizes over numpy
arrays of inputs.  Linear extractors also keep one :class:`Gf2Matrix` per
seed.
"""

from __future__ import annotations

import itertools
import math
import random
import struct
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionError, InfeasiblePlan, SearchExhausted
from .gf2core import BitString, Gf2Matrix, gf2_rank, mask
from .measure import clopper_pearson_upper, parity, popcount, strong_error

TABLE_BUDGET_BITS = 24


# --- extractors ------------------------------------------------------------


@dataclass(frozen=True)
class ExtractorSpec:
    name: str
    n: int
    d: int
    m: int
    k: float | None
    eps: float | None
    strong: bool
    linear: bool
    table: np.ndarray = field(repr=False, compare=False)
    matrices: tuple[Gf2Matrix, ...] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.table.shape != (1 << self.d, 1 << self.n):
            raise DimensionError(f"table shape {self.table.shape} does not match d={self.d}, n={self.n}")

    def __call__(self, x, s):
        """Vectorized evaluation on int (or int array) source strings and seeds."""
        return self.table[s, x]

    def eval(self, x: BitString, s: BitString) -> BitString:
        if x.length != self.n or s.length != self.d:
            raise DimensionError(f"{self.name} expects ({self.n}, {self.d}) bits, got ({x.length}, {s.length})")
        return BitString(int(self.table[s.value, x.value]), self.m)

    def certified(self, k: float, eps: float) -> ExtractorSpec:
        return replace(self, k=k, eps=eps)

    def is_linear(self) -> bool:
        """Exhaustive superposition check of every seed's map."""
        t = self.table
        if np.any(t[:, 0] != 0):
            return False
        xs = np.arange(1 << self.n, dtype=np.int64)
        rebuilt = np.zeros_like(t)
        for i in range(self.n):
            rebuilt ^= np.where((xs >> i) & 1, t[:, [1 << i]], 0)
        return bool(np.array_equal(rebuilt, t))


def _check_table_budget(n: int, d: int) -> None:
    if n + d > TABLE_BUDGET_BITS:
        raise BudgetExceeded(f"extractor table with 2^{n + d} entries")


def table_from_matrices(n: int, m: int, matrices: Sequence[Gf2Matrix]) -> np.ndarray:
    xs = np.arange(1 << n, dtype=np.int64)
    table = np.zeros((len(matrices), 1 << n), dtype=np.int64)
    for s, mat in enumerate(matrices):
        if mat.shape != (m, n):
            raise DimensionError(f"seed {s} matrix is {mat.shape}, expected {(m, n)}")
        for i, row in enumerate(mat.rows):
            table[s] |= parity(xs & row) << i
    return table


def linear_extractor(name: str, n: int, m: int, matrices: Sequence[Gf2Matrix], k=None, eps=None) -> ExtractorSpec:
    d = max(len(matrices) - 1, 0).bit_length()
    if len(matrices) != 1 << d:
        raise DimensionError(f"{len(matrices)} seeds is not a power of two")
    _check_table_budget(n, d)
    return ExtractorSpec(name, n, d, m, k, eps, True, True, table_from_matrices(n, m, matrices), tuple(matrices))


def lhl_error(m: int, k: float) -> float:
    """Strong-extractor error guaranteed for universal hashing of a ``k``-source to ``m`` bits."""
    return 2.0 ** ((m - k) / 2 - 1)


def toeplitz_matrix(s: int, n: int, m: int) -> Gf2Matrix:
    """Toeplitz matrix with entry ``(i, j) = s[j - i + m - 1]``."""
    return Gf2Matrix(tuple((s >> (m - 1 - i)) & mask(n) for i in range(m)), n)


def hash_extractor(n: int, d: int | None = None, m: int = 1, k: float | None = None) -> ExtractorSpec:
    """Toeplitz hashing ``x -> T_s x``; seed bits beyond ``n + m - 1`` are ignored."""
    if d is None:
        d = n + m - 1
    if m > n or d < n + m - 1:
        raise InfeasiblePlan("d >= n + m - 1 and m <= n", f"n={n}, d={d}, m={m}")
    mats = [toeplitz_matrix(s, n, m) for s in range(1 << d)]
    eps = lhl_error(m, k) if k is not None else None
    return linear_extractor("toeplitz", n, m, mats, k, eps)


def random_full_rank(rng: random.Random, m: int, n: int) -> Gf2Matrix:
    while True:
        rows = tuple(rng.getrandbits(n) for _ in range(m))
        if gf2_rank(rows) == m:
            return Gf2Matrix(rows, n)


def random_linear_extractor(n: int, d: int, m: int, seed: int) -> ExtractorSpec:
    """``2^d`` independent uniformly random full-rank ``m x n`` matrices."""
    if m > n:
        raise InfeasiblePlan("m <= n", f"n={n}, m={m}")
    rng = random.Random(seed)
    mats = [random_full_rank(rng, m, n) for _ in range(1 << d)]
    return linear_extractor(f"randlin[{seed}]", n, m, mats)


def random_table_extractor(n: int, d: int, m: int, seed: int) -> ExtractorSpec:
    _check_table_budget(n, d)
    rng = np.random.default_rng(seed)
    table = rng.integers(0, 1 << m, size=(1 << d, 1 << n), dtype=np.int64)
    return ExtractorSpec(f"randtab[{seed}]", n, d, m, None, None, True, False, table)


def strong_error_batch(table: np.ndarray, m: int, subsets: np.ndarray) -> np.ndarray:
    """Numerators of the strong error of each flat source, over the denominator ``2 D K 2^m``."""
    D = table.shape[0]
    F, K = subsets.shape
    M = 1 << m
    out = table[:, subsets]  # (D, F, K)
    keys = (np.arange(F)[None, :, None] * D + np.arange(D)[:, None, None]) * M + out
    c = np.bincount(keys.ravel(), minlength=F * D * M).reshape(F, D, M)
    return np.abs(c * M - K).sum(axis=(1, 2))


def worst_flat_strong_error_m1(table: np.ndarray, k: int, chunk: int = 512) -> Fraction:
    """Exact worst strong error over every flat ``k``-source, for 1-bit output.

    For a fixed sign pattern on the seeds the best source is the top ``2^k``
    strings of a linear score, so the maximum over all sources is a maximum
    over ``2^(D-1)`` sign patterns.
    """
    D, N = table.shape
    K = 1 << k
    if D > 20:
        raise BudgetExceeded(f"{D} seeds for the sign-pattern search")
    pm = (2 * np.asarray(table, dtype=np.int64) - 1)  # (D, N)
    best = 0
    total = 1 << (D - 1)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        signs = 1 - 2 * ((codes[:, None] >> np.arange(D)[None, :]) & 1)  # (C, D)
        scores = signs @ pm  # (C, N)
        top = -np.partition(-scores, K - 1, axis=1)[:, :K]
        best = max(best, int(np.abs(top.sum(axis=1)).max()))
        bot = np.partition(scores, K - 1, axis=1)[:, :K]
        best = max(best, int(np.abs(bot.sum(axis=1)).max()))
    return Fraction(best, 2 * D * K)


def bit_fixing_family(n: int, k: int) -> np.ndarray:
    """Every flat source that fixes ``n - k`` coordinates, as rows of support indices."""
    rows = []
    xs_free = np.arange(1 << k, dtype=np.int64)
    for free in itertools.combinations(range(n), k):
        spread = np.zeros_like(xs_free)
        for j, c in enumerate(free):
            spread |= ((xs_free >> j) & 1) << c
        fixed = [c for c in range(n) if c not in free]
        for v in range(1 << (n - k)):
            base = sum(((v >> j) & 1) << c for j, c in enumerate(fixed))
            rows.append(spread | base)
    return np.array(rows, dtype=np.int64)


def flat_family(n: int, k: int, count: int, seed: int, all_limit: int = 4096) -> np.ndarray:
    """All flat ``k``-sources when few enough, else bit-fixing ones plus random ones."""
    N, K = 1 << n, 1 << k
    if math.comb(N, K) <= all_limit:
        return np.array(list(itertools.combinations(range(N), K)), dtype=np.int64)
    rng = np.random.default_rng(seed)
    rand = np.array([np.sort(rng.choice(N, K, replace=False)) for _ in range(count)], dtype=np.int64)
    if math.comb(n, k) << (n - k) <= 4 * count:
        return np.concatenate([bit_fixing_family(n, k), rand])
    return rand


def _local_search(fam: np.ndarray, n: int, d: int, m: int, k: int, goal: int, iters: int,
                  rng: np.random.Generator) -> tuple[np.ndarray, int]:
    D, N, M, K = 1 << d, 1 << n, 1 << m, 1 << k
    table = rng.integers(0, M, size=(D, N), dtype=np.int64)
    F = len(fam)
    member = [[] for _ in range(N)]
    for f, row in enumerate(fam):
        for x in row:
            member[int(x)].append(f)
    member = [np.array(fs, dtype=np.int64) for fs in member]
    # per-source counts c[f, s, z] let one move update the objective incrementally
    keys = (np.arange(F)[None, :, None] * D + np.arange(D)[:, None, None]) * M + table[:, fam]
    counts = np.bincount(keys.ravel(), minlength=F * D * M).reshape(F, D, M)
    per_src = np.abs(counts * M - K).sum(axis=(1, 2))
    best = int(per_src.max())
    for _ in range(iters):
        if best <= goal:
            break
        f = int(rng.choice(np.flatnonzero(per_src == best)))
        x = int(rng.choice(fam[f]))
        s = int(rng.integers(D))
        old = int(table[s, x])
        new = int(rng.integers(M - 1))
        new += new >= old
        fs = member[x]
        before = np.abs(counts[fs, s, :] * M - K).sum(axis=1)
        counts[fs, s, old] -= 1
        counts[fs, s, new] += 1
        after = np.abs(counts[fs, s, :] * M - K).sum(axis=1)
        trial = per_src.copy()
        trial[fs] += after - before
        cand = int(trial.max())
        if cand <= best:
            table[s, x] = new
            per_src = trial
            best = cand
        else:
            counts[fs, s, new] -= 1
            counts[fs, s, old] += 1
    return table, best


def brute_optimal_extractor(n: int, d: int, m: int, k: int, target: float | None = None, seed: int = 0,
                            iters: int = 4000, restarts: int = 8, family_size: int = 256) -> ExtractorSpec:
    """Restarted local search over truth tables minimizing worst strong error on a flat-source family.

    The family is every flat ``k``-source when there are few, otherwise the
    bit-fixing sources plus ``family_size`` random ones.  The returned spec
    declares the error measured on that family.  Raises
    :class:`SearchExhausted` if ``target`` is not met within the move budget.
    """
    if n > 12 or d > 6 or m > 2:
        raise InfeasiblePlan("n <= 12, d <= 6, m <= 2", f"n={n}, d={d}, m={m}")
    fam = flat_family(n, k, family_size, seed)
    denom = 2 * (1 << d) * (1 << k) * (1 << m)
    goal = -1 if target is None else math.floor(target * denom + 1e-9)
    rng = np.random.default_rng(seed)
    best_table, best = None, None
    for _ in range(restarts):
        table, score = _local_search(fam, n, d, m, k, goal, iters, rng)
        if best is None or score < best:
            best_table, best = table, score
        if best <= goal:
            break
    measured = Fraction(best, denom)
    if target is not None and measured > target:
        raise SearchExhausted(f"best error {float(measured):.4f} above target {target} after {restarts}x{iters} moves")
    return ExtractorSpec(f"searched[{seed}]", n, d, m, k, float(measured), True, False, best_table)


def extractor_as_sampler(e: ExtractorSpec, x: BitString) -> list[BitString]:
    """The ``2^d`` outputs on ``x``, one per seed in seed order."""
    return [BitString(int(v), e.m) for v in e.table[:, x.value]]


# --- averaging sampler -----------------------------------------------------


def _next_prime(n: int) -> int:
    p = max(n, 2)
    while any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
        p += 1
    return p


@dataclass(frozen=True)
class AveragingSampler:
    """Index hopping ``a*j + b mod p`` with collisions and overflow repaired by increment."""

    r_bits: int
    n_items: int
    t_samples: int

    def __post_init__(self) -> None:
        if not 0 < self.t_samples <= self.n_items:
            raise InfeasiblePlan("t <= n", f"t={self.t_samples}, n={self.n_items}")

    @property
    def prime(self) -> int:
        return _next_prime(self.n_items)

    def __call__(self, seed: int) -> tuple[int, ...]:
        p, n = self.prime, self.n_items
        a = 1 + seed % (p - 1)
        b = (seed // (p - 1)) % p
        used: set[int] = set()
        out = []
        for j in range(self.t_samples):
            v = (a * j + b) % p
            while v >= n or v in used:
                v = (v + 1) % p
            used.add(v)
            out.append(v)
        return tuple(out)

    def all_samples(self) -> np.ndarray:
        return np.array([self(s) for s in range(1 << self.r_bits)], dtype=np.int64)

    def declared_gamma(self, mu: float, theta: float) -> float:
        """Chebyshev bound ``mu (1 - mu) / (t theta^2)`` for pairwise-independent samples."""
        return min(1.0, mu * (1 - mu) / (self.t_samples * theta**2))


def averaging_sampler(r_bits: int, n_items: int, t_samples: int) -> AveragingSampler:
    return AveragingSampler(r_bits, n_items, t_samples)


def sampler_failure_fraction(samp: AveragingSampler, f: np.ndarray, mu: float, theta: float) -> Fraction:
    """Fraction of seeds whose sampled average of ``f`` falls below ``mu - theta``."""
    samples = samp.all_samples()
    avg = np.asarray(f, dtype=np.float64)[samples].mean(axis=1)
    return Fraction(int((avg < mu - theta - 1e-12).sum()), len(samples))


# --- dispersers ------------------------------------------------------------


@dataclass(frozen=True)
class DisperserTable:
    n_log: int
    d_log: int
    m_log: int
    K: int
    eps: float
    table: np.ndarray = field(repr=False, compare=False)
    method: str = "unchecked"
    audit_size: int = 0
    failure_bound: float = 0.0

    def __call__(self, x, y):
        return self.table[x, y]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DisperserTable):
            return NotImplemented
        return (self.n_log, self.d_log, self.m_log, self.K, self.eps, self.method, self.audit_size) == (
            other.n_log, other.d_log, other.m_log, other.K, other.eps, other.method, other.audit_size,
        ) and np.array_equal(self.table, other.table)


def _neighbourhood_masks(table: np.ndarray) -> np.ndarray:
    masks = np.zeros(table.shape[0], dtype=np.int64)
    for col in table.T:
        masks |= np.left_shift(1, col.astype(np.int64))
    return masks


def certify_disperser(table: np.ndarray, m_log: int, K: int, eps: float, audit: int = 100_000,
                      seed: int = 0, budget: int = 1 << 21) -> tuple[bool, str, int, float]:
    """Check the covering property; returns ``(ok, method, checked, failure_bound)``.

    ``dual`` enumerates every output set of size ``ceil(eps M) - 1`` and
    counts inputs whose whole neighbourhood lies inside it; ``subsets``
    enumerates input sets of size ``K``; ``sampled`` audits random ones.
    """
    N = table.shape[0]
    M = 1 << m_log
    need = math.ceil(eps * M - 1e-12)
    if need <= 1:
        return True, "trivial", 0, 0.0
    if K > N:
        return True, "vacuous", 0, 0.0
    masks = _neighbourhood_masks(table)
    small = need - 1
    if M <= 62 and math.comb(M, small) <= budget:
        checked = 0
        for chunk in _subset_masks(M, small, 1 << 14):
            inside = ((masks[None, :] & ~chunk[:, None]) == 0).sum(axis=1)
            checked += len(chunk)
            if np.any(inside >= K):
                return False, "dual", checked, 1.0
        return True, "dual", checked, 0.0
    if math.comb(N, K) <= budget:
        checked = 0
        for combo in itertools.combinations(range(N), K):
            u = 0
            for x in combo:
                u |= int(masks[x])
            checked += 1
            if u.bit_count() < need:
                return False, "subsets", checked, 1.0
        return True, "subsets", checked, 0.0
    rng = np.random.default_rng(seed)
    for i in range(audit):
        pick = rng.choice(N, K, replace=False)
        u = np.bitwise_or.reduce(masks[pick])
        if int(u).bit_count() < need:
            return False, "sampled", i + 1, 1.0
    return True, "sampled", audit, clopper_pearson_upper(0, audit)


def _subset_masks(M: int, size: int, chunk: int):
    buf = []
    for combo in itertools.combinations(range(M), size):
        buf.append(sum(1 << c for c in combo))
        if len(buf) == chunk:
            yield np.array(buf, dtype=np.int64)
            buf = []
    if buf or size == 0:
        yield np.array(buf or [0], dtype=np.int64)


def build_disperser(n_log: int, d_log: int, m_log: int, K: int, eps: float, seed: int = 0,
                    max_tries: int = 64, audit: int = 100_000) -> DisperserTable:
    """Resample random tables until one certifies."""
    if n_log > 12:
        raise BudgetExceeded(f"2^{n_log} disperser inputs")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        table = rng.integers(0, 1 << m_log, size=(1 << n_log, 1 << d_log), dtype=np.int64)
        ok, method, checked, bound = certify_disperser(table, m_log, K, eps, audit=audit, seed=seed)
        if ok:
            return DisperserTable(n_log, d_log, m_log, K, eps, table, method, checked, bound)
    raise SearchExhausted(f"no certified disperser in {max_tries} tries")


def srsamp(e: ExtractorSpec, g: DisperserTable, x: BitString, s: int, z: int) -> BitString:
    """Extractor output on ``x`` with seed ``g(s, z)``."""
    if g.m_log != e.d:
        raise DimensionError(f"disperser outputs {g.m_log} bits but the extractor seed has {e.d}")
    return e.eval(x, BitString(int(g.table[s, z]), e.d))


def srsamp_failure(e: ExtractorSpec, g: DisperserTable, support: np.ndarray, eps: float) -> Fraction:
    """Worst ``Pr_x[Pr_s[all z land in T] > 2 eps]`` over tests ``|T| <= eps 2^m``."""
    seeds = g.table  # (S, Z)
    outs = e.table[seeds][..., support]  # (S, Z, |X|)
    M = 1 << e.m
    size = math.floor(eps * M + 1e-12)
    worst = Fraction(0)
    for tsize in range(1, size + 1):
        for T in itertools.combinations(range(M), tsize):
            tmask = sum(1 << t for t in T)
            hit = ((tmask >> outs) & 1).all(axis=1)  # (S, |X|)
            bad = hit.mean(axis=0) > 2 * eps
            worst = max(worst, Fraction(int(bad.sum()), len(support)))
    return worst


# --- linear codes ----------------------------------------------------------


@dataclass(frozen=True)
class LinearCodeSpec:
    n: int
    n1: int
    generator: Gf2Matrix = field(repr=False)
    min_distance: int
    distance_exact: bool = True
    name: str = "code"

    def __post_init__(self) -> None:
        if self.generator.shape != (self.n1, self.n):
            raise DimensionError(f"generator {self.generator.shape} for an ({self.n1}, {self.n}) code")
        if self.n1 > 63:
            raise BudgetExceeded(f"codewords of {self.n1} bits")

    @property
    def columns(self) -> np.ndarray:
        return np.array(self.generator.columns(), dtype=np.int64)

    def encode_array(self, msgs) -> np.ndarray:
        msgs = np.asarray(msgs, dtype=np.int64)
        out = np.zeros_like(msgs)
        for j, col in enumerate(self.columns):
            out ^= np.where((msgs >> j) & 1, col, 0)
        return out


def code_encode(c: LinearCodeSpec, msg: BitString) -> BitString:
    if msg.length != c.n:
        raise DimensionError(f"message of {msg.length} bits for a code on {c.n}")
    return BitString(int(c.encode_array(np.array([msg.value]))[0]), c.n1)


def code_min_distance(generator: Gf2Matrix) -> tuple[int, bool]:
    """Minimum nonzero codeword weight, exhaustive up to 16 message bits."""
    n = generator.ncols
    if n > 16:
        # every nonzero message touches some column; lightest column is an upper bound only
        raise BudgetExceeded(f"exhaustive distance for {n} message bits")
    cols = generator.columns()
    msgs = np.arange(1, 1 << n, dtype=np.int64)
    cw = np.zeros_like(msgs)
    for j, col in enumerate(cols):
        cw ^= np.where((msgs >> j) & 1, col, 0)
    return int(popcount(cw).min()), True


def repetition_parity_code(n: int) -> LinearCodeSpec:
    """Codeword ``x x x p`` with ``p_i = x_i xor x_{i+1 mod n}``; rate 1/4."""
    rows = []
    for _ in range(3):
        rows += [1 << i for i in range(n)]
    rows += [(1 << i) | (1 << ((i + 1) % n)) if n > 1 else 0 for i in range(n)]
    gen = Gf2Matrix(tuple(rows), n)
    dist, exact = code_min_distance(gen)
    return LinearCodeSpec(n, 4 * n, gen, dist, exact, "rep3+parity")


def random_linear_code(n: int, n1: int, seed: int, tries: int = 64) -> LinearCodeSpec:
    """Best minimum distance among ``tries`` random generators."""
    rng = random.Random(seed)
    best = None
    for _ in range(tries):
        while True:
            gen = Gf2Matrix(tuple(rng.getrandbits(n) for _ in range(n1)), n)
            if gf2_rank(gen.transpose()) == n:
                break
        dist, exact = code_min_distance(gen)
        if best is None or dist > best.min_distance:
            best = LinearCodeSpec(n, n1, gen, dist, exact, f"random[{seed}]")
    return best


# --- binary container ------------------------------------------------------

_HEADER = struct.Struct("<4sHHHHHH")


def _pack(magic: bytes, dims: Sequence[int], body: bytes) -> bytes:
    d = list(dims) + [0] * (5 - len(dims))
    return _HEADER.pack(magic, 1, *d) + body


def _unpack(blob: bytes, magic: bytes) -> tuple[list[int], bytes]:
    if len(blob) < _HEADER.size:
        raise ValueError("truncated container")
    got, version, *dims = _HEADER.unpack_from(blob)
    if got != magic:
        raise ValueError(f"expected {magic!r} container, found {got!r}")
    if version != 1:
        raise ValueError(f"unsupported container version {version}")
    return dims, blob[_HEADER.size:]


_METHODS = ["unchecked", "trivial", "vacuous", "dual", "subsets", "sampled"]


def disperser_to_bytes(g: DisperserTable) -> bytes:
    body = struct.pack("<QddQ", g.K, g.eps, g.failure_bound, g.audit_size)
    body += g.table.astype("<u2").tobytes()
    return _pack(b"NMDT", [g.n_log, g.d_log, g.m_log, _METHODS.index(g.method)], body)


def disperser_from_bytes(blob: bytes) -> DisperserTable:
    (n_log, d_log, m_log, method, _), body = _unpack(blob, b"NMDT")
    K, eps, bound, audit = struct.unpack_from("<QddQ", body)
    raw = np.frombuffer(body[32:], dtype="<u2").astype(np.int64)
    table = raw.reshape(1 << n_log, 1 << d_log)
    return DisperserTable(n_log, d_log, m_log, K, eps, table, _METHODS[method], audit, bound)


def code_to_bytes(c: LinearCodeSpec) -> bytes:
    body = struct.pack("<B", len(c.name)) + c.name.encode()
    body += np.array(c.generator.rows, dtype="<u8").tobytes()
    return _pack(b"NMLC", [c.n, c.n1, c.min_distance, int(c.distance_exact)], body)


def code_from_bytes(blob: bytes) -> LinearCodeSpec:
    (n, n1, dist, exact, _), body = _unpack(blob, b"NMLC")
    ln = body[0]
    name = body[1:1 + ln].decode()
    rows = np.frombuffer(body[1 + ln:], dtype="<u8")
    return LinearCodeSpec(n, n1, Gf2Matrix(tuple(int(r) for r in rows), n), dist, bool(exact), name)


def extractor_to_bytes(e: ExtractorSpec) -> bytes:
    flags = int(e.strong) | (int(e.linear) << 1) | (int(e.matrices is not None) << 2)
    nan = float("nan")
    body = struct.pack("<dd", nan if e.k is None else e.k, nan if e.eps is None else e.eps)
    body += struct.pack("<B", len(e.name)) + e.name.encode()
    body += e.table.astype("<u2").tobytes()
    if e.matrices is not None:
        body += np.array([r for mat in e.matrices for r in mat.rows], dtype="<u8").tobytes()
    return _pack(b"NMEX", [e.n, e.d, e.m, flags], body)


def extractor_from_bytes(blob: bytes) -> ExtractorSpec:
    (n, d, m, flags, _), body = _unpack(blob, b"NMEX")
    k, eps = struct.unpack_from("<dd", body)
    ln = body[16]
    name = body[17:17 + ln].decode()
    off = 17 + ln
    size = (1 << d) * (1 << n) * 2
    table = np.frombuffer(body[off:off + size], dtype="<u2").astype(np.int64).reshape(1 << d, 1 << n)
    mats = None
    if flags & 4:
        rows = np.frombuffer(body[off + size:], dtype="<u8")
        mats = tuple(Gf2Matrix(tuple(int(r) for r in rows[s * m:(s + 1) * m]), n) for s in range(1 << d))
    return ExtractorSpec(name, n, d, m, None if math.isnan(k) else k, None if math.isnan(eps) else eps,
                         bool(flags & 1), bool(flags & 2), table, mats)


def strong_error_on(e: ExtractorSpec, support: np.ndarray, seed_weights=None) -> Fraction:
    """Exact strong error of ``e`` on the flat source with the given support."""
    return strong_error(e.table[:, support], e.m, seed_weights=seed_weights)
