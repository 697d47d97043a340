"""Resilient outer functions, influence and bias measurement.

A :class:`ResilientFn` evaluates on int arrays.  Majority and the
tribes-of-majorities stand-in are read-once monotone formulas, which lets
their bias and influence be computed exactly by a small dynamic program in
addition to brute force.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .distlab import Distribution, certify_nobf, kwise_samples
from .errors import BudgetExceeded, DimensionError
from .gf2core import BitString

INFLUENCE_BUDGET_BITS = 20

# Largest |Pr[Maj(z1) xor Maj(z2) = 1] - 1/2| * sqrt(t) seen during calibration
# (see calibrate_xor_constant), rounded up; never edit without re-running it.
MAJ_XOR_CONSTANT = 0.65


# --- read-once structure ---------------------------------------------------

# A chunk is a list of tribes; a tribe is a list of block masks.  One output
# bit per chunk: OR over tribes of AND over blocks of Maj(block).
Chunk = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ResilientFn:
    n: int
    m: int
    family: str
    chunks: tuple[Chunk, ...] | None = None
    fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x)
        if self.fn is not None:
            return self.fn(x)
        xu = x.astype(np.uint64)
        out = np.zeros(x.shape, dtype=np.int64)
        for c, chunk in enumerate(self.chunks):
            bit = np.zeros(x.shape, dtype=bool)
            for tribe in chunk:
                tb = np.ones(x.shape, dtype=bool)
                for blk in tribe:
                    size = blk.bit_count()
                    tb &= np.bitwise_count(xu & np.uint64(blk)) >= (size + 1) // 2
                bit |= tb
            out |= bit.astype(np.int64) << c
        return out

    def eval(self, x: BitString) -> BitString:
        if x.length != self.n:
            raise DimensionError(f"{self.family} expects {self.n} bits, got {x.length}")
        return BitString(int(self(np.array([x.value]))[0]), self.m)


def majority(x: BitString) -> int:
    """1 iff at least half (rounded up) of the bits are set."""
    return int(x.weight >= (x.length + 1) // 2)


def majority_fn(n: int) -> ResilientFn:
    return ResilientFn(n, 1, "majority", ((((1 << n) - 1,),),))


def custom_fn(n: int, m: int, fn: Callable[[np.ndarray], np.ndarray], name: str = "custom") -> ResilientFn:
    return ResilientFn(n, m, name, None, fn)


def xor_outer(f: ResilientFn, z: BitString, z_tampered: BitString) -> BitString:
    if z.length != f.n or z_tampered.length != f.n:
        raise DimensionError(f"both halves must have {f.n} bits")
    return f.eval(z) ^ f.eval(z_tampered)


def maj_xor_maj_bias(samples: np.ndarray, n: int) -> Fraction:
    """``|Pr[Maj(low n bits) xor Maj(high n bits) = 1] - 1/2|`` over a uniform multiset."""
    s = np.asarray(samples).astype(np.uint64)
    thr = (n + 1) // 2
    lo = np.bitwise_count(s & np.uint64((1 << n) - 1)) >= thr
    hi = np.bitwise_count(s >> np.uint64(n)) >= thr
    ones = int((lo ^ hi).sum())
    return abs(Fraction(ones, len(s)) - Fraction(1, 2))


# --- influence -------------------------------------------------------------


def _spread(values: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    out = np.zeros_like(values)
    for j, p in enumerate(positions):
        out |= ((values >> j) & 1) << p
    return out


def _undetermined_mask(f: ResilientFn, Q: Sequence[int], rest_assign: np.ndarray) -> np.ndarray:
    Q = sorted(Q)
    rest = [i for i in range(f.n) if i not in set(Q)]
    base = _spread(rest_assign, rest)
    first = f(base | _spread(np.zeros(1, np.int64), Q))
    und = np.zeros(len(rest_assign), dtype=bool)
    for c in range(1, 1 << len(Q)):
        und |= f(base | _spread(np.array([c], np.int64), Q)[0]) != first
    return und


def influence(f: ResilientFn, Q: Iterable[int]) -> Fraction:
    """Fraction of assignments outside ``Q`` that leave ``f`` non-constant on the ``Q``-cube."""
    Q = sorted(set(Q))
    if any(not 0 <= i < f.n for i in Q):
        raise DimensionError("coordinate outside the input")
    if not Q:
        return Fraction(0)
    if f.chunks is not None:
        return readonce_influence(f, Q)
    free = f.n - len(Q)
    if free > INFLUENCE_BUDGET_BITS:
        raise BudgetExceeded(f"{free} coordinates outside Q")
    und = _undetermined_mask(f, Q, np.arange(1 << free, dtype=np.int64))
    return Fraction(int(und.sum()), 1 << free)


def brute_influence(f: ResilientFn, Q: Iterable[int]) -> Fraction:
    """Exhaustive influence ignoring any structure; reference for the fast paths."""
    Q = sorted(set(Q))
    free = f.n - len(Q)
    if free > INFLUENCE_BUDGET_BITS:
        raise BudgetExceeded(f"{free} coordinates outside Q")
    und = _undetermined_mask(f, Q, np.arange(1 << free, dtype=np.int64))
    return Fraction(int(und.sum()), 1 << free)


def influence_under(f: ResilientFn, Q: Iterable[int], d: Distribution) -> Fraction | float:
    """Mass of ``d`` (over the coordinates outside ``Q``, in index order) leaving ``f`` undetermined."""
    Q = sorted(set(Q))
    if d.n != f.n - len(Q):
        raise DimensionError(f"distribution on {d.n} bits for {f.n - len(Q)} free coordinates")
    pts = np.array(sorted(d.pmf), dtype=np.int64)
    und = _undetermined_mask(f, Q, pts)
    return sum((d.pmf[int(x)] for x, u in zip(pts, und) if u), Fraction(0) if d.exact else 0.0)


def max_influence(f: ResilientFn, q: int) -> tuple[Fraction, tuple[int, ...]]:
    """``I_q(f)``: the largest influence of any ``q`` coordinates, with a maximizing set."""
    best, arg = Fraction(-1), ()
    for Q in itertools.combinations(range(f.n), q):
        v = influence(f, Q)
        if v > best:
            best, arg = v, Q
    return best, arg


# exact DP over the read-once structure; states are Pr[0], Pr[1], Pr[undetermined]
_HALF = Fraction(1, 2)


def _block_probs(blk: int, Q: set[int]) -> tuple[Fraction, Fraction, Fraction]:
    bits = [i for i in range(blk.bit_length()) if (blk >> i) & 1]
    u = sum(1 for b in bits if b in Q)
    r = len(bits) - u
    thr = (len(bits) + 1) // 2
    p0 = p1 = Fraction(0)
    for ones in range(r + 1):
        w = Fraction(math.comb(r, ones), 1 << r)
        if ones >= thr:
            p1 += w
        elif ones + u < thr:
            p0 += w
    return p0, p1, 1 - p0 - p1


def _chunk_probs(chunk: Chunk, Q: set[int]) -> tuple[Fraction, Fraction, Fraction]:
    none_one = Fraction(1)  # Pr[no tribe is 1]
    all_zero = Fraction(1)  # Pr[every tribe is 0]
    for tribe in chunk:
        t_one = Fraction(1)  # Pr[every block is 1]
        t_no_zero = Fraction(1)  # Pr[no block is 0]
        for blk in tribe:
            p0, p1, _ = _block_probs(blk, Q)
            t_one *= p1
            t_no_zero *= 1 - p0
        t_zero = 1 - t_no_zero
        none_one *= 1 - t_one
        all_zero *= t_zero
    p1 = 1 - none_one
    p0 = all_zero
    return p0, p1, 1 - p0 - p1


def readonce_influence(f: ResilientFn, Q: Iterable[int]) -> Fraction:
    Qs = set(Q)
    const = Fraction(1)
    for chunk in f.chunks:
        p0, p1, _ = _chunk_probs(chunk, Qs)
        const *= p0 + p1
    return 1 - const


def readonce_output_probs(f: ResilientFn) -> list[Fraction]:
    """``Pr[bit c = 1]`` under uniform input for each output bit."""
    return [_chunk_probs(chunk, set())[1] for chunk in f.chunks]


def bias(f: ResilientFn) -> Fraction:
    """Distance of ``f(U_n)`` from ``U_m``, exact."""
    if f.chunks is None:
        if f.n > INFLUENCE_BUDGET_BITS + 4:
            raise BudgetExceeded(f"{f.n}-bit brute-force bias")
        vals = f(np.arange(1 << f.n, dtype=np.int64))
        c = np.bincount(vals, minlength=1 << f.m)
        return Fraction(int(np.abs(c * (1 << f.m) - (1 << f.n)).sum()), 2 << (f.n + f.m))
    probs = readonce_output_probs(f)
    total = Fraction(0)
    for z in range(1 << f.m):
        p = Fraction(1)
        for c, pc in enumerate(probs):
            p *= pc if (z >> c) & 1 else 1 - pc
        total += abs(p - Fraction(1, 1 << f.m))
    return total / 2


# --- tribes-of-majorities stand-in -----------------------------------------


def _layout(start: int, size: int, block: int, width: int) -> Chunk:
    blocks = []
    pos = start
    end = start + size
    while pos + block <= end:
        blocks.append(((1 << block) - 1) << pos)
        pos += block
    while pos < end:
        blocks.append(1 << pos)
        pos += 1
    return tuple(tuple(blocks[i:i + width]) for i in range(0, len(blocks), width))


def _chunk_max_influence(chunk: Chunk) -> Fraction:
    # coordinates in the same block are interchangeable, so one per block suffices
    best = Fraction(0)
    for tribe in chunk:
        for blk in tribe:
            low = (blk & -blk).bit_length() - 1
            p0, p1, _ = _chunk_probs(chunk, {low})
            best = max(best, 1 - p0 - p1)
    return best


def _best_chunk(start: int, size: int) -> Chunk:
    best, best_key = None, None
    for block in range(1, size + 1, 2):
        nblocks = size // block + size % block
        for width in range(1, nblocks + 1):
            chunk = _layout(start, size, block, width)
            p0, p1, _ = _chunk_probs(chunk, set())
            score = abs(p1 - _HALF) + _chunk_max_influence(chunk)
            key = (score, block, width)
            if best_key is None or key < best_key:
                best, best_key = chunk, key
    return best


@functools.lru_cache(maxsize=64)
def bfext_standin(n: int, m: int = 1) -> ResilientFn:
    """Monotone tribes-of-majorities function with its exact bias recorded.

    The input is split into ``m`` nearly equal chunks, one output bit each.
    Within a chunk the block size and tribe width minimize the exact bias
    plus the largest single-coordinate influence.
    """
    if not 0 < m <= n:
        raise DimensionError(f"need 0 < m <= n, got m={m}, n={n}")
    chunks = []
    start = 0
    for c in range(m):
        size = n // m + (c < n % m)
        chunks.append(_best_chunk(start, size))
        start += size
    f = ResilientFn(n, m, "bfext_standin", tuple(chunks))
    f.meta["bias"] = bias(f)
    return f


# --- Maj xor Maj constant ---------------------------------------------------


@dataclass(frozen=True)
class CalibrationPoint:
    n: int
    t: int
    seed: int
    q: int
    gamma: Fraction
    bias: Fraction
    ratio: float


def planted_samples(samples: np.ndarray, n2: int, target: int) -> np.ndarray:
    # overwrite one coordinate with the AND of its two neighbours
    a = (samples >> ((target + 1) % n2)) & 1
    b = (samples >> ((target + 2) % n2)) & 1
    return (samples & ~(1 << target)) | ((a & b) << target)


def xor_bound(C: float, n: int, t: int, q: int, gamma: float) -> float:
    return C * (1 / math.sqrt(t) + q / math.sqrt(n)) + (2 * n) ** t * float(gamma)


def calibrate_xor_constant(ns: Sequence[int] = (3, 5, 7, 9, 11), ts: Sequence[int] = (2, 3, 4),
                           seeds: Sequence[int] = (0, 1, 2, 3), planted: bool = True) -> list[CalibrationPoint]:
    """Exact biases under polynomial ``t``-wise independent inputs, with and without a planted bad bit.

    Each point's ``ratio`` is the smallest constant that makes the
    inequality hold there.
    """
    pts = []
    for n in ns:
        for t in ts:
            if t > 2 * n:
                continue
            for seed in seeds:
                s = kwise_samples(2 * n, t, seed)
                b = maj_xor_maj_bias(s, n)
                pts.append(CalibrationPoint(n, t, seed, 0, Fraction(0), b, float(b) * math.sqrt(t)))
                if planted:
                    sp = planted_samples(s, 2 * n, seed % (2 * n))
                    cert = certify_nobf(Distribution.from_samples(2 * n, sp), q=1, t=t, gamma=0.0)
                    bp = maj_xor_maj_bias(sp, n)
                    slack = float(bp) - (2 * n) ** t * float(cert.max_tuple_distance)
                    ratio = max(slack, 0.0) / (1 / math.sqrt(t) + cert.size / math.sqrt(n))
                    pts.append(CalibrationPoint(n, t, seed, cert.size, Fraction(cert.max_tuple_distance), bp, ratio))
    return pts
