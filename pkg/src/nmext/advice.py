"""Advice generators for the two-source and affine settings, with exact distinctness measurement.

Two-source advice on ``(x, y, y1)``::

    x1 = Ext(x, y1)
    w1 = Enc(y) restricted to Samp(x1)
    w2 = Enc(x) restricted to Samp(prefix(y1, m1))
    z  = x1 + y1 + w1 + w2

Affine advice on ``(x, y)`` with ``y = y1 + y2 + rest``::

    s1, s2 = AExt1(y1), AExt2(y2)
    w1 = Enc(x) restricted to Samp(s1)
    w2 = LExt(x, s2)
    z  = y1 + y2 + w1 + w2

Everything evaluates on int arrays.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DimensionError, InfeasiblePlan
from .gf2core import BitString, coset_offsets, gaussian_binomial, mask, rref_subspaces
from .measure import parity
from .primitives import (
    AveragingSampler,
    ExtractorSpec,
    LinearCodeSpec,
    averaging_sampler,
    random_linear_extractor,
    random_table_extractor,
    repetition_parity_code,
)

AEXT_MAX_BITS = 12


def restrict(codewords: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Pack ``codeword[positions[j]]`` into bit ``j`` for each row."""
    codewords = np.asarray(codewords, dtype=np.int64)
    positions = np.asarray(positions, dtype=np.int64)
    out = np.zeros(np.broadcast_shapes(codewords.shape, positions.shape[:-1]), dtype=np.int64)
    for j in range(positions.shape[-1]):
        out |= ((codewords >> positions[..., j]) & 1) << j
    return out


# --- two-source advice -----------------------------------------------------


@dataclass(frozen=True)
class AdvGenParams:
    n: int
    m1: int
    d: int
    D_prime: int
    code: LinearCodeSpec = field(repr=False)
    ext: ExtractorSpec = field(repr=False)
    samp: AveragingSampler = field(repr=False)
    eps1: float = 0.0
    eps2: float = 0.0
    samp_table: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if (self.ext.n, self.ext.d, self.ext.m) != (self.n, self.d, self.m1):
            raise DimensionError("extractor does not match (n, d, m1)")
        if self.code.n != self.n:
            raise DimensionError("code message length differs from n")
        if (self.samp.r_bits, self.samp.n_items, self.samp.t_samples) != (self.m1, self.code.n1, self.D_prime):
            raise DimensionError("sampler does not match (m1, n1, D')")
        if self.d < self.m1:
            raise InfeasiblePlan("d >= m1", f"prefix of {self.m1} bits from a {self.d}-bit seed")
        if self.samp_table is None:
            object.__setattr__(self, "samp_table", self.samp.all_samples())

    @property
    def out_len(self) -> int:
        return self.m1 + self.d + 2 * self.D_prime


def build_adv_gen(n: int, m1: int, d: int, D_prime: int, seed: int = 0,
                  code: LinearCodeSpec | None = None, ext: ExtractorSpec | None = None) -> AdvGenParams:
    code = code or repetition_parity_code(n)
    ext = ext or random_table_extractor(n, d, m1, seed)
    return AdvGenParams(n, m1, d, D_prime, code, ext, averaging_sampler(m1, code.n1, D_prime))


def adv_gen_array(p: AdvGenParams, x, y, y1) -> np.ndarray:
    x, y, y1 = (np.asarray(v, dtype=np.int64) for v in (x, y, y1))
    x1 = p.ext.table[y1, x]
    w1 = restrict(p.code.encode_array(y), p.samp_table[x1])
    w2 = restrict(p.code.encode_array(x), p.samp_table[y1 & mask(p.m1)])
    return x1 | (y1 << p.m1) | (w1 << (p.m1 + p.d)) | (w2 << (p.m1 + p.d + p.D_prime))


def adv_gen(p: AdvGenParams, x: BitString, y: BitString, y1: BitString) -> BitString:
    if x.length != p.n or y.length != p.n or y1.length != p.d:
        raise DimensionError(f"advice expects ({p.n}, {p.n}, {p.d}) bits, got ({x.length}, {y.length}, {y1.length})")
    return BitString(int(adv_gen_array(p, x.value, y.value, y1.value)), p.out_len)


# --- affine extractors on short inputs -------------------------------------


@dataclass(frozen=True)
class AffineExtractor:
    ell: int
    m: int
    k: int
    eps: Fraction
    table: np.ndarray = field(repr=False, compare=False)
    sources_checked: int = 0

    def __call__(self, v):
        return self.table[v]


def affine_source_points(ell: int, k: int) -> np.ndarray:
    """Point sets of every ``k``-dimensional affine subspace of GF(2)^ell, one row each."""
    rows = []
    for basis in rref_subspaces(ell, k):
        pts = np.zeros(1, dtype=np.int64)
        for b in basis:
            pts = np.concatenate([pts, pts ^ b])
        offs = np.array(coset_offsets(ell, basis), dtype=np.int64)
        rows.append(offs[:, None] ^ pts[None, :])
    return np.concatenate(rows)


def affine_error(table: np.ndarray, m: int, points: np.ndarray) -> Fraction:
    """Worst distance from ``U_m`` of ``table`` over the given affine sources."""
    S, K = points.shape
    M = 1 << m
    out = table[points]
    c = np.bincount((np.arange(S)[:, None] * M + out).ravel(), minlength=S * M).reshape(S, M)
    return Fraction(int(np.abs(c * M - K).sum(axis=1).max()), 2 * K * M)


def search_affine_extractor(ell: int, m: int, k: int, seed: int = 0, tries: int = 200) -> AffineExtractor:
    """Best of ``tries`` random tables, certified over every ``k``-dimensional affine source."""
    if ell > AEXT_MAX_BITS:
        raise InfeasiblePlan(f"affine extractor input <= {AEXT_MAX_BITS} bits", f"ell={ell}")
    if m > k:
        raise InfeasiblePlan("output bits <= source dimension", f"m={m}, k={k}")
    pts = affine_source_points(ell, k)
    rng = np.random.default_rng(seed)
    best, best_err = None, None
    if k == ell:
        # full space: any balanced table is perfect
        best = np.arange(1 << ell, dtype=np.int64) & mask(m)
        best_err = affine_error(best, m, pts)
    for _ in range(tries):
        if best_err == 0:
            break
        cand = rng.integers(0, 1 << m, size=1 << ell, dtype=np.int64)
        err = affine_error(cand, m, pts)
        if best_err is None or err < best_err:
            best, best_err = cand, err
    return AffineExtractor(ell, m, k, best_err, best, len(pts))


# --- affine advice ---------------------------------------------------------


@dataclass(frozen=True)
class AffineAdvGenParams:
    n: int
    l1: int
    l2: int
    D: int
    n3: int
    code: LinearCodeSpec = field(repr=False)
    aext1: AffineExtractor = field(repr=False)
    aext2: AffineExtractor = field(repr=False)
    lext: ExtractorSpec = field(repr=False)
    samp: AveragingSampler = field(repr=False)
    samp_table: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if (self.aext1.ell, self.aext2.ell) != (self.l1, self.l2):
            raise DimensionError("affine extractor inputs do not match (l1, l2)")
        if (self.lext.n, self.lext.d, self.lext.m) != (self.n, self.aext2.m, self.n3):
            raise DimensionError("linear extractor does not match (n, m2, n3)")
        if not self.lext.linear:
            raise DimensionError("the second advice half needs a linear extractor")
        if (self.samp.r_bits, self.samp.n_items, self.samp.t_samples) != (self.aext1.m, self.code.n1, self.D):
            raise DimensionError("sampler does not match (m1, n1, D)")
        if self.samp_table is None:
            object.__setattr__(self, "samp_table", self.samp.all_samples())

    @property
    def out_len(self) -> int:
        return self.l1 + self.l2 + self.D + self.n3

    @property
    def y_len(self) -> int:
        return self.l1 + self.l2


def build_affine_adv_gen(n: int, l1: int, l2: int, D: int, n3: int, m1: int, m2: int, k1: int, k2: int,
                         seed: int = 0, code: LinearCodeSpec | None = None) -> AffineAdvGenParams:
    rng = random.Random(seed)
    code = code or repetition_parity_code(n)
    a1 = search_affine_extractor(l1, m1, k1, seed=rng.getrandbits(32))
    a2 = search_affine_extractor(l2, m2, k2, seed=rng.getrandbits(32))
    lext = random_linear_extractor(n, m2, n3, seed=rng.getrandbits(32))
    return AffineAdvGenParams(n, l1, l2, D, n3, code, a1, a2, lext, averaging_sampler(m1, code.n1, D))


def affine_adv_gen_array(p: AffineAdvGenParams, x, y) -> np.ndarray:
    x, y = np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64)
    y1 = y & mask(p.l1)
    y2 = (y >> p.l1) & mask(p.l2)
    s1 = p.aext1.table[y1]
    s2 = p.aext2.table[y2]
    w1 = restrict(p.code.encode_array(x), p.samp_table[s1])
    w2 = p.lext.table[s2, x]
    return y1 | (y2 << p.l1) | (w1 << p.y_len) | (w2 << (p.y_len + p.D))


def affine_adv_gen(p: AffineAdvGenParams, x: BitString, y: BitString) -> BitString:
    """Affine advice; bits of ``y`` past ``l1 + l2`` are accepted and ignored."""
    if x.length != p.n or y.length < p.y_len:
        raise DimensionError(f"affine advice expects {p.n} and >= {p.y_len} bits, got {x.length} and {y.length}")
    return BitString(int(affine_adv_gen_array(p, x.value, y.value)), p.out_len)


# --- distinctness ----------------------------------------------------------


def distinctness_two_source(p: AdvGenParams, xs: np.ndarray, ys: np.ndarray, f: np.ndarray, g: np.ndarray) -> Fraction:
    """Exact ``Pr[advice(X, Y, Y1) != advice(f(X), g(Y), Y1')]`` over flat ``X`` and ``Y``.

    ``Y1`` is the ``d``-bit prefix of ``Y`` and ``Y1'`` that of ``g(Y)``;
    ``f`` and ``g`` are lookup tables.
    """
    X = np.repeat(np.asarray(xs, np.int64), len(ys))
    Y = np.tile(np.asarray(ys, np.int64), len(xs))
    Xt, Yt = f[X], g[Y]
    z = adv_gen_array(p, X, Y, Y & mask(p.d))
    zt = adv_gen_array(p, Xt, Yt, Yt & mask(p.d))
    return Fraction(int((z != zt).sum()), len(X))


def linear_map_apply(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(np.asarray(x, dtype=np.int64))
    for i, r in enumerate(rows):
        out |= parity(x & int(r)) << i
    return out


def distinctness_affine(p: AffineAdvGenParams, xs: np.ndarray, L_rows: np.ndarray, M_rows: np.ndarray, c: int) -> Fraction:
    """Exact ``Pr[advice(X, L X) != advice(X', L X')]`` with ``X' = M X + c`` over the points ``xs``."""
    xs = np.asarray(xs, dtype=np.int64)
    xt = linear_map_apply(M_rows, xs) ^ c
    z = affine_adv_gen_array(p, xs, linear_map_apply(L_rows, xs))
    zt = affine_adv_gen_array(p, xt, linear_map_apply(L_rows, xt))
    return Fraction(int((z != zt).sum()), len(xs))


def affine_source_count(ell: int, k: int) -> int:
    return gaussian_binomial(ell, k) << (ell - k)
