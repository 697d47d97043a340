"""Alternating-extraction correlation breaker with advice, plus exact certification.

State is a pair ``(p, q)`` of ``w``-bit strings.  ``q`` starts as the
``w``-bit prefix of the seed ``y`` and ``p`` as ``init(x, q)``.  Advice bit
``j`` picks the order of round ``j``:

* bit 0: ``p = Ex_j(x, q)`` then ``q = Ey_j(y, p)``
* bit 1: ``q = Ey_j(y, p)`` then ``p = Ex_j(x, q)``

The output is the low ``m`` bits of the final ``q``.
"""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InfeasiblePlan, PreconditionError
from .gf2core import BitString, in_span
from .measure import conditional_distance, distance_from_uniform
from .primitives import ExtractorSpec, _pack, _unpack, random_table_extractor


@dataclass(frozen=True)
class BreakerSpec:
    n: int
    d: int
    a: int
    m: int
    t: int
    w: int
    declared_eps: float | None
    init: ExtractorSpec = field(repr=False, compare=False)
    rounds: tuple[tuple[ExtractorSpec, ExtractorSpec], ...] = field(repr=False, compare=False)
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.rounds) != self.a:
            raise DimensionError(f"{len(self.rounds)} rounds for {self.a} advice bits")
        if self.init.n != self.n or self.init.d != self.w or self.init.m != self.w:
            raise DimensionError("initial extractor does not chain")
        for j, (ex, ey) in enumerate(self.rounds):
            if (ex.n, ex.d, ex.m) != (self.n, self.w, self.w):
                raise DimensionError(f"round {j} x-side extractor does not chain")
            if (ey.n, ey.d, ey.m) != (self.d, self.w, self.w):
                raise DimensionError(f"round {j} y-side extractor does not chain")

    def __call__(self, x, y, alpha):
        """Vectorized evaluation; ``x``, ``y`` and ``alpha`` broadcast as int arrays."""
        p, q = self.run(x, y, alpha)[-1]
        return q & ((1 << self.m) - 1)

    def run(self, x, y, alpha, rounds: int | None = None) -> list[tuple[np.ndarray, np.ndarray]]:
        """States after initialization and after each of the first ``rounds`` rounds."""
        x, y, alpha = np.broadcast_arrays(*(np.asarray(v, dtype=np.int64) for v in (x, y, alpha)))
        q = y & ((1 << self.w) - 1)
        p = self.init.table[q, x]
        states = [(p, q)]
        for j, (ex, ey) in enumerate(self.rounds[: self.a if rounds is None else rounds]):
            bit = (alpha >> j) & 1
            p0 = ex.table[q, x]
            q0 = ey.table[p0, y]
            q1 = ey.table[p, y]
            p1 = ex.table[q1, x]
            p = np.where(bit == 1, p1, p0)
            q = np.where(bit == 1, q1, q0)
            states.append((p, q))
        return states


def build_breaker(n: int, d: int, a: int, m: int, t: int = 1, w: int | None = None, seed: int = 0) -> BreakerSpec:
    """Breaker with seeded random-table round extractors."""
    if w is None:
        w = min(d, m + 2)
    if w < m + 2:
        raise InfeasiblePlan("state width w >= m + 2", f"w={w}, m={m}")
    if w > d:
        raise InfeasiblePlan("state width w <= seed length d", f"w={w}, d={d}")
    rng = random.Random(seed)
    init = random_table_extractor(n, w, w, rng.getrandbits(32))
    rounds = tuple(
        (random_table_extractor(n, w, w, rng.getrandbits(32)), random_table_extractor(d, w, w, rng.getrandbits(32)))
        for _ in range(a)
    )
    return BreakerSpec(n, d, a, m, t, w, None, init, rounds, seed)


def affine_adv_cb(b: BreakerSpec, x: BitString, y: BitString, alpha: BitString) -> BitString:
    if (x.length, y.length, alpha.length) != (b.n, b.d, b.a):
        raise DimensionError(
            f"breaker expects ({b.n}, {b.d}, {b.a}) bits, got ({x.length}, {y.length}, {alpha.length})"
        )
    return BitString(int(b(x.value, y.value, alpha.value)), b.m)


def advice_trace(b: BreakerSpec, x: int, y: int, alpha: int) -> list[tuple[int, int]]:
    return [(int(p), int(q)) for p, q in b.run(x, y, alpha)]


# --- certification ---------------------------------------------------------


@dataclass(frozen=True)
class BreakerFixture:
    """Joint law of ``(A, A^[t])`` times an independent law of ``(B, B^[t], Y, Y^[t])``.

    ``a`` has shape ``(P,)``, ``at`` shape ``(P, t)`` with integer weights
    ``wa``; ``b``, ``bt``, ``y``, ``yt`` and ``wb`` describe the other factor.
    """

    kind: str
    a: np.ndarray
    at: np.ndarray
    wa: np.ndarray
    b: np.ndarray
    bt: np.ndarray
    y: np.ndarray
    yt: np.ndarray
    wb: np.ndarray
    alpha: int
    alphas: tuple[int, ...]

    @property
    def t(self) -> int:
        return len(self.alphas)

    def a_min_entropy(self) -> float:
        vals, inv = np.unique(self.a, return_inverse=True)
        mass = np.bincount(inv, weights=self.wa.astype(np.float64))
        return -math.log2(mass.max() / self.wa.sum())

    def validate(self, d: int, k: float = 0.0) -> None:
        if any(self.alpha == ai for ai in self.alphas):
            raise PreconditionError("tampered advice equals the original advice")
        if self.at.shape[1:] != (self.t,) or self.bt.shape[1:] != (self.t,) or self.yt.shape[1:] != (self.t,):
            raise DimensionError("tampered components do not match the advice count")
        ymass = np.bincount(self.y, weights=self.wb.astype(np.float64), minlength=1 << d)
        if len(ymass) != 1 << d or np.any(ymass * (1 << d) != self.wb.sum()):
            raise PreconditionError("seed is not uniform")
        if self.a_min_entropy() < k - 1e-9:
            raise PreconditionError(f"A has min-entropy {self.a_min_entropy():.3f} < {k}")


@dataclass(frozen=True)
class BreakerCertificate:
    measured_eps: Fraction
    per_kind: dict
    fixtures: int
    tuple_check: bool
    worst_tuple_ratio: float


def _expand(fx: BreakerFixture):
    P, L = len(fx.a), len(fx.b)
    ia = np.repeat(np.arange(P), L)
    ib = np.tile(np.arange(L), P)
    x = fx.a[ia] ^ fx.b[ib]
    xt = fx.at[ia] ^ fx.bt[ib]
    w = fx.wa[ia] * fx.wb[ib]
    return x, xt, fx.y[ib], fx.yt[ib], w


def fixture_outputs(b: BreakerSpec, fx: BreakerFixture):
    x, xt, y, yt, w = _expand(fx)
    z = b(x, y, fx.alpha)
    zt = np.stack([b(xt[:, i], yt[:, i], fx.alphas[i]) for i in range(fx.t)], axis=1) if fx.t else np.zeros((len(x), 0), np.int64)
    return z, zt, y, yt, w


def fixture_distance(b: BreakerSpec, fx: BreakerFixture) -> Fraction:
    """Distance of ``CB(X, Y, alpha)`` from uniform given ``Y`` and every ``(CB(X^i, Y^i, alpha^i), Y^i)``."""
    z, zt, y, yt, w = fixture_outputs(b, fx)
    label = y.copy()
    for i in range(fx.t):
        label = (label << b.m | zt[:, i]) << b.d | yt[:, i]
    return conditional_distance(z, b.m, label, w)


def tuple_check(b: BreakerSpec, fx: BreakerFixture) -> tuple[Fraction, Fraction]:
    """Per-coordinate premise error and joint distance for the output tuple ``(Z, Z^1..Z^t)``.

    Only meaningful for 1-bit outputs; the joint distance must not exceed
    ``(t + 1)`` times the premise error.
    """
    z, zt, _, _, w = fixture_outputs(b, fx)
    cols = [z] + [zt[:, i] for i in range(fx.t)]
    r = len(cols)
    premise = Fraction(0)
    for lead in range(r):
        rest = [cols[j] for j in range(r) if j != lead]
        for size in range(r):
            for mask_bits in range(1 << len(rest)):
                if bin(mask_bits).count("1") != size:
                    continue
                label = np.zeros_like(z)
                for j, col in enumerate(rest):
                    if (mask_bits >> j) & 1:
                        label = label << 1 | col
                premise = max(premise, conditional_distance(cols[lead], 1, label, w))
    joint = np.zeros_like(z)
    for col in cols:
        joint = joint << 1 | col
    return premise, distance_from_uniform(joint, r, w)


def certify_breaker(b: BreakerSpec, fixtures: Iterable[BreakerFixture], k: float = 0.0) -> tuple[BreakerSpec, BreakerCertificate]:
    """Exact worst-case distance over a fixture family; returns the spec with that error declared."""
    per_kind: dict[str, Fraction] = {}
    worst = Fraction(0)
    ratio = 0.0
    ok = True
    count = 0
    for fx in fixtures:
        fx.validate(b.d, k)
        if fx.t != b.t and fx.t != 0:
            raise DimensionError(f"fixture has {fx.t} tamperings, breaker expects {b.t}")
        dist = fixture_distance(b, fx)
        per_kind[fx.kind] = max(per_kind.get(fx.kind, Fraction(0)), dist)
        worst = max(worst, dist)
        if b.m == 1:
            premise, joint = tuple_check(b, fx)
            bound = (fx.t + 1) * premise
            ok &= joint <= bound
            if bound:
                ratio = max(ratio, float(joint / bound))
        count += 1
    cert = BreakerCertificate(worst, per_kind, count, ok, ratio)
    return replace(b, declared_eps=float(worst)), cert


def _random_subspace_points(rng: random.Random, n: int, k: int) -> np.ndarray:
    basis: list[int] = []
    while len(basis) < k:
        v = rng.getrandbits(n)
        if v and not in_span(v, basis):
            basis.append(v)
    pts = np.zeros(1, dtype=np.int64)
    for v in basis:
        pts = np.concatenate([pts, pts ^ v])
    return pts


def _distinct_advice(rng: random.Random, a: int, alpha: int, t: int, style: str) -> tuple[int, ...]:
    out = []
    for i in range(t):
        if style == "last-bit" and i == 0:
            out.append(alpha ^ (1 << (a - 1)))
            continue
        while True:
            v = rng.getrandbits(a)
            if v != alpha:
                out.append(v)
                break
    return tuple(out)


def breaker_fixture_family(b: BreakerSpec, k: int, count: int, seed: int, t: int | None = None,
                           b_size: int = 4) -> list[BreakerFixture]:
    """Seeded fixtures in two styles, alternating.

    ``affine``: ``A`` uniform on a random ``k``-dimensional subspace with
    ``A^i`` a random linear image of ``A`` (or ``A`` itself), ``B`` on a few
    random points with arbitrary tampered copies.  ``two-source``: ``B = 0``,
    ``A`` flat on ``2^k`` random strings and ``A^i`` an arbitrary function of
    ``A``.  In both, ``Y`` is uniform and ``Y^i`` an arbitrary function of
    ``Y`` (sometimes ``Y`` itself).
    """
    t = b.t if t is None else t
    rng = random.Random(seed)
    D = 1 << b.d
    out = []
    for idx in range(count):
        kind = "affine" if idx % 2 == 0 else "two-source"
        if kind == "affine":
            a = _random_subspace_points(rng, b.n, k)
            cols = []
            for _ in range(t):
                if rng.random() < 0.3:
                    cols.append(a.copy())
                else:
                    rows = [rng.getrandbits(b.n) for _ in range(b.n)]
                    img = np.zeros_like(a)
                    for r_i, row in enumerate(rows):
                        img |= (np.bitwise_count((a & row).astype(np.uint64)).astype(np.int64) & 1) << r_i
                    cols.append(img)
            bvals = np.array([rng.getrandbits(b.n) for _ in range(b_size)], dtype=np.int64)
        else:
            a = np.array(sorted(rng.sample(range(1 << b.n), 1 << k)), dtype=np.int64)
            cols = [np.array([rng.getrandbits(b.n) for _ in a], dtype=np.int64) for _ in range(t)]
            bvals = np.zeros(1, dtype=np.int64)
        at = np.stack(cols, axis=1) if t else np.zeros((len(a), 0), np.int64)
        ys = np.arange(D, dtype=np.int64)
        L = len(bvals) * D
        bb = np.repeat(bvals, D)
        yy = np.tile(ys, len(bvals))
        bt_cols, yt_cols = [], []
        for _ in range(t):
            btab = {int(v): rng.getrandbits(b.n) if kind == "affine" else 0 for v in bvals}
            bt_cols.append(np.array([btab[int(v)] for v in bb], dtype=np.int64))
            if rng.random() < 0.3:
                yt_cols.append(yy.copy())
            else:
                gtab = np.array([rng.getrandbits(b.d) for _ in range(D)], dtype=np.int64)
                yt_cols.append(gtab[yy])
        bt = np.stack(bt_cols, axis=1) if t else np.zeros((L, 0), np.int64)
        yt = np.stack(yt_cols, axis=1) if t else np.zeros((L, 0), np.int64)
        alpha = rng.getrandbits(b.a)
        alphas = _distinct_advice(rng, b.a, alpha, t, "last-bit" if idx % 4 < 2 else "random")
        out.append(BreakerFixture(kind, a, at, np.ones(len(a), np.int64), bb, bt, yy, yt,
                                  np.ones(L, np.int64), alpha, alphas))
    return out


# --- serialization ---------------------------------------------------------


def breaker_to_bytes(b: BreakerSpec) -> bytes:
    body = struct.pack("<dQ", float("nan") if b.declared_eps is None else b.declared_eps, b.seed)
    tables = [b.init.table] + [t for pair in b.rounds for t in (pair[0].table, pair[1].table)]
    for tab in tables:
        body += tab.astype("<u2").tobytes()
    return _pack(b"NMCB", [b.n, b.d, b.a, b.m, b.t | (b.w << 8)], body)


def breaker_from_bytes(blob: bytes) -> BreakerSpec:
    (n, d, a, m, tw), body = _unpack(blob, b"NMCB")
    t, w = tw & 0xFF, tw >> 8
    eps, seed = struct.unpack_from("<dQ", body)
    off = 16

    def take(src_bits: int, name: str) -> ExtractorSpec:
        nonlocal off
        size = (1 << w) * (1 << src_bits)
        tab = np.frombuffer(body[off:off + 2 * size], dtype="<u2").astype(np.int64).reshape(1 << w, 1 << src_bits)
        off += 2 * size
        return ExtractorSpec(name, src_bits, w, w, None, None, True, False, tab)

    init = take(n, "init")
    rounds = tuple((take(n, f"ex{j}"), take(d, f"ey{j}")) for j in range(a))
    return BreakerSpec(n, d, a, m, t, w, None if math.isnan(eps) else eps, init, rounds, seed)


def same_tables(b1: BreakerSpec, b2: BreakerSpec) -> bool:
    pairs: Sequence = [(b1.init, b2.init)] + [(u, v) for p1, p2 in zip(b1.rounds, b2.rounds) for u, v in zip(p1, p2)]
    return len(b1.rounds) == len(b2.rounds) and all(np.array_equal(u.table, v.table) for u, v in pairs)
