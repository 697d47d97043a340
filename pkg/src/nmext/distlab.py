"""Exact finite distributions over bit strings and the measurements built on them.

Outcomes are ints in ``[0, 2^n)`` following the :mod:`nmext.gf2core` bit
convention.  Probabilities are :class:`fractions.Fraction` while the support
has at most ``2^16`` points and ``float`` above that; every dyadic probability
the package produces is exactly representable either way.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import BudgetExceeded, DimensionError, PreconditionError
from .gf2core import IRREDUCIBLE, AffineSubspace, BitString, mul_table

Prob = Union[Fraction, float]

EXACT_SUPPORT_LIMIT = 1 << 16
SUPPORT_BUDGET = 1 << 24
TWISE_MAX_BITS = 32


@dataclass(frozen=True)
class Distribution:
    n: int
    pmf: Mapping[int, Prob] = field(repr=False)

    def __post_init__(self) -> None:
        if not self.pmf:
            raise PreconditionError("empty distribution")
        if len(self.pmf) > SUPPORT_BUDGET:
            raise BudgetExceeded(f"support of {len(self.pmf)} points")
        lim = 1 << self.n
        total = 0
        for x, p in self.pmf.items():
            if not 0 <= x < lim:
                raise DimensionError(f"outcome {x} is not an {self.n}-bit string")
            if p < 0:
                raise ValueError(f"negative probability at {x}")
            total += p
        if abs(total - 1) > 1e-12:
            raise ValueError(f"probabilities sum to {float(total)}")

    @classmethod
    def from_weights(cls, n: int, weights: Mapping[int, int | float | Fraction]) -> Distribution:
        """Normalize nonnegative weights, dropping zeros."""
        items = {x: w for x, w in weights.items() if w}
        total = sum(items.values())
        exact = len(items) <= EXACT_SUPPORT_LIMIT and all(
            isinstance(w, (int, Fraction, np.integer)) for w in items.values()
        )
        if exact:
            return cls(n, {x: Fraction(int(w) if isinstance(w, np.integer) else w) / total for x, w in items.items()})
        return cls(n, {x: float(w) / float(total) for x, w in items.items()})

    @classmethod
    def from_samples(cls, n: int, outcomes: np.ndarray) -> Distribution:
        """Distribution of a uniformly chosen entry of ``outcomes`` (a multiset)."""
        vals, counts = np.unique(np.asarray(outcomes, dtype=np.int64), return_counts=True)
        return cls.from_weights(n, {int(v): int(c) for v, c in zip(vals, counts)})

    @classmethod
    def uniform(cls, n: int) -> Distribution:
        return cls.uniform_on(n, range(1 << n))

    @classmethod
    def uniform_on(cls, n: int, support: Iterable[int]) -> Distribution:
        pts = sorted(set(int(s) for s in support))
        if not pts:
            raise PreconditionError("empty support")
        if len(pts) <= EXACT_SUPPORT_LIMIT:
            p: Prob = Fraction(1, len(pts))
        else:
            p = 1.0 / len(pts)
        return cls(n, {x: p for x in pts})

    @classmethod
    def point(cls, n: int, x: int) -> Distribution:
        return cls(n, {x: Fraction(1)})

    @property
    def exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.pmf.values())

    @property
    def support(self) -> list[int]:
        return sorted(x for x, p in self.pmf.items() if p > 0)

    def prob(self, x: int) -> Prob:
        return self.pmf.get(x, Fraction(0) if self.exact else 0.0)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted outcomes and float probabilities as numpy arrays."""
        xs = np.array(sorted(self.pmf), dtype=np.int64)
        ps = np.array([float(self.pmf[int(x)]) for x in xs], dtype=np.float64)
        return xs, ps

    def integer_weights(self) -> tuple[np.ndarray, np.ndarray, int] | None:
        """Outcomes, integer weights and their common denominator, when exact and small."""
        if not self.exact:
            return None
        den = 1
        for p in self.pmf.values():
            den = den * p.denominator // math.gcd(den, p.denominator)
        if den >= 1 << 52:
            return None
        xs = np.array(sorted(self.pmf), dtype=np.int64)
        ws = np.array([int(self.pmf[int(x)] * den) for x in xs], dtype=np.int64)
        return xs, ws, den

    def to_text(self) -> str:
        lines = []
        for x in sorted(self.pmf):
            lines.append(f"{BitString(x, self.n)} {self.pmf[x]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Distribution:
        pmf: dict[int, Prob] = {}
        n = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                bits, prob = line.split()
                b = BitString.from_str(bits)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: cannot parse {raw!r}") from exc
            if n is None:
                n = b.length
            elif b.length != n:
                raise DimensionError(f"line {lineno}: expected {n} bits, got {b.length}")
            pmf[b.value] = Fraction(prob) if "." not in prob and "e" not in prob else float(prob)
        if n is None:
            raise PreconditionError("no outcomes in text")
        return cls(n, pmf)


@dataclass(frozen=True)
class Source:
    """A flat, affine or general source on ``n`` bits."""

    kind: str
    n: int
    payload: object

    def __post_init__(self) -> None:
        if self.kind not in ("flat", "affine", "general"):
            raise ValueError(f"unknown source kind {self.kind!r}")

    @classmethod
    def flat(cls, n: int, support: Iterable[int]) -> Source:
        pts = frozenset(int(s) for s in support)
        if not pts:
            raise PreconditionError("empty source")
        if any(not 0 <= s < (1 << n) for s in pts):
            raise DimensionError("support point outside {0,1}^n")
        return cls("flat", n, pts)

    @classmethod
    def affine(cls, s: AffineSubspace) -> Source:
        return cls("affine", s.ambient_len, s)

    @classmethod
    def general(cls, d: Distribution) -> Source:
        return cls("general", d.n, d)

    def support_array(self) -> np.ndarray:
        if self.kind == "flat":
            return np.array(sorted(self.payload), dtype=np.int64)
        if self.kind == "affine":
            return np.sort(self.payload.points())
        return np.array(self.payload.support, dtype=np.int64)

    def distribution(self) -> Distribution:
        if self.kind == "general":
            return self.payload
        return Distribution.uniform_on(self.n, self.support_array().tolist())

    @property
    def min_entropy(self) -> float:
        if self.kind == "flat":
            return math.log2(len(self.payload))
        if self.kind == "affine":
            return float(self.payload.dim)
        return min_entropy(self.payload)


def _check_same_n(p: Distribution, q: Distribution) -> None:
    if p.n != q.n:
        raise DimensionError(f"distributions over {p.n} and {q.n} bits")


def stat_distance(p: Distribution, q: Distribution) -> Prob:
    """Half the L1 distance between two pmfs."""
    _check_same_n(p, q)
    keys = set(p.pmf) | set(q.pmf)
    if p.exact and q.exact:
        return sum((abs(p.prob(x) - q.prob(x)) for x in keys), Fraction(0)) / 2
    return 0.5 * math.fsum(abs(float(p.prob(x)) - float(q.prob(x))) for x in keys)


def min_entropy(s: Source | Distribution) -> float:
    if isinstance(s, Source):
        return s.min_entropy
    top = max(s.pmf.values())
    if top <= 0:
        raise PreconditionError("empty source")
    return -math.log2(top)


def _split(joint: Distribution, x_len: int) -> dict[int, dict[int, Prob]]:
    if not 0 <= x_len <= joint.n:
        raise DimensionError(f"x_len {x_len} outside [0, {joint.n}]")
    by_w: dict[int, dict[int, Prob]] = {}
    xm = (1 << x_len) - 1
    for z, p in joint.pmf.items():
        by_w.setdefault(z >> x_len, {})[z & xm] = p
    return by_w


def avg_cond_min_entropy(joint: Distribution, x_len: int) -> float:
    """Average conditional min-entropy of X given W for a joint on ``x∘w``.

    ``X`` occupies the low ``x_len`` bits of each outcome and ``W`` the rest.
    """
    guess = sum(max(col.values()) for col in _split(joint, x_len).values())
    return -math.log2(guess)


def conditional_min_entropies(joint: Distribution, x_len: int) -> dict[int, tuple[Prob, float]]:
    """Map each ``w`` to ``(Pr[W=w], H_inf(X | W=w))``."""
    out = {}
    for w, col in _split(joint, x_len).items():
        pw = sum(col.values())
        out[w] = (pw, -math.log2(max(col.values()) / pw))
    return out


def marginal(joint: Distribution, start: int, stop: int) -> Distribution:
    """Marginal on bit positions ``[start, stop)``."""
    width = stop - start
    return pushforward(joint, lambda z: (z >> start) & ((1 << width) - 1), width)


MapLike = Union[Callable[[int], int], np.ndarray, Sequence[int]]


def pushforward(d: Distribution, f: MapLike, m: int) -> Distribution:
    """Image of ``d`` under ``f`` as an ``m``-bit distribution.

    ``f`` is a callable on ints or a lookup table indexed by outcome.
    """
    img: dict[int, Prob] = {}
    call = f if callable(f) else (lambda x, t=f: int(t[x]))
    lim = 1 << m
    for x, p in d.pmf.items():
        y = int(call(x))
        if not 0 <= y < lim:
            raise DimensionError(f"image {y} is not an {m}-bit string")
        img[y] = img.get(y, 0) + p
    return Distribution(m, img)


def condition(d: Distribution, event: Callable[[int], bool]) -> Distribution:
    kept = {x: p for x, p in d.pmf.items() if event(x)}
    mass = sum(kept.values())
    if not kept or mass <= 0:
        raise PreconditionError("conditioning on a zero-probability event")
    return Distribution(d.n, {x: p / mass for x, p in kept.items()})


# --- bounded independence --------------------------------------------------


def _tuple_distances(d: Distribution, t: int) -> tuple[list[tuple[int, ...]], list[Prob]]:
    if not 0 < t <= d.n:
        raise DimensionError(f"tuple size {t} outside [1, {d.n}]")
    if d.n > TWISE_MAX_BITS:
        raise BudgetExceeded(f"{d.n}-bit distribution")
    iw = d.integer_weights()
    if iw is not None:
        xs, ws, den = iw
        weights = ws.astype(np.float64)  # exact: every partial sum < 2^52
    else:
        xs, weights = d.arrays()
        den = None
    bits = [((xs >> i) & 1) for i in range(d.n)]
    shifted = [[b << j for b in bits] for j in range(t)]
    cells = 1 << t
    tuples = list(itertools.combinations(range(d.n), t))
    dists: list[Prob] = []
    for tup in tuples:
        code = shifted[0][tup[0]].copy()
        for j in range(1, t):
            code |= shifted[j][tup[j]]
        c = np.bincount(code, weights=weights, minlength=cells)
        if den is not None:
            dev = int(np.abs(c.astype(np.int64) * cells - den).sum())
            dists.append(Fraction(dev, 2 * den * cells))
        else:
            dists.append(0.5 * float(np.abs(c - 1.0 / cells).sum()))
    return tuples, dists


def twise_distance(d: Distribution, t: int) -> Prob:
    """Worst distance from uniform over all size-``t`` coordinate sets."""
    _, dists = _tuple_distances(d, t)
    return max(dists)


@dataclass(frozen=True)
class NobfCertificate:
    bad_set: tuple[int, ...]
    t: int
    gamma: float
    q: int
    max_tuple_distance: Prob
    valid: bool
    method: str = "greedy"

    @property
    def size(self) -> int:
        return len(self.bad_set)


def certify_nobf(d: Distribution, q: int, t: int, gamma: float) -> NobfCertificate:
    """Grow a bad set greedily until every ``t``-tuple avoiding it is ``gamma``-close.

    Each round removes the coordinate that appears in the most failing
    tuples, breaking ties by the larger summed excess and then the smaller
    index.  The certificate is valid iff the final set has at most ``q``
    coordinates.
    """
    tuples, dists = _tuple_distances(d, t)
    bad: list[int] = []
    alive = [i for i, dist in enumerate(dists) if dist > gamma]
    while alive:
        count: dict[int, int] = {}
        excess: dict[int, float] = {}
        for i in alive:
            for c in tuples[i]:
                count[c] = count.get(c, 0) + 1
                excess[c] = excess.get(c, 0.0) + float(dists[i]) - gamma
        pick = min(count, key=lambda c: (-count[c], -excess[c], c))
        bad.append(pick)
        alive = [i for i in alive if pick not in tuples[i]]
    bad_set = set(bad)
    remaining = [dist for tup, dist in zip(tuples, dists) if not bad_set.intersection(tup)]
    worst = max(remaining) if remaining else Fraction(0)
    return NobfCertificate(tuple(sorted(bad)), t, gamma, q, worst, len(bad) <= q)


def kwise_field_degree(n: int, degree: int | None = None) -> int:
    """Smallest supported ``m`` with ``2^m - 1 >= n``, or check a requested one."""
    m = 1
    while (1 << m) - 1 < n:
        m += 1
    if degree is not None:
        if degree < m:
            raise DimensionError(f"GF(2^{degree}) has fewer than {n} nonzero points")
        m = degree
    if m not in IRREDUCIBLE or m > 10:
        raise DimensionError(f"no supported field with {n} distinct nonzero points")
    return m


def kwise_samples(n: int, t: int, seed: int, degree: int | None = None) -> np.ndarray:
    """All ``q^t`` outcomes of the polynomial-evaluation generator, one per polynomial.

    A uniformly random entry is exactly ``t``-wise independent.
    """
    if not 0 < t <= n:
        raise DimensionError(f"need 0 < t <= n, got t={t}, n={n}")
    m = kwise_field_degree(n, degree)
    q = 1 << m
    if q**t > SUPPORT_BUDGET:
        raise BudgetExceeded(f"{q}^{t} polynomials")
    points = random.Random(seed).sample(range(1, q), n)
    mul = mul_table(m)
    grids = np.indices((q,) * t).reshape(t, -1)
    out = np.zeros(grids.shape[1], dtype=np.int64)
    for i, a in enumerate(points):
        val = np.zeros(grids.shape[1], dtype=np.int64)
        power = 1
        for j in range(t):
            val ^= mul[grids[j], power]
            power = int(mul[power, a])
        out |= (val & 1) << i
    return out


def kwise_generator(n: int, t: int, seed: int, degree: int | None = None) -> Distribution:
    """Exactly ``t``-wise independent distribution on ``n`` bits."""
    return Distribution.from_samples(n, kwise_samples(n, t, seed, degree))
