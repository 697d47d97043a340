"""Exact distance kernels shared by the primitives and the oracle.

Every kernel works on integer weights with a common denominator so the
result is an exact :class:`~fractions.Fraction`.  Counts are accumulated with
``np.bincount`` in float64, which is exact while totals stay below ``2^53``.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

EXACT_LIMIT = float(1 << 53)


def _weights(k: int, w: np.ndarray | None) -> np.ndarray:
    if w is None:
        return np.ones(k, dtype=np.int64)
    return np.asarray(w, dtype=np.int64)


def strong_error(outputs: np.ndarray, m: int, weights: np.ndarray | None = None,
                 seed_weights: np.ndarray | None = None) -> Fraction:
    """Distance of ``(E(X,S), S)`` from ``(U_m, S)``.

    ``outputs[s, j]`` is the output on seed ``s`` for the ``j``-th source
    point, ``weights[j]`` that point's integer weight and ``seed_weights[s]``
    the weight of seed ``s`` (uniform when omitted).
    """
    outputs = np.asarray(outputs, dtype=np.int64)
    D, K = outputs.shape
    w = _weights(K, weights)
    v = _weights(D, seed_weights)
    M = 1 << m
    W, V = int(w.sum()), int(v.sum())
    if W * M * V >= EXACT_LIMIT:
        raise OverflowError("weights too large for exact accumulation")
    keys = (np.arange(D, dtype=np.int64)[:, None] * M + outputs).ravel()
    c = np.bincount(keys, weights=np.broadcast_to(w, (D, K)).ravel().astype(np.float64), minlength=D * M)
    c = c.astype(np.int64).reshape(D, M)
    dev = (np.abs(c * M - W).sum(axis=1) * v).sum()
    return Fraction(int(dev), 2 * V * W * M)


def plain_error(outputs: np.ndarray, m: int, weights: np.ndarray | None = None,
                seed_weights: np.ndarray | None = None) -> Fraction:
    """Distance of ``E(X, S)`` from ``U_m`` with the seed averaged out."""
    outputs = np.asarray(outputs, dtype=np.int64)
    D, K = outputs.shape
    w = _weights(K, weights)
    v = _weights(D, seed_weights)
    M = 1 << m
    W, V = int(w.sum()), int(v.sum())
    joint = np.outer(v, w).astype(np.float64).ravel()
    c = np.bincount(outputs.ravel(), weights=joint, minlength=M).astype(np.int64)
    dev = int(np.abs(c * M - V * W).sum())
    return Fraction(dev, 2 * V * W * M)


def distance_from_uniform(values: np.ndarray, m: int, weights: np.ndarray | None = None) -> Fraction:
    """Distance of a weighted multiset of ``m``-bit values from ``U_m``."""
    return plain_error(np.asarray(values, dtype=np.int64)[None, :], m, weights)


def conditional_distance(first: np.ndarray, m: int, side: np.ndarray,
                         weights: np.ndarray | None = None) -> Fraction:
    """Distance of ``(A, S)`` from ``(U_m, S)`` for a weighted multiset of pairs.

    ``first`` holds the ``m``-bit values ``A`` and ``side`` arbitrary
    nonnegative integer labels ``S`` of the conditioning variable.
    """
    first = np.asarray(first, dtype=np.int64)
    side = np.asarray(side, dtype=np.int64)
    w = _weights(len(first), weights)
    M = 1 << m
    W = int(w.sum())
    if W * M >= EXACT_LIMIT:
        raise OverflowError("weights too large for exact accumulation")
    labels, inv = np.unique(side, return_inverse=True)
    L = len(labels)
    wf = w.astype(np.float64)
    c = np.bincount(inv * M + first, weights=wf, minlength=L * M).astype(np.int64).reshape(L, M)
    marg = np.bincount(inv, weights=wf, minlength=L).astype(np.int64)
    dev = int(np.abs(c * M - marg[:, None]).sum())
    return Fraction(dev, 2 * W * M)


def popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


def parity(a: np.ndarray) -> np.ndarray:
    return popcount(a) & 1


def clopper_pearson_upper(failures: int, trials: int, confidence: float = 0.95) -> float:
    """One-sided upper confidence bound on a failure rate from ``trials`` samples."""
    if trials <= 0:
        return 1.0
    if failures >= trials:
        return 1.0
    alpha = 1.0 - confidence

    def cdf(p: float) -> float:
        return sum(math.comb(trials, i) * p**i * (1 - p) ** (trials - i) for i in range(failures + 1))

    if failures == 0:
        return 1.0 - alpha ** (1.0 / trials)
    lo, hi = failures / trials, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if cdf(mid) > alpha:
            lo = mid
        else:
            hi = mid
    return hi
