"""Interval-union distance and shape-constrained rounding of raw estimates.

The interval distance generalizes total variation: it is the largest
discrepancy over unions of at most K disjoint index intervals, computed by
the classic max-K-disjoint-subarrays dynamic program.  Rounding projects a
raw vector onto piecewise-polynomial shape via an exact least-squares
segmentation DP, then repairs it into a distribution.
"""

from __future__ import annotations

import numpy as np

from .types import Histogram, ShapeParams


class DegenerateEstimateError(ValueError):
    """Rounded estimate has no mass left after clipping."""


def _max_k_interval_sum(d: np.ndarray, K: int) -> float:
    """Max total sum over at most K disjoint intervals of d (empty union = 0)."""
    n = d.size
    g_prev = np.zeros(n + 1)
    for _ in range(K):
        g_cur = np.zeros(n + 1)
        e = -np.inf
        for i in range(1, n + 1):
            e = max(e, g_prev[i - 1]) + d[i - 1]
            g_cur[i] = max(g_cur[i - 1], e)
        g_prev = g_cur
    return float(g_prev[n])


def ak_distance(mu, nu, K: int) -> float:
    """Largest |mass difference| over unions of at most K disjoint intervals.

    Inputs need not be normalized, so raw estimates can be scored directly.
    """
    if K < 1:
        raise ValueError("K must be a positive integer")
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape or mu.ndim != 1:
        raise ValueError("inputs must be 1-D vectors of equal length")
    d = mu - nu
    return max(_max_k_interval_sum(d, K), _max_k_interval_sum(-d, K))


def _constant_cost_table(x: np.ndarray) -> np.ndarray:
    """cost[a, b] = SSE of the best constant on the half-open segment [a, b)."""
    n = x.size
    s = np.concatenate([[0.0], np.cumsum(x)])
    ss = np.concatenate([[0.0], np.cumsum(x * x)])
    cost = np.full((n + 1, n + 1), np.inf)
    for a in range(n):
        lengths = np.arange(1, n - a + 1)
        seg_sum = s[a + 1 :] - s[a]
        seg_ss = ss[a + 1 :] - ss[a]
        cost[a, a + 1 :] = np.maximum(seg_ss - seg_sum * seg_sum / lengths, 0.0)
    return cost


def _polynomial_cost_table(x: np.ndarray, degree: int) -> np.ndarray:
    """Per-segment least-squares SSE table for degree >= 1 fits."""
    n = x.size
    cost = np.full((n + 1, n + 1), np.inf)
    for a in range(n):
        for b in range(a + 1, n + 1):
            t = np.arange(b - a, dtype=float)
            t -= t.mean()  # centering keeps the Vandermonde well conditioned
            deg = min(degree, b - a - 1)
            V = np.vander(t, deg + 1)
            _, res, _, _ = np.linalg.lstsq(V, x[a:b], rcond=None)
            if res.size:
                cost[a, b] = float(res[0])
            else:
                fitted = V @ np.linalg.lstsq(V, x[a:b], rcond=None)[0]
                cost[a, b] = float(np.sum((x[a:b] - fitted) ** 2))
    return cost


def _fitted_values(x: np.ndarray, boundaries: list[int], degree: int) -> np.ndarray:
    out = np.empty_like(x)
    for a, b in zip(boundaries[:-1], boundaries[1:]):
        if degree == 0:
            out[a:b] = x[a:b].mean()
        else:
            t = np.arange(b - a, dtype=float)
            t -= t.mean()
            deg = min(degree, b - a - 1)
            V = np.vander(t, deg + 1)
            out[a:b] = V @ np.linalg.lstsq(V, x[a:b], rcond=None)[0]
    return out


def fit_piecewise_polynomial(x, pieces: int, degree: int = 0):
    """Least-squares segmentation of x into at most `pieces` segments.

    Returns (fitted vector, breakpoints), where breakpoints are the interior
    segment boundaries (0-indexed, half-open convention).  Exact DP; ties are
    broken toward fewer pieces, then earliest breakpoints.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a nonempty 1-D vector")
    n = x.size
    if pieces < 1:
        raise ValueError("pieces must be positive")
    pieces = min(pieces, n)
    cost = _constant_cost_table(x) if degree == 0 else _polynomial_cost_table(x, degree)

    # dp[j][i] = min cost of splitting x[i:] into exactly j segments
    dp = np.full((pieces + 1, n + 1), np.inf)
    dp[0, n] = 0.0
    for j in range(1, pieces + 1):
        for i in range(n - 1, -1, -1):
            dp[j, i] = np.min(cost[i, i + 1 : n + 1] + dp[j - 1, i + 1 : n + 1])

    best_j = 1
    for j in range(2, pieces + 1):
        if dp[j, 0] < dp[best_j, 0]:
            best_j = j

    boundaries = [0]
    i, j = 0, best_j
    while j > 0:
        vals = cost[i, i + 1 : n + 1] + dp[j - 1, i + 1 : n + 1]
        i = i + 1 + int(np.argmin(vals))
        boundaries.append(i)
        j -= 1
    return _fitted_values(x, boundaries, degree), tuple(boundaries[1:-1])


def fit_piecewise_constant(x, s: int):
    """Best approximation of x by at most s constant segments (exact DP)."""
    return fit_piecewise_polynomial(x, pieces=s, degree=0)


def round_to_distribution(raw, shape: ShapeParams) -> Histogram:
    """Snap a raw estimate onto the shape class and repair it to a Histogram.

    Fits the segmentation DP (degree-d least squares per segment), clips
    negatives to zero, and renormalizes to total mass one.
    """
    raw = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw estimate must be finite")
    fitted, _ = fit_piecewise_polynomial(raw, pieces=shape.pieces, degree=shape.degree)
    clipped = np.maximum(fitted, 0.0)
    total = clipped.sum()
    if total <= 0:
        raise DegenerateEstimateError("no positive mass after clipping")
    return Histogram(probs=clipped / total)
