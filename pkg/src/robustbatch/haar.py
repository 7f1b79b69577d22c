"""Haar wavelet basis: fast transforms, weighted norms, sign-change utilities.

The basis over R^n (n = 2^m) consists of the constant father row, the
half-and-half mother row, and localized rows at levels 1..m-1 ordered by
increasing level and then position.  Each row carries a scale weight
h = 2^(-(m-i)/2); the father and mother rows use level i = 0, so their
weight is n^(-1/2).  Transforms run through the O(n log n) butterfly; the
dense matrix is materialized lazily for small n only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_SQRT2 = math.sqrt(2.0)

# Dense matrices are test conveniences; past this size only the butterfly runs.
_MAX_DENSE_N = 4096
_MAX_M = 14


class ResourceLimitError(RuntimeError):
    """Requested basis or matrix would exceed the supported size."""


@dataclass(frozen=True)
class HaarBasis:
    """Immutable description of the Haar basis for R^n, n = 2^m."""

    m: int
    n: int
    weights: np.ndarray  # per-row scale weight h, shape (n,)
    level_index_sets: dict
    _dense: list = field(default_factory=list, repr=False, compare=False)

    @property
    def matrix(self) -> np.ndarray:
        """Dense n x n matrix with wavelets as rows (cached, small n only)."""
        if not self._dense:
            if self.n > _MAX_DENSE_N:
                raise ResourceLimitError(
                    f"dense Haar matrix at n={self.n} exceeds the {_MAX_DENSE_N} cap"
                )
            self._dense.append(forward(self, np.eye(self.n)))
        return self._dense[0]


def build_basis(m: int) -> HaarBasis:
    """Construct the Haar basis for n = 2^m."""
    if m < 0:
        raise ValueError(f"level count must be nonnegative, got {m}")
    if m > _MAX_M:
        raise ResourceLimitError(f"n = 2^{m} exceeds the supported maximum 2^{_MAX_M}")
    n = 1 << m
    weights = np.empty(n)
    weights[: min(2, n)] = 2.0 ** (-m / 2.0)
    levels = {"father": range(0, 1)}
    if m >= 1:
        levels["mother"] = range(1, 2)
    for i in range(1, m):
        lo, hi = 1 << i, 1 << (i + 1)
        weights[lo:hi] = 2.0 ** (-(m - i) / 2.0)
        levels[i] = range(lo, hi)
    basis = HaarBasis(m=m, n=n, weights=weights, level_index_sets=levels)
    basis.weights.flags.writeable = False
    return basis


def _check_length(basis: HaarBasis, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != basis.n:
        raise ValueError(f"expected leading dimension {basis.n}, got {x.shape[0]}")
    return x


def forward(basis: HaarBasis, x: np.ndarray) -> np.ndarray:
    """Apply H along the leading axis (butterfly, O(n log n) per column)."""
    y = _check_length(basis, x).copy()
    cur = basis.n
    while cur > 1:
        half = cur // 2
        even, odd = y[0:cur:2], y[1:cur:2]
        y[:half], y[half:cur] = (even + odd) / _SQRT2, (even - odd) / _SQRT2
        cur = half
    return y


def inverse(basis: HaarBasis, y: np.ndarray) -> np.ndarray:
    """Apply H^T along the leading axis, undoing :func:`forward`."""
    x = _check_length(basis, y).copy()
    cur = 2
    while cur <= basis.n:
        half = cur // 2
        approx, detail = x[:half].copy(), x[half:cur].copy()
        x[0:cur:2] = (approx + detail) / _SQRT2
        x[1:cur:2] = (approx - detail) / _SQRT2
        cur *= 2
    return x


def conjugate_forward(basis: HaarBasis, sigma: np.ndarray) -> np.ndarray:
    """H @ sigma @ H^T via row/column butterflies."""
    return forward(basis, forward(basis, sigma).T).T


def conjugate_inverse(basis: HaarBasis, transformed: np.ndarray) -> np.ndarray:
    """H^T @ L @ H, undoing :func:`conjugate_forward`."""
    return inverse(basis, inverse(basis, transformed).T).T


def weighted_matrix_norms(basis: HaarBasis, transformed: np.ndarray) -> dict:
    """Weighted norms of a transform-domain matrix L.

    Returns l11_h = sum h_a h_b |L_ab|, frob_sq_h = sum (h_a h_b L_ab)^2,
    and max_h = max h_a h_b |L_ab|.
    """
    L = np.asarray(transformed, dtype=float)
    if L.shape != (basis.n, basis.n):
        raise ValueError(f"expected a {basis.n}x{basis.n} matrix, got {L.shape}")
    h = basis.weights
    scaled = np.abs(L) * np.outer(h, h)
    return {
        "l11_h": float(scaled.sum()),
        "frob_sq_h": float((scaled * scaled).sum()),
        "max_h": float(scaled.max()) if L.size else 0.0,
    }


def count_sign_changes(v: np.ndarray) -> int:
    """Number of adjacent flips in a +/-1 vector."""
    v = np.asarray(v)
    if not np.all(np.abs(v) == 1):
        raise ValueError("entries must be +1 or -1")
    return int(np.count_nonzero(v[1:] != v[:-1]))


def enumerate_sign_vectors(n: int, ell: int) -> list[np.ndarray]:
    """All v in {+/-1}^n with at most ell sign changes (oracle use, n <= 16)."""
    if n > 16:
        raise ValueError(f"enumeration refused for n={n} > 16")
    if n < 1:
        raise ValueError("n must be positive")
    from itertools import combinations

    out = []
    positions = range(1, n)
    for count in range(0, min(ell, n - 1) + 1):
        for changes in combinations(positions, count):
            v = np.ones(n)
            sign = 1.0
            prev = 0
            for pos in changes:
                v[prev:pos] = sign
                sign = -sign
                prev = pos
            v[prev:] = sign
            out.append(v)
            out.append(-v)
    return out


def sample_sign_vector(n: int, ell: int, rng: np.random.Generator) -> np.ndarray:
    """One random member of {+/-1}^n with at most ell sign changes."""
    count = int(rng.integers(0, min(ell, n - 1) + 1))
    changes = np.sort(rng.choice(np.arange(1, n), size=count, replace=False))
    v = np.empty(n)
    sign = 1.0 if rng.integers(0, 2) == 0 else -1.0
    prev = 0
    for pos in changes:
        v[prev:pos] = sign
        sign = -sign
        prev = pos
    v[prev:] = sign
    return v
