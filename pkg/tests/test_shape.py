from itertools import combinations

import numpy as np
import pytest

from robustbatch import haar
from robustbatch.shape import (
    DegenerateEstimateError,
    ak_distance,
    fit_piecewise_constant,
    fit_piecewise_polynomial,
    round_to_distribution,
)
from robustbatch.types import Histogram, ShapeParams


def brute_force_interval_distance(mu, nu, K):
    """Enumerate every union of at most K disjoint intervals."""
    d = np.asarray(mu, dtype=float) - np.asarray(nu, dtype=float)
    n = d.size
    intervals = [(a, b) for a in range(n) for b in range(a + 1, n + 1)]
    best = 0.0
    for count in range(1, K + 1):
        for combo in combinations(intervals, count):
            spans = sorted(combo)
            if any(spans[i][1] > spans[i + 1][0] for i in range(len(spans) - 1)):
                continue  # overlapping or touching-out-of-order picks
            total = sum(d[a:b].sum() for a, b in spans)
            best = max(best, abs(total))
    return best


def brute_force_partition_cost(x, s):
    """Exhaustive minimum SSE over partitions into at most s segments."""
    n = len(x)
    best = np.inf
    for pieces in range(1, s + 1):
        for cuts in combinations(range(1, n), pieces - 1):
            bounds = [0, *cuts, n]
            cost = 0.0
            for a, b in zip(bounds[:-1], bounds[1:]):
                seg = x[a:b]
                cost += float(np.sum((seg - seg.mean()) ** 2))
            best = min(best, cost)
    return best


def test_ak_distance_examples():
    assert ak_distance([0.5, 0.5, 0, 0], [0, 0, 0.5, 0.5], 1) == pytest.approx(1.0)
    d = np.array([0.2, -0.2, 0.2, -0.2])
    zero = np.zeros(4)
    assert ak_distance(d, zero, 1) == pytest.approx(0.2)
    assert ak_distance(d, zero, 2) == pytest.approx(0.4)
    assert ak_distance([0.3, 0.7], [0.3, 0.7], 1) == 0.0


def test_ak_distance_validation():
    with pytest.raises(ValueError):
        ak_distance([0.5, 0.5], [1.0, 0.0], 0)
    with pytest.raises(ValueError):
        ak_distance([0.5, 0.5], [1.0, 0.0, 0.0], 1)


def test_ak_distance_matches_interval_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(40):
        n = int(rng.integers(2, 9))
        mu = rng.dirichlet(np.ones(n))
        nu = rng.dirichlet(np.ones(n))
        K = int(rng.integers(1, 4))
        assert ak_distance(mu, nu, K) == pytest.approx(
            brute_force_interval_distance(mu, nu, K), abs=1e-12
        )


def test_ak_distance_matches_sign_vector_form():
    # for normalized inputs the distance is half the best correlation with
    # a +/-1 vector having at most 2K sign changes
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(2, 13))
        mu = rng.dirichlet(np.ones(n))
        nu = rng.dirichlet(np.ones(n))
        K = int(rng.integers(1, 4))
        d = mu - nu
        best = max(abs(float(d @ v)) for v in haar.enumerate_sign_vectors(n, 2 * K))
        assert ak_distance(mu, nu, K) == pytest.approx(0.5 * best, abs=1e-12)


def test_ak_distance_symmetry_monotonicity_tv():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(rng.integers(2, 11)) * 2
        mu = rng.dirichlet(np.ones(n))
        nu = rng.dirichlet(np.ones(n))
        values = [ak_distance(mu, nu, K) for K in range(1, n // 2 + 1)]
        assert ak_distance(nu, mu, 3 if n >= 6 else 1) == pytest.approx(
            ak_distance(mu, nu, 3 if n >= 6 else 1), abs=1e-12
        )
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(0.5 * np.abs(mu - nu).sum(), abs=1e-12)


def test_fit_exact_recovery_and_breakpoint():
    fitted, breaks = fit_piecewise_constant(np.array([0.1, 0.1, 0.4, 0.4]), 2)
    assert np.allclose(fitted, [0.1, 0.1, 0.4, 0.4])
    assert breaks == (2,)


def test_fit_single_piece_is_mean():
    x = np.array([1.0, 2.0, 6.0])
    fitted, breaks = fit_piecewise_constant(x, 1)
    assert np.allclose(fitted, x.mean())
    assert breaks == ()


def test_fit_matches_partition_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(2, 11))
        x = rng.normal(size=n)
        s = int(rng.integers(1, 4))
        fitted, _ = fit_piecewise_constant(x, s)
        assert float(np.sum((x - fitted) ** 2)) == pytest.approx(
            brute_force_partition_cost(x, s), abs=1e-10
        )


def test_fit_cost_nonincreasing_in_pieces():
    rng = np.random.default_rng(4)
    x = rng.normal(size=16)
    costs = []
    for s in range(1, 8):
        fitted, _ = fit_piecewise_constant(x, s)
        costs.append(float(np.sum((x - fitted) ** 2)))
    assert all(a >= b - 1e-12 for a, b in zip(costs, costs[1:]))


def test_fit_prefers_fewer_pieces_on_ties():
    # exactly representable with 2 pieces; asking for 4 must not split further
    x = np.array([1.0, 1.0, 3.0, 3.0])
    _, breaks = fit_piecewise_constant(x, 4)
    assert breaks == (2,)


def test_degree_one_fit_recovers_lines():
    t = np.arange(8, dtype=float)
    x = np.concatenate([2.0 + 0.5 * t[:4], 10.0 - t[:4]])
    fitted, breaks = fit_piecewise_polynomial(x, pieces=2, degree=1)
    assert np.allclose(fitted, x, atol=1e-9)
    assert breaks == (4,)


def test_round_to_distribution_fixed_point():
    probs = np.array([0.1, 0.1, 0.1, 0.15, 0.15, 0.15, 0.125, 0.125])
    out = round_to_distribution(probs, ShapeParams(pieces=3))
    assert np.allclose(out.probs, probs, atol=1e-12)


def test_round_to_distribution_repairs_negatives():
    raw = np.array([0.5, 0.6, -0.1, 0.0])
    out = round_to_distribution(raw, ShapeParams(pieces=4))
    assert isinstance(out, Histogram)
    assert out.probs.sum() == pytest.approx(1.0)
    assert np.all(out.probs >= 0)
    assert out.probs[2] == 0.0


def test_round_to_distribution_degenerate():
    with pytest.raises(DegenerateEstimateError):
        round_to_distribution(np.array([-1.0, -2.0]), ShapeParams(pieces=1))
    with pytest.raises(ValueError):
        round_to_distribution(np.array([np.nan, 1.0]), ShapeParams(pieces=1))


def test_rounding_noisy_piecewise_truth_reduces_tv_error():
    # structured truths: rounding a noisy estimate should usually help
    from robustbatch.synth import random_piecewise_mu

    shape = ShapeParams(pieces=5)
    wins = 0
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        mu = random_piecewise_mu(64, 5, rng).probs
        noisy = mu + rng.normal(scale=0.2 / 64, size=64)
        raw_tv = 0.5 * np.abs(noisy - mu).sum()
        rounded = round_to_distribution(noisy, shape)
        rounded_tv = 0.5 * np.abs(rounded.probs - mu).sum()
        wins += rounded_tv < raw_tv
    assert wins >= 8
