"""Synthetic ground truths, the corrupting adversary, and dataset generation.

All generators take an explicit numpy Generator; identical seeds reproduce
identical datasets byte for byte.  Concurrent generation requires
independent generators (split seeds at the caller).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .types import BatchDataset, FrequencyVector, GroundTruth, Histogram

MAX_RESAMPLE_ATTEMPTS = 1000


@dataclass(frozen=True)
class AdversaryParams:
    """Corruption settings: target distance of the planted distribution."""

    delta_adv: float
    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps < 0.5:
            raise ValueError("corruption fraction must lie in [0, 1/2)")
        if not 0.0 <= self.delta_adv <= 1.0:
            raise ValueError("target distance must lie in [0, 1]")


def random_arbitrary_mu(n: int, rng: np.random.Generator) -> Histogram:
    """Unstructured truth: iid uniform entries, normalized."""
    if n < 2:
        raise ValueError("domain size must be at least 2")
    raw = rng.uniform(0.0, 1.0, size=n)
    return Histogram(probs=raw / raw.sum())


def random_piecewise_mu(n: int, pieces: int, rng: np.random.Generator) -> Histogram:
    """Structured truth: uniformly random breakpoints, uniform level per piece."""
    if not 1 <= pieces <= n:
        raise ValueError("pieces must lie in [1, n]")
    cuts = np.sort(rng.choice(np.arange(1, n), size=pieces - 1, replace=False))
    bounds = np.concatenate([[0], cuts, [n]])
    levels = rng.uniform(0.0, 1.0, size=pieces)
    raw = np.empty(n)
    for lo, hi, level in zip(bounds[:-1], bounds[1:], levels):
        raw[lo:hi] = level
    return Histogram(probs=raw / raw.sum())


def adversarial_target(mu: Histogram, delta_adv: float) -> Optional[Histogram]:
    """Planted distribution at distance exactly delta_adv from mu.

    Adds 2*delta/n to the n/2 smallest entries of mu (by value, ties by
    index) and subtracts it from the n/2 largest.  Returns None when the
    subtraction would go negative, signaling the caller to resample mu.
    """
    n = mu.n
    if n % 2 != 0:
        raise ValueError("domain size must be even")
    if delta_adv == 0.0:
        return mu
    shift = 2.0 * delta_adv / n
    order = np.argsort(mu.probs, kind="stable")
    perturbed = mu.probs.copy()
    perturbed[order[: n // 2]] += shift
    perturbed[order[n // 2 :]] -= shift
    if np.any(perturbed < 0):
        return None
    return Histogram(probs=perturbed)


def sample_adversarial_pair(n: int, delta_adv: float, rng: np.random.Generator,
                            pieces: Optional[int] = None):
    """Draw (mu, nu) with TV distance exactly delta_adv, resampling as needed."""
    for _ in range(MAX_RESAMPLE_ATTEMPTS):
        if pieces is None:
            mu = random_arbitrary_mu(n, rng)
        else:
            mu = random_piecewise_mu(n, pieces, rng)
        nu = adversarial_target(mu, delta_adv)
        if nu is not None:
            return mu, nu
    raise RuntimeError("could not draw a valid adversarial pair")


def sample_multinomial(mu: Histogram, k: int, rng: np.random.Generator) -> FrequencyVector:
    """One batch: k iid draws from mu, tallied into a frequency vector."""
    counts = rng.multinomial(k, mu.probs / mu.probs.sum())
    return FrequencyVector(freqs=counts / k, k=k)


def clean_batch_count(N: int, eps: float) -> int:
    """floor((1 - eps) N) with a guard against float drop-off at exact integers."""
    return int(np.floor((1.0 - eps) * N + 1e-9))


def generate_corrupted_dataset(mu: Histogram, nu: Histogram, N: int, eps: float,
                               k: int, rng: np.random.Generator,
                               batch_perturbation: Optional[Callable] = None) -> BatchDataset:
    """floor((1-eps)N) batches from mu and the rest from nu, shuffled.

    `batch_perturbation(mu, rng) -> Histogram` optionally draws a per-batch
    honest distribution (diversity hook); the default keeps every honest
    batch at mu exactly.
    """
    if mu.n != nu.n:
        raise ValueError("mu and nu must share a domain")
    n_clean = clean_batch_count(N, eps)
    batches = []
    for _ in range(n_clean):
        source = batch_perturbation(mu, rng) if batch_perturbation else mu
        batches.append(sample_multinomial(source, k, rng))
    for _ in range(N - n_clean):
        batches.append(sample_multinomial(nu, k, rng))
    order = rng.permutation(N)
    shuffled = tuple(batches[i] for i in order)
    corrupted = frozenset(int(pos) for pos, i in enumerate(order) if i >= n_clean)
    truth = GroundTruth(mu=mu, nu=nu, corrupted_indices=corrupted)
    return BatchDataset(batches=shuffled, k=k, ground_truth=truth)
