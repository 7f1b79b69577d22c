"""Shared data model: distributions, batches, filter weights, shape settings.

All types are immutable value objects (frozen dataclasses over read-only
arrays), safe to share between concurrent tasks.  Batches are stored only
as frequency vectors; raw ordered sample tuples are never retained.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

SUM_TOL = 1e-9


class DegenerateWeightsError(ValueError):
    """All filter weights are zero; no weighted mean exists."""


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Histogram:
    """Probability vector over the n symbols of a discrete domain."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen_array(self.probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a nonempty 1-D vector")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()}, not 1")
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class FrequencyVector:
    """Empirical frequencies of one batch of k samples (entries are j/k)."""

    freqs: np.ndarray
    k: int

    def __post_init__(self):
        freqs = _frozen_array(self.freqs)
        if self.k < 1:
            raise ValueError("batch size k must be positive")
        if freqs.ndim != 1 or freqs.size == 0:
            raise ValueError("freqs must be a nonempty 1-D vector")
        if np.any(freqs < 0):
            raise ValueError("frequencies must be nonnegative")
        if abs(freqs.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"frequencies sum to {freqs.sum()}, not 1")
        counts = freqs * self.k
        if np.max(np.abs(counts - np.round(counts))) > SUM_TOL:
            raise ValueError("k * freqs must be integral")
        object.__setattr__(self, "freqs", freqs)

    @property
    def n(self) -> int:
        return self.freqs.size

    def counts(self) -> np.ndarray:
        return np.round(self.freqs * self.k).astype(int)


@dataclass(frozen=True)
class GroundTruth:
    """Synthetic-run metadata: true distribution, adversary target, bad indices."""

    mu: Histogram
    nu: Histogram
    corrupted_indices: frozenset

    def __post_init__(self):
        object.__setattr__(self, "corrupted_indices", frozenset(self.corrupted_indices))


@dataclass(frozen=True)
class BatchDataset:
    """A collection of N same-shaped batches, optionally with ground truth."""

    batches: tuple
    k: int
    ground_truth: Optional[GroundTruth] = None

    def __post_init__(self):
        batches = tuple(self.batches)
        if not batches:
            raise ValueError("dataset must contain at least one batch")
        n = batches[0].n
        for b in batches:
            if b.n != n or b.k != self.k:
                raise ValueError("all batches must share the same n and k")
        if self.ground_truth is not None:
            bad = self.ground_truth.corrupted_indices
            if bad and (min(bad) < 0 or max(bad) >= len(batches)):
                raise ValueError("corrupted_indices out of range")
        object.__setattr__(self, "batches", batches)

    @property
    def N(self) -> int:
        return len(self.batches)

    @property
    def n(self) -> int:
        return self.batches[0].n

    def frequency_matrix(self) -> np.ndarray:
        """N x n matrix with one frequency vector per row."""
        return np.stack([b.freqs for b in self.batches])


@dataclass(frozen=True)
class WeightVector:
    """Per-batch filter weights, each in [0, 1/N]."""

    weights: np.ndarray

    def __post_init__(self):
        weights = _frozen_array(self.weights)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError("weights must be a nonempty 1-D vector")
        upper = 1.0 / weights.size + SUM_TOL
        if np.any(weights < -SUM_TOL) or np.any(weights > upper):
            raise ValueError("each weight must lie in [0, 1/N]")
        object.__setattr__(self, "weights", weights)

    @property
    def N(self) -> int:
        return self.weights.size

    def support(self) -> np.ndarray:
        return self.weights > 0

    def total(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class ShapeParams:
    """Piecewise-polynomial shape class: s pieces of degree d."""

    pieces: int
    degree: int = 0

    def __post_init__(self):
        if self.pieces < 1:
            raise ValueError("pieces must be positive")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")

    @property
    def ell(self) -> int:
        """Sign-change budget 2 s (d+1) of the dual test vectors."""
        return 2 * self.pieces * (self.degree + 1)


def frequency_from_counts(counts, k: int) -> FrequencyVector:
    """Build a frequency vector from integer symbol counts summing to k."""
    counts = np.asarray(counts)
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    if int(np.sum(counts)) != k:
        raise ValueError(f"counts sum to {np.sum(counts)}, expected k={k}")
    return FrequencyVector(freqs=np.asarray(counts, dtype=float) / k, k=k)


def weighted_mean(w: WeightVector, data: BatchDataset) -> Histogram:
    """Normalized weighted average sum_i (w_i / |w|_1) X_i of the batches."""
    if w.N != data.N:
        raise ValueError("weight length must match the number of batches")
    total = w.total()
    if total <= 0:
        raise DegenerateWeightsError("all weights are zero")
    return Histogram(probs=w.weights @ data.frequency_matrix() / total)


def uniform_weights(N: int) -> WeightVector:
    return WeightVector(weights=np.full(N, 1.0 / N))


def pad_to_power_of_two(probs: np.ndarray) -> tuple[np.ndarray, int]:
    """Zero-pad a vector up to the next power-of-two length.

    Returns the padded vector and the original length, so estimates can be
    truncated back.  Interval structure is preserved by right-padding.
    """
    probs = np.asarray(probs, dtype=float)
    n = probs.size
    target = 1 << max(0, (n - 1).bit_length())
    if target == n:
        return probs, n
    return np.concatenate([probs, np.zeros(target - n)]), n


def save_dataset(data: BatchDataset, path) -> None:
    """Write the JSON dataset format (integer counts per batch)."""
    doc = {
        "n": data.n,
        "k": data.k,
        "batches": [b.counts().tolist() for b in data.batches],
    }
    if data.ground_truth is not None:
        gt = data.ground_truth
        doc["ground_truth"] = {
            "mu": gt.mu.probs.tolist(),
            "nu": gt.nu.probs.tolist(),
            "corrupted_indices": sorted(gt.corrupted_indices),
        }
    Path(path).write_text(json.dumps(doc))


def load_dataset(path) -> BatchDataset:
    """Read the JSON dataset format written by :func:`save_dataset`."""
    doc = json.loads(Path(path).read_text())
    try:
        n, k = int(doc["n"]), int(doc["k"])
        batches = []
        for counts in doc["batches"]:
            if len(counts) != n:
                raise ValueError(f"batch has {len(counts)} symbols, expected {n}")
            batches.append(frequency_from_counts(counts, k))
        ground_truth = None
        if "ground_truth" in doc and doc["ground_truth"] is not None:
            gt = doc["ground_truth"]
            ground_truth = GroundTruth(
                mu=Histogram(np.asarray(gt["mu"], dtype=float)),
                nu=Histogram(np.asarray(gt["nu"], dtype=float)),
                corrupted_indices=frozenset(int(i) for i in gt["corrupted_indices"]),
            )
    except KeyError as exc:
        raise ValueError(f"dataset file missing field {exc}") from exc
    return BatchDataset(batches=tuple(batches), k=k, ground_truth=ground_truth)
