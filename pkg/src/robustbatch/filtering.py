"""Downweighting filter: corrected moments, batch scores, and the main loop.

Each round measures how much the weighted batch collection is skewed beyond
what multinomial sampling noise explains (the corrected second moment M),
finds the test matrix realizing that skew, scores every batch by its
contribution, and multiplicatively downweights high scorers.  When bad
batches carry more score mass than good ones, the update provably removes
more bad weight than good weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import haar
from .knorm import SolverConfig, TestMatrix, k_norm
from .types import (
    BatchDataset,
    DegenerateWeightsError,
    Histogram,
    ShapeParams,
    WeightVector,
    pad_to_power_of_two,
)

NEG_SCORE_TOL = 1e-8


class NoProgressError(RuntimeError):
    """Every supported batch scored zero; downweighting cannot proceed."""


@dataclass(frozen=True)
class MomentMatrices:
    """Weighted second moment A, multinomial variance proxy B, and M = A - B."""

    A: np.ndarray
    B: np.ndarray
    M: np.ndarray


@dataclass(frozen=True)
class FilterConfig:
    """Stopping rules and solver settings for the filter loop.

    The plateau heuristic stops the loop once a round of downweighting no
    longer shrinks the skewness value by the plateau_drop factor: removing
    adversarial mass slashes the value by orders of magnitude per round,
    while grinding honest batches barely moves it, so the stall is a
    tuning-free signal that the corruption is gone.
    """

    threshold_c: float = 2.0
    use_threshold: bool = True
    plateau_window: int = 1  # 0 disables the plateau heuristic
    plateau_drop: float = 0.65  # required per-round shrinkage to continue
    neg_tol: float = NEG_SCORE_TOL
    max_rounds: Optional[int] = None  # defaults to N
    solver: Optional[SolverConfig] = None  # defaults to SolverConfig(ell=shape.ell)


@dataclass(frozen=True)
class FilterState:
    """Final weights plus the trace of an entire filter run."""

    weights: WeightVector
    rounds: int
    knorm_trace: tuple
    stop_reason: str
    negative_score_rounds: int = 0


def compute_B(nu: Histogram, k: int) -> np.ndarray:
    """Exact covariance (1/k)(diag(nu) - nu nu^T) of a normalized multinomial."""
    p = nu.probs
    return (np.diag(p) - np.outer(p, p)) / k


def second_moment(weights: np.ndarray, freqs: np.ndarray, center: np.ndarray,
                  normalize: bool = True) -> np.ndarray:
    """sum_i w_i (X_i - center)^{x2}, optionally with weights normalized to 1.

    The raw (unnormalized) variant exists for identity checks in tests; the
    filter itself always normalizes.
    """
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if normalize:
        if total <= 0:
            raise DegenerateWeightsError("all weights are zero")
        w = w / total
    centered = freqs - center
    return (centered.T * w) @ centered


def compute_M(w: WeightVector, data: BatchDataset) -> MomentMatrices:
    """Corrected moment matrices about the weighted mean of the dataset."""
    freqs = data.frequency_matrix()
    total = w.total()
    if total <= 0:
        raise DegenerateWeightsError("all weights are zero")
    center = w.weights @ freqs / total
    A = second_moment(w.weights, freqs, center, normalize=True)
    B = (np.diag(center) - np.outer(center, center)) / data.k
    return MomentMatrices(A=A, B=B, M=A - B)


def compute_scores(w: WeightVector, data: BatchDataset, test: TestMatrix,
                   neg_tol: float = NEG_SCORE_TOL):
    """Per-batch skew contributions tau_i = <(X_i - mu(w))^{x2}, Sigma>.

    Returns (tau, has_negative); negative scores beyond neg_tol are reported,
    not raised, so the caller can terminate gracefully.
    """
    freqs = data.frequency_matrix()
    total = w.total()
    if total <= 0:
        raise DegenerateWeightsError("all weights are zero")
    center = w.weights @ freqs / total
    centered = freqs - center
    tau = np.einsum("ij,jk,ik->i", centered, test.sigma, centered)
    return tau, bool(np.any(tau < -neg_tol))


def one_d_filter(tau: np.ndarray, w: WeightVector) -> WeightVector:
    """Multiplicative downweighting w'_i = (1 - tau_i / tau_max) w_i.

    The maximum runs over supported batches only; every batch attaining it
    drops to weight zero, so the support strictly shrinks.
    """
    tau = np.asarray(tau, dtype=float)
    if tau.shape != w.weights.shape:
        raise ValueError("scores and weights must have the same length")
    supported = w.support()
    if not supported.any():
        raise DegenerateWeightsError("weight support is empty")
    if np.any(tau[supported] < 0):
        raise ValueError("scores must be nonnegative on the support")
    tau_max = float(tau[supported].max())
    if tau_max <= 0:
        raise NoProgressError("all supported scores are zero")
    scaled = np.where(supported, (1.0 - tau / tau_max) * w.weights, 0.0)
    return WeightVector(weights=scaled)


def _stop_threshold(eps: float, omega: float, k: int, c: float) -> float:
    corruption = (eps / k) * math.log(1.0 / eps) if eps > 0 else 0.0
    return c * (omega + corruption)


def learn_with_filter(data: BatchDataset, shape: ShapeParams, eps: float = 0.0,
                      omega: float = 0.0, config: Optional[FilterConfig] = None):
    """Run the filtering loop and return (raw estimate, FilterState).

    The domain is zero-padded to a power of two for the wavelet basis and the
    estimate is truncated back; padded symbols never carry mass.
    """
    if not 0.0 <= eps < 0.5:
        raise ValueError("corruption fraction must lie in [0, 1/2)")
    if omega < 0.0:
        raise ValueError("diversity radius must be nonnegative")
    config = config or FilterConfig()
    solver_cfg = config.solver or SolverConfig(ell=shape.ell)

    freqs_raw = data.frequency_matrix()
    n = data.n
    padded, _ = pad_to_power_of_two(freqs_raw[0])
    freqs = np.zeros((data.N, padded.size))
    freqs[:, :n] = freqs_raw
    basis = haar.build_basis(int(math.log2(padded.size)))

    N, k = data.N, data.k
    max_rounds = config.max_rounds if config.max_rounds is not None else N
    threshold = _stop_threshold(eps, omega, k, config.threshold_c)

    w = np.full(N, 1.0 / N)
    trace: list[float] = []
    negative_rounds = 0
    rounds = 0
    stop_reason = "max_rounds"

    while True:
        total = w.sum()
        if total <= 0:
            raise DegenerateWeightsError("weight support is empty")
        center = w @ freqs / total
        wn = w / total
        centered = freqs - center
        A = (centered.T * wn) @ centered
        B = (np.diag(center) - np.outer(center, center)) / k
        value, test, _ = k_norm(basis, A - B, solver_cfg)
        trace.append(value)

        if config.use_threshold and value < threshold:
            stop_reason = "threshold"
            break
        if config.plateau_window > 0 and len(trace) > config.plateau_window:
            # stalled against the previous round, and against two rounds ago
            # when available (one sluggish round inside an active cleaning
            # phase should not end the run)
            w_, drop = config.plateau_window, config.plateau_drop
            stalled = trace[-1] > drop * trace[-1 - w_]
            if stalled and len(trace) > 2 * w_:
                stalled = trace[-1] > drop**2 * trace[-1 - 2 * w_]
            if stalled:
                stop_reason = "plateau"
                break
        if rounds >= max_rounds:
            stop_reason = "max_rounds"
            break

        tau = np.einsum("ij,jk,ik->i", centered, test.sigma, centered)
        if np.any(tau < -config.neg_tol):
            negative_rounds += 1
            stop_reason = "negative_scores"
            break
        tau = np.maximum(tau, 0.0)
        supported = w > 0
        tau_max = float(tau[supported].max())
        if tau_max <= 0.0:
            stop_reason = "no_progress"
            break
        w_next = np.where(supported, (1.0 - tau / tau_max) * w, 0.0)
        if not np.any(w_next > 0):
            stop_reason = "support_exhausted"
            break
        w = w_next
        rounds += 1

    estimate = Histogram(probs=(w @ freqs / w.sum())[:n])
    state = FilterState(
        weights=WeightVector(weights=w),
        rounds=rounds,
        knorm_trace=tuple(trace),
        stop_reason=stop_reason,
        negative_score_rounds=negative_rounds,
    )
    return estimate, state
