"""Benchmark harness: four parameter sweeps, three estimators, CSV output.

Each sweep compares the filter against the naive empirical mean, the oracle
mean over uncorrupted batches, and an eps/sqrt(k) reference level, writing
one raw record per (sweep value, trial, estimator).  Aggregation across
trials is left to the plotting layer.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .filtering import FilterConfig, learn_with_filter
from .shape import ak_distance, round_to_distribution
from .synth import generate_corrupted_dataset, sample_adversarial_pair, sample_multinomial
from .types import BatchDataset, GroundTruth, Histogram, ShapeParams

EXPERIMENT_IDS = ("vary_n", "vary_k", "vary_eps", "vary_N")
EXPERIMENT_TYPES = ("arbitrary", "structured")
ESTIMATOR_ORDER = ("filter", "naive", "oracle", "reference")

DEFAULT_SWEEPS = {
    "vary_n": (4, 8, 16, 32, 64, 128),
    "vary_k": (1, 50, 100, 250, 500, 750, 1000),
    "vary_eps": (0.0, 0.1, 0.2, 0.3, 0.4),
    "vary_N": (0.5, 0.75, 1.0, 1.25, 1.5),
}

CSV_COLUMNS = (
    "experiment_id",
    "experiment_type",
    "trial",
    "param_name",
    "param_value",
    "estimator",
    "error_ak",
    "error_tv",
    "rounds",
    "stop_reason",
    "runtime_ms",
    "seed",
)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    experiment_type: str = "arbitrary"
    n: int = 64
    k: int = 1000
    eps: float = 0.4
    delta_adv: float = 0.5
    pieces: int = 5
    degree: int = 0
    N: Optional[int] = None  # None applies the per-experiment batch formula
    sweep: tuple = ()
    trials: int = 10
    base_seed: int = 0

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_IDS:
            raise ValueError(f"unknown experiment_id {self.experiment_id!r}")
        if self.experiment_type not in EXPERIMENT_TYPES:
            raise ValueError(f"unknown experiment_type {self.experiment_type!r}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        sweep = tuple(self.sweep) or DEFAULT_SWEEPS[self.experiment_id]
        object.__setattr__(self, "sweep", sweep)

    @property
    def shape(self) -> ShapeParams:
        return ShapeParams(pieces=self.pieces, degree=self.degree)

    @property
    def ell(self) -> int:
        return self.shape.ell

    def batch_count(self) -> int:
        """Fixed batch count: explicit N, or the sweep's formula with ell."""
        if self.N is not None:
            return self.N
        if self.experiment_id in ("vary_n", "vary_k"):
            return int(math.floor((self.ell / self.eps**2) / (1.0 - self.eps) + 1e-9))
        if self.experiment_id == "vary_eps":
            return int(math.floor(self.ell / self.eps**2 + 1e-9))
        raise ValueError("vary_N derives its batch count from the sweep value")


@dataclass(frozen=True)
class ExperimentRecord:
    experiment_id: str
    experiment_type: str
    trial: int
    param_name: str
    param_value: float
    estimator: str
    error_ak: float
    error_tv: float
    rounds: int
    stop_reason: str
    runtime_ms: int
    seed: int


def estimator_naive(data: BatchDataset) -> Histogram:
    """Empirical mean of all batches.

    Uses the same reduction as the oracle so the two agree bitwise on
    corruption-free data.
    """
    return Histogram(probs=np.mean([b.freqs for b in data.batches], axis=0))


def estimator_oracle(data: BatchDataset) -> Histogram:
    """Empirical mean of the uncorrupted batches only (needs ground truth)."""
    if data.ground_truth is None:
        raise ValueError("oracle estimator requires ground-truth metadata")
    bad = data.ground_truth.corrupted_indices
    clean = [b.freqs for i, b in enumerate(data.batches) if i not in bad]
    if not clean:
        raise ValueError("no uncorrupted batches available")
    return Histogram(probs=np.mean(clean, axis=0))


def _point_seed(base_seed: int, trial: int, sweep_idx: int) -> int:
    return base_seed * 1_000_003 + trial * 1_009 + sweep_idx


def _evaluate_point(config: ExperimentConfig, filter_config: Optional[FilterConfig],
                    data: BatchDataset, mu: Histogram, eps: float, trial: int,
                    param_name: str, param_value, seed: int) -> list[ExperimentRecord]:
    """Score all four estimator rows on one generated dataset."""
    shape = config.shape
    K = max(1, config.ell // 2)
    structured = config.experiment_type == "structured"

    def errors(est: Histogram):
        ak = ak_distance(est.probs, mu.probs, K)
        tv = 0.5 * float(np.abs(est.probs - mu.probs).sum())
        return ak, tv

    def row(estimator, ak, tv, rounds=0, stop_reason="", ms=0):
        return ExperimentRecord(
            experiment_id=config.experiment_id,
            experiment_type=config.experiment_type,
            trial=trial,
            param_name=param_name,
            param_value=param_value,
            estimator=estimator,
            error_ak=ak,
            error_tv=tv,
            rounds=rounds,
            stop_reason=stop_reason,
            runtime_ms=ms,
            seed=seed,
        )

    records = []
    start = time.perf_counter()
    try:
        raw, state = learn_with_filter(data, shape, eps=eps, omega=0.0, config=filter_config)
        estimate = round_to_distribution(raw.probs, shape) if structured else raw
        ms = int((time.perf_counter() - start) * 1000)
        ak, tv = errors(estimate)
        records.append(row("filter", ak, tv, state.rounds, state.stop_reason, ms))
    except Exception as exc:  # record the failure, keep the sweep going
        ms = int((time.perf_counter() - start) * 1000)
        records.append(row("filter", float("nan"), float("nan"), 0,
                           f"error:{type(exc).__name__}", ms))

    for name, fn in (("naive", estimator_naive), ("oracle", estimator_oracle)):
        start = time.perf_counter()
        ak, tv = errors(fn(data))
        ms = int((time.perf_counter() - start) * 1000)
        records.append(row(name, ak, tv, ms=ms))

    ref = eps / math.sqrt(data.k)
    records.append(row("reference", ref, ref))
    return records


def _pieces_arg(config: ExperimentConfig, n: int) -> Optional[int]:
    if config.experiment_type != "structured":
        return None
    return min(config.pieces, n)  # small domains cannot host every piece


def _run_trial(config: ExperimentConfig, filter_config, trial: int) -> list[ExperimentRecord]:
    records = []
    if config.experiment_id == "vary_n":
        N = config.batch_count()
        for idx, n in enumerate(config.sweep):
            seed = _point_seed(config.base_seed, trial, idx)
            rng = np.random.default_rng(seed)
            mu, nu = sample_adversarial_pair(int(n), config.delta_adv, rng, _pieces_arg(config, int(n)))
            data = generate_corrupted_dataset(mu, nu, N, config.eps, config.k, rng)
            records += _evaluate_point(config, filter_config, data, mu, config.eps,
                                       trial, "n", int(n), seed)
    elif config.experiment_id == "vary_k":
        N = config.batch_count()
        seed = _point_seed(config.base_seed, trial, 0)
        rng = np.random.default_rng(seed)
        mu, nu = sample_adversarial_pair(config.n, config.delta_adv, rng, _pieces_arg(config, config.n))
        for k in config.sweep:
            data = generate_corrupted_dataset(mu, nu, N, config.eps, int(k), rng)
            records += _evaluate_point(config, filter_config, data, mu, config.eps,
                                       trial, "k", int(k), seed)
    elif config.experiment_id == "vary_eps":
        # incremental protocol: one clean pool per trial, augmented per eps
        N = config.batch_count()
        seed = _point_seed(config.base_seed, trial, 0)
        rng = np.random.default_rng(seed)
        mu, nu = sample_adversarial_pair(config.n, config.delta_adv, rng, _pieces_arg(config, config.n))
        clean = [sample_multinomial(mu, config.k, rng) for _ in range(N)]
        max_bad = max(int(math.floor(e * N / (1.0 - e) + 1e-9)) for e in config.sweep)
        bad_pool = [sample_multinomial(nu, config.k, rng) for _ in range(max_bad)]
        for eps in config.sweep:
            bad_count = int(math.floor(eps * N / (1.0 - eps) + 1e-9))
            batches = tuple(clean) + tuple(bad_pool[:bad_count])
            truth_bad = frozenset(range(N, N + bad_count))
            data = BatchDataset(
                batches=batches,
                k=config.k,
                ground_truth=GroundTruth(mu=mu, nu=nu, corrupted_indices=truth_bad),
            )
            records += _evaluate_point(config, filter_config, data, mu, float(eps),
                                       trial, "eps", float(eps), seed)
    elif config.experiment_id == "vary_N":
        seed = _point_seed(config.base_seed, trial, 0)
        rng = np.random.default_rng(seed)
        mu, nu = sample_adversarial_pair(config.n, config.delta_adv, rng, _pieces_arg(config, config.n))
        for rho in config.sweep:
            N = int(math.floor(rho * config.ell / config.eps**2 + 1e-9))
            data = generate_corrupted_dataset(mu, nu, N, config.eps, config.k, rng)
            records += _evaluate_point(config, filter_config, data, mu, config.eps,
                                       trial, "N", N, seed)
    return records


def run_experiment(config: ExperimentConfig, filter_config: Optional[FilterConfig] = None,
                   csv_path=None, threads: int = 1) -> list[ExperimentRecord]:
    """Run every (trial x sweep value), score all estimators, optionally save CSV.

    Records come back in deterministic order regardless of thread count.
    """
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda t: _run_trial(config, filter_config, t),
                                   range(config.trials)))
    else:
        chunks = [_run_trial(config, filter_config, t) for t in range(config.trials)]
    records = [rec for chunk in chunks for rec in chunk]
    sweep_pos = {v: i for i, v in enumerate(config.sweep)}
    est_pos = {e: i for i, e in enumerate(ESTIMATOR_ORDER)}
    if config.experiment_id == "vary_N":
        records.sort(key=lambda r: (r.param_value, r.trial, est_pos[r.estimator]))
    else:
        records.sort(key=lambda r: (sweep_pos.get(r.param_value, r.param_value),
                                    r.trial, est_pos[r.estimator]))
    if csv_path is not None:
        write_records_csv(records, csv_path)
    return records


def write_records_csv(records, path, append: bool = False) -> None:
    path = Path(path)
    fresh = not (append and path.exists())
    with path.open("a" if append else "w", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([
                rec.experiment_id,
                rec.experiment_type,
                rec.trial,
                rec.param_name,
                repr(rec.param_value) if isinstance(rec.param_value, float) else rec.param_value,
                rec.estimator,
                repr(rec.error_ak),
                repr(rec.error_tv),
                rec.rounds,
                rec.stop_reason,
                rec.runtime_ms,
                rec.seed,
            ])


def load_experiment_config(path):
    """Read the JSON config file; returns (ExperimentConfig, FilterConfig or None)."""
    doc = json.loads(Path(path).read_text())
    filter_doc = doc.pop("filter", None)
    solver_doc = doc.pop("solver", None)
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    config = ExperimentConfig(**{k: (tuple(v) if k == "sweep" else v) for k, v in doc.items()})
    filter_config = None
    if filter_doc or solver_doc:
        from .knorm import SolverConfig

        solver = SolverConfig(ell=config.ell, **(solver_doc or {}))
        filter_config = FilterConfig(solver=solver, **(filter_doc or {}))
    return config, filter_config
