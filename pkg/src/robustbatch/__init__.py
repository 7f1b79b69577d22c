"""Robust estimation of discrete distributions from corrupted sample batches."""

from .types import (
    BatchDataset,
    DegenerateWeightsError,
    FrequencyVector,
    GroundTruth,
    Histogram,
    ShapeParams,
    WeightVector,
    frequency_from_counts,
    load_dataset,
    save_dataset,
    uniform_weights,
    weighted_mean,
)
from .haar import HaarBasis, build_basis, count_sign_changes, enumerate_sign_vectors
from .knorm import SolverConfig, SolverReport, TestMatrix, brute_force_k_norm, k_norm, project_K
from .filtering import (
    FilterConfig,
    FilterState,
    MomentMatrices,
    compute_B,
    compute_M,
    compute_scores,
    learn_with_filter,
    one_d_filter,
)
from .shape import ak_distance, fit_piecewise_constant, round_to_distribution
from .synth import (
    AdversaryParams,
    adversarial_target,
    generate_corrupted_dataset,
    random_arbitrary_mu,
    random_piecewise_mu,
    sample_multinomial,
)
from .harness import (
    ExperimentConfig,
    ExperimentRecord,
    estimator_naive,
    estimator_oracle,
    run_experiment,
)

__version__ = "0.1.0"
