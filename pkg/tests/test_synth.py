import numpy as np
import pytest

from robustbatch import synth
from robustbatch.filtering import compute_B
from robustbatch.shape import fit_piecewise_constant
from robustbatch.types import Histogram


def test_random_arbitrary_mu_normalized_and_reproducible():
    mu1 = synth.random_arbitrary_mu(32, np.random.default_rng(7))
    mu2 = synth.random_arbitrary_mu(32, np.random.default_rng(7))
    assert mu1.probs.sum() == pytest.approx(1.0)
    assert np.array_equal(mu1.probs, mu2.probs)


def test_random_arbitrary_mu_mean_entry():
    rng = np.random.default_rng(8)
    draws = np.stack([synth.random_arbitrary_mu(16, rng).probs for _ in range(2000)])
    # each entry averages ~1/n; 3 standard errors of the observed spread
    se = draws.std(axis=0).max() / np.sqrt(len(draws))
    assert np.max(np.abs(draws.mean(axis=0) - 1 / 16)) < 3 * se + 1e-3


def test_random_piecewise_mu_structure():
    rng = np.random.default_rng(9)
    mu = synth.random_piecewise_mu(64, 5, rng)
    fitted, _ = fit_piecewise_constant(mu.probs, 5)
    assert np.allclose(fitted, mu.probs, atol=1e-12)
    segments = 1 + np.count_nonzero(np.diff(mu.probs))
    assert segments <= 5

    uniform = synth.random_piecewise_mu(16, 1, rng)
    assert np.allclose(uniform.probs, 1 / 16)


def test_adversarial_target_example():
    mu = Histogram(np.array([0.1, 0.2, 0.3, 0.4]))
    nu = synth.adversarial_target(mu, 0.2)
    assert np.allclose(nu.probs, [0.2, 0.3, 0.2, 0.3])
    assert 0.5 * np.abs(nu.probs - mu.probs).sum() == pytest.approx(0.2, abs=1e-12)


def test_adversarial_target_zero_delta_and_resample_signal():
    mu = Histogram(np.array([0.1, 0.2, 0.3, 0.4]))
    assert synth.adversarial_target(mu, 0.0) is mu
    # an entry of the upper half smaller than the decrement forces a resample
    tight = Histogram(np.array([0.05, 0.1, 0.15, 0.7]))
    assert synth.adversarial_target(tight, 0.4) is None


def test_adversarial_target_exact_distance_when_valid():
    rng = np.random.default_rng(10)
    for _ in range(50):
        mu, nu = synth.sample_adversarial_pair(16, 0.4, rng)
        tv = 0.5 * np.abs(mu.probs - nu.probs).sum()
        assert tv == pytest.approx(0.4, abs=1e-12)


def test_sample_multinomial_point_mass():
    mu = Histogram(np.array([0.0, 1.0, 0.0]))
    x = synth.sample_multinomial(mu, 5, np.random.default_rng(0))
    assert np.allclose(x.freqs, [0.0, 1.0, 0.0])


def test_generate_corrupted_dataset_counts_and_reproducibility():
    mu = Histogram(np.full(8, 1 / 8))
    nu = synth.adversarial_target(mu, 0.2)
    data = synth.generate_corrupted_dataset(mu, nu, 10, 0.25, 50, np.random.default_rng(3))
    assert data.N == 10
    assert len(data.ground_truth.corrupted_indices) == 3  # 10 - floor(7.5)

    again = synth.generate_corrupted_dataset(mu, nu, 10, 0.25, 50, np.random.default_rng(3))
    assert np.array_equal(data.frequency_matrix(), again.frequency_matrix())
    assert data.ground_truth.corrupted_indices == again.ground_truth.corrupted_indices

    clean = synth.generate_corrupted_dataset(mu, nu, 10, 0.0, 50, np.random.default_rng(3))
    assert clean.ground_truth.corrupted_indices == frozenset()


def test_clean_batch_count_float_guard():
    assert synth.clean_batch_count(10, 0.25) == 7
    assert synth.clean_batch_count(10, 0.3) == 7
    assert synth.clean_batch_count(20, 0.2) == 16
    assert synth.clean_batch_count(62, 0.4) == 37


def test_corrupted_batches_drawn_from_nu():
    # with delta far from mu, corrupted batch frequencies track nu
    rng = np.random.default_rng(11)
    mu = Histogram(np.array([0.7, 0.1, 0.1, 0.1]))
    nu = Histogram(np.array([0.1, 0.1, 0.1, 0.7]))
    data = synth.generate_corrupted_dataset(mu, nu, 40, 0.45, 400, rng)
    bad = sorted(data.ground_truth.corrupted_indices)
    bad_mean = data.frequency_matrix()[bad].mean(axis=0)
    assert np.abs(bad_mean - nu.probs).max() < 0.08


def test_multinomial_moments_match_exact_covariance():
    # statistical check of the sampler against the closed-form mean/covariance
    rng = np.random.default_rng(12)
    mu = synth.random_arbitrary_mu(8, rng)
    k = 50
    draws = np.stack([synth.sample_multinomial(mu, k, rng).freqs for _ in range(60000)])
    assert np.max(np.abs(draws.mean(axis=0) - mu.probs)) < 5e-4
    emp_cov = np.cov(draws.T, bias=True)
    assert np.max(np.abs(emp_cov - compute_B(mu, k))) < 5e-4


def test_batch_perturbation_hook():
    # per-batch honest drift: each clean batch may come from its own nearby
    # distribution; the hook receives (mu, rng) and returns the batch source
    def drift(mu, rng):
        probs = mu.probs.copy()
        probs[0] += 0.01
        probs[1] -= 0.01
        return Histogram(probs)

    mu = Histogram(np.array([0.25, 0.25, 0.25, 0.25]))
    nu = Histogram(np.array([0.55, 0.15, 0.15, 0.15]))
    rng = np.random.default_rng(13)
    data = synth.generate_corrupted_dataset(mu, nu, 200, 0.0, 2000, rng,
                                            batch_perturbation=drift)
    mean = data.frequency_matrix().mean(axis=0)
    assert mean[0] - mean[1] > 0.01  # the drift shows up in the aggregate

    again = synth.generate_corrupted_dataset(mu, nu, 200, 0.0, 2000,
                                             np.random.default_rng(13),
                                             batch_perturbation=drift)
    assert np.array_equal(data.frequency_matrix(), again.frequency_matrix())


def test_adversary_params_validation():
    with pytest.raises(ValueError):
        synth.AdversaryParams(delta_adv=0.5, eps=0.6)
    with pytest.raises(ValueError):
        synth.AdversaryParams(delta_adv=1.5, eps=0.1)
