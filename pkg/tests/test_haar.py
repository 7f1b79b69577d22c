import math

import numpy as np
import pytest

from robustbatch import haar


def test_basis_m1_matches_hand_values():
    b = haar.build_basis(1)
    expected = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    assert np.allclose(b.matrix, expected, atol=1e-12)


def test_basis_m2_third_row_is_first_detail_wavelet():
    b = haar.build_basis(2)
    assert np.allclose(b.matrix[2], np.array([1.0, -1.0, 0.0, 0.0]) / math.sqrt(2.0))


def test_basis_weights_father_mother_equal_inverse_sqrt_n():
    for m in range(0, 7):
        b = haar.build_basis(m)
        assert b.weights[0] == pytest.approx((1 << m) ** -0.5)
        if m >= 1:
            assert b.weights[1] == pytest.approx((1 << m) ** -0.5)
        assert np.all(b.weights > 0) and np.all(b.weights <= 1.0)


@pytest.mark.parametrize("m", range(0, 9))
def test_orthonormality(m):
    b = haar.build_basis(m)
    H = b.matrix
    assert np.max(np.abs(H @ H.T - np.eye(b.n))) <= 1e-10


def test_forward_of_basis_vector():
    b = haar.build_basis(2)
    y = haar.forward(b, np.array([1.0, 0.0, 0.0, 0.0]))
    assert np.allclose(y, [0.5, 0.5, 1 / math.sqrt(2), 0.0])


def test_forward_of_constant_vector_hits_father_only():
    b = haar.build_basis(4)
    y = haar.forward(b, np.full(16, 0.3))
    assert y[0] == pytest.approx(0.3 * 4.0)
    assert np.max(np.abs(y[1:])) < 1e-12


def test_forward_matches_dense_matrix_and_inverse_roundtrips():
    rng = np.random.default_rng(0)
    for m in (0, 1, 3, 5):
        b = haar.build_basis(m)
        x = rng.normal(size=b.n)
        y = haar.forward(b, x)
        assert np.allclose(y, b.matrix @ x, atol=1e-12)
        assert np.max(np.abs(haar.inverse(b, y) - x)) <= 1e-10


def test_parseval():
    rng = np.random.default_rng(1)
    b = haar.build_basis(6)
    for _ in range(20):
        x = rng.normal(size=b.n)
        assert np.linalg.norm(haar.forward(b, x)) == pytest.approx(
            np.linalg.norm(x), abs=1e-10
        )


def test_conjugation_matches_dense_and_roundtrips():
    rng = np.random.default_rng(2)
    b = haar.build_basis(4)
    A = rng.normal(size=(b.n, b.n))
    L = haar.conjugate_forward(b, A)
    assert np.allclose(L, b.matrix @ A @ b.matrix.T, atol=1e-10)
    assert np.allclose(haar.conjugate_inverse(b, L), A, atol=1e-10)


def test_weighted_norms_zero_identity_and_bounds():
    b2 = haar.build_basis(1)
    zero = haar.weighted_matrix_norms(b2, np.zeros((2, 2)))
    assert zero == {"l11_h": 0.0, "frob_sq_h": 0.0, "max_h": 0.0}
    # n=2: both weights 2^{-1/2}, so the identity gives h1^2 + h2^2 = 1
    eye = haar.weighted_matrix_norms(b2, np.eye(2))
    assert eye["l11_h"] == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    b = haar.build_basis(3)
    L = rng.normal(size=(8, 8))
    norms = haar.weighted_matrix_norms(b, L)
    assert norms["max_h"] <= norms["l11_h"]


def test_weighted_norms_rejects_wrong_shape():
    b = haar.build_basis(2)
    with pytest.raises(ValueError):
        haar.weighted_matrix_norms(b, np.zeros((3, 3)))


def test_count_sign_changes_examples():
    assert haar.count_sign_changes(np.array([1, 1, -1, -1, 1, 1, 1])) == 2
    assert haar.count_sign_changes(np.ones(7)) == 0
    with pytest.raises(ValueError):
        haar.count_sign_changes(np.array([1.0, 0.5, -1.0]))


def test_enumerate_sign_vectors_count():
    # n=4, ell=3: all change subsets allowed, 2 * 2^3 = 16 vectors
    vs = haar.enumerate_sign_vectors(4, 3)
    assert len(vs) == 16
    as_tuples = {tuple(v) for v in vs}
    assert len(as_tuples) == 16  # no duplicates

    expected = 2 * sum(math.comb(7, j) for j in range(3))
    assert len(haar.enumerate_sign_vectors(8, 2)) == expected

    with pytest.raises(ValueError):
        haar.enumerate_sign_vectors(17, 2)


def test_enumerate_respects_budget():
    for v in haar.enumerate_sign_vectors(6, 2):
        assert haar.count_sign_changes(v) <= 2


def test_sample_sign_vector_is_valid():
    rng = np.random.default_rng(4)
    for _ in range(200):
        v = haar.sample_sign_vector(64, 10, rng)
        assert set(np.unique(v)) <= {-1.0, 1.0}
        assert haar.count_sign_changes(v) <= 10


def test_sparse_representation_bound_exhaustive_small():
    # every v with <= ell sign changes transforms into at most
    # ell*log2(n) + 1 nonzero coefficients, each weighted entry at most 1
    b = haar.build_basis(3)
    for v in haar.enumerate_sign_vectors(8, 3):
        y = haar.forward(b, v)
        assert np.count_nonzero(np.abs(y) > 1e-9) <= 3 * 3 + 1
        assert np.max(b.weights * np.abs(y)) <= 1.0 + 1e-12


def test_level_index_sets_partition_rows():
    b = haar.build_basis(3)
    assert list(b.level_index_sets["father"]) == [0]
    assert list(b.level_index_sets["mother"]) == [1]
    assert list(b.level_index_sets[1]) == [2, 3]
    assert list(b.level_index_sets[2]) == [4, 5, 6, 7]
    covered = sorted(i for rows in b.level_index_sets.values() for i in rows)
    assert covered == list(range(8))
    # rows within one level share the scale weight
    assert len({b.weights[i] for i in b.level_index_sets[2]}) == 1


def test_build_basis_rejects_bad_m():
    with pytest.raises(ValueError):
        haar.build_basis(-1)
    with pytest.raises(haar.ResourceLimitError):
        haar.build_basis(15)


def test_large_basis_transforms_without_dense_matrix():
    b = haar.build_basis(14)  # largest supported size, butterfly only
    rng = np.random.default_rng(5)
    x = rng.normal(size=b.n)
    y = haar.forward(b, x)
    assert np.max(np.abs(haar.inverse(b, y) - x)) <= 1e-10
    assert np.linalg.norm(y) == pytest.approx(np.linalg.norm(x), abs=1e-9)
    with pytest.raises(haar.ResourceLimitError):
        _ = b.matrix


def test_transform_length_mismatch():
    b = haar.build_basis(3)
    with pytest.raises(ValueError):
        haar.forward(b, np.ones(7))
    with pytest.raises(ValueError):
        haar.inverse(b, np.ones(9))
