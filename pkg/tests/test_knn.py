"""k-NN index construction, soft labels, and feature jitter."""
import math

import numpy as np
import pytest

from labelaudit import (
    ConfigError,
    DataError,
    KnnIndex,
    build_index,
    knn_soft_labels,
    l2_normalize_rows,
    perturb_features,
)
from labelaudit.kernels import HAVE_COMPILED

from conftest import naive_knn


def points_at_angles(degrees):
    return np.array(
        [[math.cos(math.radians(a)), math.sin(math.radians(a))] for a in degrees]
    )


class TestBuildIndex:
    def test_three_angles_k1(self):
        # 0 and 1 degree are near-duplicates; 90 degrees is closest to 1 degree.
        x = points_at_angles([0, 1, 90])
        expected_ids, expected_sims = naive_knn(l2_normalize_rows(x), 1)
        index = build_index(x, 1)
        assert np.array_equal(index.neighbor_ids, expected_ids)
        assert np.array_equal(index.neighbor_sims, expected_sims)
        assert index.neighbor_ids.ravel().tolist() == [1, 0, 1]

    def test_duplicated_points_pair_up(self, rng):
        base = rng.standard_normal((6, 4))
        x = np.concatenate([base, base])
        index = build_index(x, 1)
        for i in range(6):
            assert index.neighbor_ids[i, 0] == i + 6
            assert index.neighbor_ids[i + 6, 0] == i
        assert np.all(index.neighbor_sims >= 1.0 - 1e-9)

    def test_k_equals_n_minus_1_is_exhaustive(self, rng):
        x = rng.standard_normal((5, 3))
        index = build_index(x, 4)
        for i in range(5):
            assert sorted(index.neighbor_ids[i].tolist()) == sorted(set(range(5)) - {i})

    def test_matches_naive_oracle(self, rng):
        for trial in range(12):
            n = int(rng.integers(5, 60))
            d = int(rng.integers(1, 8))
            k = int(rng.integers(1, min(8, n - 1) + 1))
            x = rng.standard_normal((n, d))
            if trial % 3 == 0:
                x = np.round(x, 1)  # coarse values force similarity ties
                x[np.linalg.norm(x, axis=1) == 0] = 1.0
            index = build_index(x, k)
            ids, sims = naive_knn(l2_normalize_rows(x), k)
            assert np.array_equal(index.neighbor_ids, ids)
            assert np.array_equal(index.neighbor_sims, sims)

    def test_rows_sorted_and_self_excluded(self, rng):
        x = rng.standard_normal((40, 5))
        index = build_index(x, 6)
        assert np.all(np.diff(index.neighbor_sims, axis=1) <= 0)
        assert np.all(index.neighbor_ids != np.arange(40)[:, None])
        assert index.neighbor_sims.max() <= 1 + 1e-9
        assert index.neighbor_sims.min() >= -1 - 1e-9

    def test_k_out_of_range(self, rng):
        x = rng.standard_normal((10, 3))
        with pytest.raises(ConfigError):
            build_index(x, 10)
        with pytest.raises(ConfigError):
            build_index(x, 0)

    def test_zero_row_rejected(self):
        with pytest.raises(DataError):
            build_index(np.array([[1.0, 0.0], [0.0, 0.0]]), 1)

    def test_block_size_invariance(self, rng):
        x = rng.standard_normal((37, 4))
        a = build_index(x, 5)
        b = build_index(x, 5, block_rows=7)
        assert np.array_equal(a.neighbor_ids, b.neighbor_ids)
        assert np.array_equal(a.neighbor_sims, b.neighbor_sims)

    def test_thread_count_invariance(self, rng):
        x = rng.standard_normal((101, 6))
        a = build_index(x, 5, threads=1, block_rows=16)
        b = build_index(x, 5, threads=4, block_rows=16)
        assert np.array_equal(a.neighbor_ids, b.neighbor_ids)
        assert np.array_equal(a.neighbor_sims, b.neighbor_sims)

    @pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")
    def test_backends_agree_exactly(self, rng):
        x = rng.standard_normal((80, 5))
        x[40:] = x[:40]  # duplicates force exact ties
        a = build_index(x, 7, backend="compiled")
        b = build_index(x, 7, backend="numpy")
        assert np.array_equal(a.neighbor_ids, b.neighbor_ids)
        assert np.array_equal(a.neighbor_sims, b.neighbor_sims)


def manual_index(neighbor_ids, neighbor_sims=None, n_features=2):
    """Index stub for soft-label tests that fix the neighbor structure."""
    ids = np.asarray(neighbor_ids, dtype=np.int64)
    n, k = ids.shape
    sims = np.ones_like(ids, dtype=np.float64) if neighbor_sims is None else np.asarray(neighbor_sims, dtype=np.float64)
    feats = np.ones((n, n_features)) / np.sqrt(n_features)
    return KnnIndex(features=feats, neighbor_ids=ids, neighbor_sims=sims, k=k)


class TestSoftLabels:
    def test_counting_k2(self):
        # self label 0, neighbor labels 0 and 1, uniform weights
        index = manual_index([[1, 2], [0, 2], [0, 1]])
        labels = np.array([0, 0, 1])
        soft = knn_soft_labels(index, labels, 2)
        assert np.allclose(soft[0], [2 / 3, 1 / 3])

    def test_counting_k3_three_classes(self):
        index = manual_index([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])
        labels = np.array([1, 1, 2, 2])
        soft = knn_soft_labels(index, labels, 3)
        assert np.allclose(soft[0], [0.0, 0.5, 0.5])

    def test_unanimous_labels_are_one_hot(self, rng):
        x = rng.standard_normal((20, 4))
        index = build_index(x, 5)
        labels = np.full(20, 2)
        soft = knn_soft_labels(index, labels, 4)
        assert np.allclose(soft, np.tile([0, 0, 1, 0], (20, 1)))
        assert np.all(soft.argmax(axis=1) == 2)

    def test_rows_on_simplex(self, rng):
        for weighting in ("uniform", "similarity"):
            for _ in range(5):
                n = int(rng.integers(8, 40))
                x = rng.standard_normal((n, 4))
                k_classes = int(rng.integers(2, 6))
                labels = rng.integers(0, k_classes, size=n)
                index = build_index(x, int(rng.integers(1, 6)))
                soft = knn_soft_labels(index, labels, k_classes, weighting=weighting)
                assert np.allclose(soft.sum(axis=1), 1.0, atol=1e-9)
                assert soft.min() >= 0

    def test_similarity_weighting_clamps_negatives(self):
        # Neighbor 1 has positive similarity, neighbor 2 negative: only the
        # positive one and the self label may contribute.
        index = manual_index([[1, 2]] * 3, [[0.5, -0.9]] * 3)
        labels = np.array([0, 1, 2])
        soft = knn_soft_labels(index, labels, 3, weighting="similarity")
        assert np.allclose(soft[0], [1 / 1.5, 0.5 / 1.5, 0.0])

    def test_exclude_self(self):
        index = manual_index([[1, 2], [0, 2], [0, 1]])
        labels = np.array([0, 1, 1])
        soft = knn_soft_labels(index, labels, 2, include_self=False)
        assert np.allclose(soft[0], [0.0, 1.0])

    def test_all_nonpositive_similarities_fall_back_to_uniform(self):
        # Without the self term every weight clamps to zero; the row falls
        # back to uniform weighting instead of degenerating.
        index = manual_index([[1, 2]] * 3, [[-0.2, -0.8]] * 3)
        labels = np.array([0, 0, 1])
        soft = knn_soft_labels(index, labels, 2, include_self=False, weighting="similarity")
        assert np.allclose(soft[0], [0.5, 0.5])

    def test_label_length_mismatch(self):
        index = manual_index([[1], [0]])
        with pytest.raises(DataError):
            knn_soft_labels(index, np.array([0, 1, 0]), 2)


class TestPerturb:
    def test_sigma_zero_is_bitwise_copy(self, rng):
        x = rng.standard_normal((10, 6))
        out = perturb_features(x, 0.0, 7)
        assert out is not x
        assert np.array_equal(out, x)

    def test_deterministic_under_seed(self, rng):
        x = l2_normalize_rows(rng.standard_normal((10, 6)))
        a = perturb_features(x, 0.01, 42)
        b = perturb_features(x, 0.01, 42)
        assert np.array_equal(a, b)
        c = perturb_features(x, 0.01, 43)
        assert not np.array_equal(a, c)

    def test_small_sigma_preserves_direction(self, rng):
        # Unit rows plus N(0, 0.01^2) entries in 512-d tilt by
        # about 1/sqrt(1 + 0.01^2 * 512) = 0.9753 on average; frozen from
        # direct simulation over 1000 rows.
        x = l2_normalize_rows(rng.standard_normal((1000, 512)))
        out = perturb_features(x, 0.01, 0)
        cosines = np.sum(x * out, axis=1)
        assert abs(cosines.mean() - 0.9753) < 0.002

    def test_negative_sigma_rejected(self, rng):
        with pytest.raises(ConfigError):
            perturb_features(rng.standard_normal((4, 3)), -0.1, 0)
