"""Synthetic noise injectors: realized rates, target distributions, determinism."""
import numpy as np
import pytest
from scipy.stats import chisquare

from labelaudit import (
    ConfigError,
    DataError,
    NoiseSpec,
    inject,
    inject_asymmetric,
    inject_instance_dependent,
    inject_symmetric,
)


@pytest.fixture
def clean_labels():
    return np.random.default_rng(0).integers(0, 10, size=100_000)


class TestSymmetric:
    def test_eta_zero_is_identity(self, clean_labels):
        out = inject_symmetric(clean_labels, 10, 0.0, 1)
        assert out is not clean_labels
        assert np.array_equal(out, clean_labels)

    def test_realized_rate_and_uniform_targets(self, clean_labels):
        out = inject_symmetric(clean_labels, 10, 0.6, 1)
        flipped = out != clean_labels
        assert abs(flipped.mean() - 0.6) < 0.01
        # flips land uniformly on the other 9 classes
        offsets = (out[flipped] - clean_labels[flipped]) % 10
        counts = np.bincount(offsets, minlength=10)[1:]
        assert chisquare(counts).pvalue > 1e-3

    def test_binary_flip_is_complement(self):
        clean = np.random.default_rng(2).integers(0, 2, size=5_000)
        out = inject_symmetric(clean, 2, 0.3, 3)
        flipped = out != clean
        assert np.array_equal(out[flipped], 1 - clean[flipped])
        assert abs(flipped.mean() - 0.3) < 0.02

    def test_needs_two_classes(self):
        with pytest.raises(ConfigError):
            inject_symmetric(np.zeros(5, dtype=int), 1, 0.1, 0)


class TestAsymmetric:
    def test_eta_zero_is_identity(self, clean_labels):
        assert np.array_equal(inject_asymmetric(clean_labels, 10, 0.0, 1), clean_labels)

    def test_flips_go_to_successor(self, clean_labels):
        out = inject_asymmetric(clean_labels, 10, 0.3, 1)
        flipped = out != clean_labels
        assert abs(flipped.mean() - 0.3) < 0.01
        assert np.array_equal(out[flipped], (clean_labels[flipped] + 1) % 10)

    def test_near_one_flips_almost_everything(self):
        clean = np.random.default_rng(4).integers(0, 5, size=100_000)
        out = inject_asymmetric(clean, 5, 0.999, 5)
        to_successor = out == (clean + 1) % 5
        assert to_successor.mean() >= 0.997

    def test_wraparound(self):
        clean = np.full(1000, 2)
        out = inject_asymmetric(clean, 3, 0.999, 6)
        assert set(np.unique(out)) <= {0, 2}
        assert (out == 0).mean() > 0.99


class TestInstanceDependent:
    def test_eta_zero_is_identity(self, rng):
        x = rng.standard_normal((50, 4))
        labels = rng.integers(0, 3, size=50)
        assert np.array_equal(inject_instance_dependent(x, labels, 3, 0.0, 0), labels)

    def test_realized_rate(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((100_000, 10))
        labels = rng.integers(0, 4, size=100_000)
        out = inject_instance_dependent(x, labels, 4, 0.4, 8)
        assert abs(np.mean(out != labels) - 0.4) < 0.02

    def test_deterministic_under_seed(self, rng):
        x = rng.standard_normal((200, 5))
        labels = rng.integers(0, 3, size=200)
        a = inject_instance_dependent(x, labels, 3, 0.3, 9)
        b = inject_instance_dependent(x, labels, 3, 0.3, 9)
        assert np.array_equal(a, b)

    def test_identical_rows_share_flip_distribution(self):
        # All rows identical with the same clean label: the two halves see
        # the same flip distribution, so their empirical target histograms
        # must agree.
        n = 40_000
        x = np.tile(np.linspace(0.1, 1.0, 8), (n, 1))
        labels = np.zeros(n, dtype=np.int64)
        out = inject_instance_dependent(x, labels, 5, 0.5, 10)
        first = np.bincount(out[: n // 2], minlength=5) / (n // 2)
        second = np.bincount(out[n // 2 :], minlength=5) / (n // 2)
        assert np.abs(first - second).max() < 0.02

    def test_feature_alignment_checked(self, rng):
        with pytest.raises(DataError):
            inject_instance_dependent(rng.standard_normal((5, 2)), np.zeros(6, dtype=int), 2, 0.2, 0)


class TestDispatch:
    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            inject(NoiseSpec(kind="nope", eta=0.1), np.zeros(4, dtype=int), 2)
        with pytest.raises(ConfigError):
            inject(NoiseSpec(kind="symmetric", eta=1.0), np.zeros(4, dtype=int), 2)

    def test_asymmetric_high_eta_warns(self):
        labels = np.random.default_rng(0).integers(0, 3, size=100)
        with pytest.warns(RuntimeWarning, match="majority"):
            inject(NoiseSpec(kind="asymmetric", eta=0.6, seed=0), labels, 3)

    def test_instance_requires_features(self):
        with pytest.raises(ConfigError, match="feature"):
            inject(NoiseSpec(kind="instance", eta=0.2), np.zeros(4, dtype=int), 2)

    def test_outputs_in_range_and_aligned(self, rng):
        for kind in ("symmetric", "asymmetric", "instance"):
            for _ in range(5):
                n = int(rng.integers(3, 200))
                k_classes = int(rng.integers(2, 7))
                eta = float(rng.uniform(0, 0.45))
                labels = rng.integers(0, k_classes, size=n)
                features = rng.standard_normal((n, 3))
                out = inject(
                    NoiseSpec(kind=kind, eta=eta, seed=int(rng.integers(1000))),
                    labels,
                    k_classes,
                    features=features,
                )
                assert out.shape == labels.shape
                assert out.min() >= 0 and out.max() < k_classes
