"""Shared builders for synthetic datasets and independent oracles."""
import numpy as np
import pytest


def gaussian_mixture(n_per_class, n_classes, dim, separation, seed):
    """Unit-variance Gaussian clusters with pairwise mean distance
    ``separation``; means sit on orthogonal axes so the distance is exact.

    Returns (features, labels) with labels grouped by class.
    """
    assert n_classes <= dim
    rng = np.random.default_rng(seed)
    means = np.zeros((n_classes, dim))
    for c in range(n_classes):
        means[c, c] = separation / np.sqrt(2.0)
    features = np.concatenate(
        [means[c] + rng.standard_normal((n_per_class, dim)) for c in range(n_classes)]
    )
    labels = np.repeat(np.arange(n_classes), n_per_class)
    return features, labels


def naive_knn(normalized, k):
    """O(N^2) double-loop reference k-NN over pre-normalized rows.

    Dot products accumulate strictly left to right in plain Python floats, so
    a correct implementation must reproduce them bit for bit. Per-row sort by
    (similarity descending, index ascending), self excluded.
    """
    x = np.asarray(normalized, dtype=np.float64)
    n, d = x.shape
    ids = np.empty((n, k), dtype=np.int64)
    sims = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        row = []
        for j in range(n):
            if j == i:
                continue
            s = 0.0
            for dd in range(d):
                s += x[i, dd] * x[j, dd]
            row.append((s, j))
        row.sort(key=lambda t: (-t[0], t[1]))
        for pos in range(k):
            sims[i, pos], ids[i, pos] = row[pos]
    return ids, sims


def random_simplex_rows(rng, n, k_classes):
    """Rows drawn uniformly from the probability simplex."""
    return rng.dirichlet(np.ones(k_classes), size=n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
