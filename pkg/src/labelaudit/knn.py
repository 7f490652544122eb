"""Exact k-nearest-neighbor search under cosine similarity, and the
neighbor-consensus soft labels built from it.

Search is brute force on purpose: at the scales this tool targets (up to a
few hundred thousand rows) blocked matrix products are fast, exact, and free
of the recall confound an approximate index would add. Each query block is a
GEMM against the full matrix (BLAS) followed by a top-k selection kernel
(compiled or numpy, see ``kernels``).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, DataError
from .rng import as_generator

WEIGHTINGS = ("uniform", "similarity")


def l2_normalize_rows(features: np.ndarray) -> np.ndarray:
    """Return a float64 copy with unit-norm rows. Zero rows are an error."""
    x = np.array(features, dtype=np.float64, order="C", copy=True)
    if x.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {x.shape}")
    norms = np.linalg.norm(x, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DataError(f"feature row {zero[0]} has zero L2 norm and cannot be normalized")
    x /= norms[:, None]
    return x


@dataclass
class KnnIndex:
    """Result of exact cosine k-NN over one feature matrix.

    ``neighbor_ids[n]`` never contains ``n`` itself; ``neighbor_sims`` rows are
    sorted non-increasing, ties resolved toward the smaller index.
    """

    features: np.ndarray        # (N, d) float64, unit rows
    neighbor_ids: np.ndarray    # (N, k) int64
    neighbor_sims: np.ndarray   # (N, k) float64
    k: int

    @property
    def n_points(self) -> int:
        return self.features.shape[0]


def build_index(
    features,
    k: int,
    *,
    block_rows: int | None = None,
    threads: int = 1,
    backend: str = "auto",
) -> KnnIndex:
    """Exact cosine k-NN by blocked matrix products with per-row top-k selection.

    Blocks are independent, so running them on ``threads`` workers changes
    nothing but wall time; each block writes its own output slice. The block
    height defaults to whatever keeps one block's similarity slab near 64 MB.
    """
    x = l2_normalize_rows(features)
    n = x.shape[0]
    if block_rows is None:
        block_rows = min(512, max(32, 8_000_000 // n))
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k!r}")
    if k >= n:
        raise ConfigError(f"k={k} requires at least k+1={k + 1} points, got {n}")

    chosen = kernels.resolve_backend(backend)
    ids = np.empty((n, k), dtype=np.int64)
    sims = np.empty((n, k), dtype=np.float64)

    def run_block(start: int) -> None:
        stop = min(start + block_rows, n)
        kernels.topk_rows(x, start, stop, k, ids[start:stop], sims[start:stop], chosen)

    starts = range(0, n, block_rows)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_block, starts))
    else:
        for start in starts:
            run_block(start)

    return KnnIndex(features=x, neighbor_ids=ids, neighbor_sims=sims, k=k)


def knn_soft_labels(
    index: KnnIndex,
    noisy_labels,
    n_classes: int | None = None,
    *,
    include_self: bool = True,
    weighting: str = "uniform",
) -> np.ndarray:
    """Per-point class-frequency vectors over the point and its neighbors.

    With ``include_self`` (the default) each point contributes its own label
    alongside its k neighbors', giving k+1 observations. ``uniform`` weights
    every observation 1/(k+1); ``similarity`` weights each neighbor by its
    cosine similarity clamped at zero, with the self weight fixed at 1. Rows
    of the result lie on the probability simplex.
    """
    if weighting not in WEIGHTINGS:
        raise ConfigError(f"unknown weighting {weighting!r}; expected one of {WEIGHTINGS}")
    labels = np.asarray(noisy_labels, dtype=np.int64)
    n = index.n_points
    if labels.shape != (n,):
        raise DataError(f"labels have shape {labels.shape}, expected ({n},)")
    k_classes = int(labels.max()) + 1 if n_classes is None else int(n_classes)
    if labels.min() < 0 or labels.max() >= k_classes:
        raise DataError("label outside [0, n_classes)")

    if include_self:
        member_ids = np.concatenate([np.arange(n)[:, None], index.neighbor_ids], axis=1)
        member_sims = np.concatenate(
            [np.ones((n, 1)), np.clip(index.neighbor_sims, 0.0, None)], axis=1
        )
    else:
        member_ids = index.neighbor_ids
        member_sims = np.clip(index.neighbor_sims, 0.0, None)

    if weighting == "uniform":
        weights = np.full(member_ids.shape, 1.0 / member_ids.shape[1])
    else:
        totals = member_sims.sum(axis=1)
        # All-nonpositive neighborhoods (possible only without the self term)
        # fall back to uniform weights rather than a zero row.
        dead = totals == 0.0
        if dead.any():
            member_sims = member_sims.copy()
            member_sims[dead] = 1.0
            totals = member_sims.sum(axis=1)
        weights = member_sims / totals[:, None]

    soft = np.zeros((n, k_classes), dtype=np.float64)
    rows = np.repeat(np.arange(n), member_ids.shape[1])
    np.add.at(soft, (rows, labels[member_ids].ravel()), weights.ravel())
    return soft


def perturb_features(features, sigma: float, seed) -> np.ndarray:
    """Add i.i.d. Gaussian jitter per entry and re-normalize rows.

    ``sigma=0`` returns a bitwise-equal copy so the pipeline's jitter-free
    path stays exactly reproducible.
    """
    if sigma < 0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}")
    x = np.array(features, dtype=np.float64, copy=True)
    if sigma == 0:
        return x
    rng = as_generator(seed)
    x += rng.normal(0.0, sigma, size=x.shape)
    return l2_normalize_rows(x)
