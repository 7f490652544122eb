"""Synthetic label-noise injectors for benchmarking the detectors.

Three generators over clean labels:

* symmetric: flip with probability eta to a uniformly random other class;
* asymmetric: flip with probability eta to the cyclic successor class;
* instance: flip with a per-instance rate drawn around eta, toward classes
  favored by a random projection of the instance's features.

``eta=0`` always short-circuits to an identical copy.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import truncnorm

from .errors import ConfigError, DataError
from .rng import as_generator

NOISE_KINDS = ("symmetric", "asymmetric", "instance")

# Spread of the per-instance corruption rate around eta in the
# instance-dependent generator.
INSTANCE_RATE_STD = 0.1


@dataclass
class NoiseSpec:
    """Which injector to run and with what overall corruption ratio.

    ``rate_std`` only affects the instance-dependent kind: it is the spread
    of the per-instance corruption rate around eta.
    """

    kind: str
    eta: float
    seed: int = 0
    rate_std: float = INSTANCE_RATE_STD

    def validate(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not 0.0 <= self.eta < 1.0:
            raise ConfigError(f"eta must be in [0, 1), got {self.eta}")
        if self.rate_std <= 0.0:
            raise ConfigError(f"rate_std must be positive, got {self.rate_std}")
        if self.kind == "asymmetric" and self.eta >= 0.5:
            warnings.warn(
                "asymmetric noise with eta >= 0.5 makes the flipped class the majority",
                RuntimeWarning,
                stacklevel=2,
            )


def _check_labels(labels, n_classes: int) -> np.ndarray:
    if n_classes < 2:
        raise ConfigError(f"label noise needs at least 2 classes, got {n_classes}")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.size == 0:
        raise DataError("labels must be a non-empty 1-D vector")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise DataError(f"label outside [0, {n_classes})")
    return labels


def inject_symmetric(labels, n_classes: int, eta: float, seed) -> np.ndarray:
    """Flip each label with probability eta to a uniform choice among the
    other n_classes - 1 classes."""
    labels = _check_labels(labels, n_classes)
    if eta == 0.0:
        return labels.copy()
    rng = as_generator(seed)
    flip = rng.random(labels.size) < eta
    offsets = rng.integers(1, n_classes, size=labels.size)
    noisy = labels.copy()
    noisy[flip] = (labels[flip] + offsets[flip]) % n_classes
    return noisy


def inject_asymmetric(labels, n_classes: int, eta: float, seed) -> np.ndarray:
    """Flip each label i with probability eta to its cyclic successor
    (i + 1) mod n_classes."""
    labels = _check_labels(labels, n_classes)
    if eta == 0.0:
        return labels.copy()
    rng = as_generator(seed)
    flip = rng.random(labels.size) < eta
    noisy = labels.copy()
    noisy[flip] = (labels[flip] + 1) % n_classes
    return noisy


def inject_instance_dependent(
    features, labels, n_classes: int, eta: float, seed, rate_std: float = INSTANCE_RATE_STD
) -> np.ndarray:
    """Feature-dependent flips.

    Per class c a random d x K projection matrix W_c is drawn once. Each
    instance draws its own corruption rate q ~ Normal(eta, rate_std^2)
    truncated to [0, 1], projects its features through W of its clean class,
    and flips to a wrong class with probability q, distributed as the softmax
    of the wrong classes' projection values. Truncation biases the realized
    overall rate slightly toward 1/2 when eta is near 0 or 1; at rate_std=0.1
    the bias is far below the 0.02 the tests allow.
    """
    labels = _check_labels(labels, n_classes)
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != labels.size:
        raise DataError("features must be (N, d) and row-aligned with labels")
    if eta == 0.0:
        return labels.copy()
    rng = as_generator(seed)
    n, d = x.shape

    projections = rng.standard_normal((n_classes, d, n_classes))
    lo, hi = (0.0 - eta) / rate_std, (1.0 - eta) / rate_std
    rates = truncnorm.rvs(lo, hi, loc=eta, scale=rate_std, size=n, random_state=rng)

    scores = np.empty((n, n_classes), dtype=np.float64)
    for c in range(n_classes):
        rows = labels == c
        if rows.any():
            scores[rows] = x[rows] @ projections[c]
    scores[np.arange(n), labels] = -np.inf

    # Softmax over the wrong classes only; exp(-inf) contributes 0.
    scores -= scores.max(axis=1, keepdims=True)
    wrong = np.exp(scores)
    wrong /= wrong.sum(axis=1, keepdims=True)
    probs = wrong * rates[:, None]
    probs[np.arange(n), labels] = 1.0 - rates

    cumulative = np.cumsum(probs, axis=1)
    cumulative[:, -1] = 1.0  # guard against rounding shortfall in the last bin
    draws = rng.random(n)
    return (draws[:, None] >= cumulative).sum(axis=1).astype(np.int64)


def inject(spec: NoiseSpec, labels, n_classes: int, features=None) -> np.ndarray:
    """Dispatch a NoiseSpec to the matching injector."""
    spec.validate()
    if spec.kind == "symmetric":
        return inject_symmetric(labels, n_classes, spec.eta, spec.seed)
    if spec.kind == "asymmetric":
        return inject_asymmetric(labels, n_classes, spec.eta, spec.seed)
    if features is None:
        raise ConfigError("instance-dependent noise requires the feature matrix")
    return inject_instance_dependent(
        features, labels, n_classes, spec.eta, spec.seed, rate_std=spec.rate_std
    )
