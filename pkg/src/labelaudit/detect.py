"""The two training-free corrupted-label detectors and their multi-epoch
orchestration.

``vote``: flag an instance when the majority class of its neighborhood soft
label disagrees with its noisy label (ties broken uniformly at random).

``rank``: within each noisy class, score every instance by the cosine between
its soft label and that class's one-hot vector, then flag the lowest-scoring
head. The head size per class comes from the estimated probability that the
class's noisy labels are clean.

The pipeline repeats detection for several epochs (fresh tie-break draws and,
optionally, feature jitter per epoch) and keeps the strict majority.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import DetectionReport, LabeledDataset, majority_flags
from .errors import ConfigError, DataError
from .hoc import NoiseModel, consensus_stats, fit_noise_model, posterior_clean
from .knn import build_index, knn_soft_labels, perturb_features
from .rng import substream

METHODS = ("vote", "rank")
NOISE_SOURCES = ("hoc", "given")


@dataclass
class DetectorConfig:
    """Full configuration of one detection run (defaults: k=10, 21 epochs)."""

    method: str = "vote"
    k: int = 10
    epochs: int = 21
    seed: int = 0
    weighting: str = "uniform"
    jitter_sigma: float = 0.0
    noise_source: str = "hoc"
    noise_model: NoiseModel | None = None
    include_self: bool = True
    hoc_restarts: int = 10
    threads: int = 1
    backend: str = "auto"

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.noise_source not in NOISE_SOURCES:
            raise ConfigError(
                f"unknown noise_source {self.noise_source!r}; expected one of {NOISE_SOURCES}"
            )
        if self.epochs < 1 or self.epochs % 2 == 0:
            raise ConfigError(f"epochs must be odd and >= 1, got {self.epochs}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.jitter_sigma < 0:
            raise ConfigError(f"jitter sigma must be >= 0, got {self.jitter_sigma}")
        if self.method == "rank" and self.noise_source == "given" and self.noise_model is None:
            raise ConfigError("noise_source='given' requires a noise model")
        if self.method == "rank" and self.noise_source == "hoc" and self.k < 2:
            raise ConfigError("rank detection with estimated noise needs k >= 2")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def echo(self) -> dict:
        """Configuration as recorded in reports.

        Execution-only knobs (threads, backend) are excluded: they cannot
        change results, and reports must be byte-identical across them.
        """
        return {
            "method": self.method,
            "k": self.k,
            "epochs": self.epochs,
            "seed": self.seed,
            "weighting": self.weighting,
            "jitter_sigma": self.jitter_sigma,
            "noise_source": self.noise_source,
            "include_self": self.include_self,
            "hoc_restarts": self.hoc_restarts,
        }


@dataclass
class ClassPartition:
    """Indices of each noisy class: ``members[j]`` lists the instances with
    noisy label j, ascending; ``counts[j]`` is their number."""

    members: list = field(default_factory=list)
    counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


def class_partition(noisy_labels, n_classes: int) -> ClassPartition:
    labels = np.asarray(noisy_labels, dtype=np.int64)
    members = [np.flatnonzero(labels == j) for j in range(n_classes)]
    counts = np.asarray([m.size for m in members], dtype=np.int64)
    return ClassPartition(members=members, counts=counts)


def vote_detect(soft_labels, noisy_labels, rng: np.random.Generator) -> np.ndarray:
    """Majority-vote detection: corrupted iff the argmax class of the soft
    label differs from the noisy label, argmax ties broken uniformly at
    random from ``rng``."""
    soft = np.asarray(soft_labels, dtype=np.float64)
    labels = np.asarray(noisy_labels, dtype=np.int64)
    if soft.shape[0] != labels.shape[0]:
        raise DataError("soft labels and noisy labels disagree on N")
    top = soft.argmax(axis=1)
    is_tie = (soft == soft.max(axis=1, keepdims=True)).sum(axis=1) > 1
    for n in np.flatnonzero(is_tie):
        top[n] = rng.choice(np.flatnonzero(soft[n] == soft[n].max()))
    return top != labels


def cosine_score(soft_label, j: int) -> float:
    """Cosine between a soft label and the one-hot vector of class j:
    ``soft[j] / ||soft||``. Higher means the label looks cleaner."""
    y = np.asarray(soft_label, dtype=np.float64)
    norm = np.linalg.norm(y)
    if norm == 0.0:
        raise DataError("cannot score a zero soft-label vector")
    return float(y[j] / norm)


def own_class_scores(soft_labels, noisy_labels) -> np.ndarray:
    """Vectorized ``cosine_score`` of every instance against its own noisy class."""
    soft = np.asarray(soft_labels, dtype=np.float64)
    labels = np.asarray(noisy_labels, dtype=np.int64)
    norms = np.linalg.norm(soft, axis=1)
    if (norms == 0.0).any():
        raise DataError("cannot score a zero soft-label vector")
    return soft[np.arange(soft.shape[0]), labels] / norms


def rank_detect(soft_labels, noisy_labels, posterior, n_classes: int | None = None):
    """Per-class low-score filtering.

    Within each noisy class j, instances are sorted by ascending cosine score
    (ties toward the smaller original index) and the first
    ``floor((1 - posterior[j]) * N_j)`` are flagged as corrupted.

    Returns ``(flags, scores, head_sizes)``.
    """
    labels = np.asarray(noisy_labels, dtype=np.int64)
    posterior = np.asarray(posterior, dtype=np.float64)
    k_classes = posterior.shape[0] if n_classes is None else int(n_classes)
    if posterior.shape != (k_classes,):
        raise DataError("posterior must have one entry per class")
    if (posterior < 0).any() or (posterior > 1).any():
        warnings.warn("posterior outside [0, 1]; clipping", RuntimeWarning, stacklevel=2)
        posterior = np.clip(posterior, 0.0, 1.0)

    scores = own_class_scores(soft_labels, labels)
    partition = class_partition(labels, k_classes)
    flags = np.zeros(labels.shape[0], dtype=bool)
    head_sizes = np.zeros(k_classes, dtype=np.int64)
    for j in range(k_classes):
        members = partition.members[j]
        if members.size == 0:
            continue
        # 1e-9 absorbs float error in the product; exact-integer products
        # stay exact.
        head = int(math.floor((1.0 - posterior[j]) * members.size + 1e-9))
        head_sizes[j] = head
        if head == 0:
            continue
        # Stable ascending sort over members (already ascending by index)
        # breaks score ties toward the smaller original index.
        order = np.argsort(scores[members], kind="stable")
        flags[members[order[:head]]] = True
    return flags, scores, head_sizes


def run_pipeline(dataset: LabeledDataset, config: DetectorConfig) -> DetectionReport:
    """Multi-epoch detection over a labeled dataset.

    Each epoch optionally jitters the features, rebuilds the k-NN soft
    labels, and runs the configured detector; the final flag per instance is
    the strict majority across epochs. Everything is deterministic given the
    seed: per-epoch randomness comes from named sub-streams.

    In rank mode the noise model is estimated once when features are static
    (no jitter) and per epoch otherwise; a user-supplied model is used as-is.
    """
    config.validate()
    if config.k >= dataset.n_points:
        raise ConfigError(f"k={config.k} requires more than k points, got {dataset.n_points}")
    if config.noise_model is not None and config.noise_model.n_classes != dataset.n_classes:
        raise ConfigError(
            f"noise model has {config.noise_model.n_classes} classes, dataset has {dataset.n_classes}"
        )

    n, m = dataset.n_points, config.epochs
    per_epoch = np.zeros((m, n), dtype=bool)
    score_sum = np.zeros(n, dtype=np.float64)
    thresholds = None
    model = config.noise_model if config.noise_source == "given" else None
    static_features = config.jitter_sigma == 0.0

    index = None
    soft = None
    for epoch in range(m):
        if index is None or not static_features:
            feats = dataset.features
            if not static_features:
                feats = perturb_features(
                    feats, config.jitter_sigma, substream(config.seed, "jitter", epoch)
                )
            index = build_index(
                feats, config.k, threads=config.threads, backend=config.backend
            )
            soft = knn_soft_labels(
                index,
                dataset.noisy_labels,
                dataset.n_classes,
                include_self=config.include_self,
                weighting=config.weighting,
            )
        if config.method == "vote":
            per_epoch[epoch] = vote_detect(
                soft, dataset.noisy_labels, substream(config.seed, "vote", epoch)
            )
        else:
            if config.noise_source == "hoc" and (model is None or not static_features):
                stats = consensus_stats(index, dataset.noisy_labels, dataset.n_classes)
                model = fit_noise_model(
                    stats,
                    dataset.n_classes,
                    restarts=config.hoc_restarts,
                    seed=substream(config.seed, "hoc", epoch),
                )
            flags, scores, thresholds = rank_detect(
                soft, dataset.noisy_labels, posterior_clean(model), dataset.n_classes
            )
            per_epoch[epoch] = flags
            score_sum += scores

    return DetectionReport(
        flags=majority_flags(per_epoch),
        per_epoch_flags=per_epoch,
        noisy_labels=dataset.noisy_labels,
        config_echo=config.echo(),
        scores=score_sum / m if config.method == "rank" else None,
        thresholds=thresholds,
        noise_model=model,
    )
