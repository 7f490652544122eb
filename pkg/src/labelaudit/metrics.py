"""Detection-quality metrics and the neighborhood label-purity profiler.

Precision/recall/F1 treat *corrupted* as the positive class; that is the
honest view under mild noise, where a detector that flags nothing still gets
a high clean-side F1. The clean-side numbers are reported as secondary
fields. When the data contains no corruption at all, the corrupted-side
metrics are undefined and surface as explicit nulls, never as zeros.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .knn import KnnIndex, build_index


@dataclass
class DetectionMetrics:
    """Confusion counts and derived scores for one detection run."""

    tp: int
    fp: int
    fn: int
    corrupted_total: int
    precision: float | None
    recall: float | None
    f1: float | None
    clean_precision: float | None
    clean_recall: float | None
    clean_f1: float | None

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "corrupted_total": self.corrupted_total,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "clean_precision": self.clean_precision,
            "clean_recall": self.clean_recall,
            "clean_f1": self.clean_f1,
        }


def _prf(tp: int, predicted: int, actual: int):
    precision = tp / predicted if predicted > 0 else 0.0
    recall = tp / actual
    f1 = 0.0 if tp == 0 else 2.0 / (1.0 / precision + 1.0 / recall)
    return precision, recall, f1


def detection_metrics(flags, noisy_labels, clean_labels) -> DetectionMetrics:
    """Precision, recall, and F1 of the flagged set against the true
    corruption indicator (noisy label != clean label)."""
    flags = np.asarray(flags, dtype=bool)
    noisy = np.asarray(noisy_labels, dtype=np.int64)
    clean = np.asarray(clean_labels, dtype=np.int64)
    if not flags.shape == noisy.shape == clean.shape:
        raise DataError("flags, noisy labels, and clean labels must align")

    corrupted = noisy != clean
    tp = int(np.sum(flags & corrupted))
    fp = int(np.sum(flags & ~corrupted))
    fn = int(np.sum(~flags & corrupted))
    corrupted_total = int(corrupted.sum())
    clean_total = flags.size - corrupted_total

    if corrupted_total == 0:
        precision = recall = f1 = None
    else:
        precision, recall, f1 = _prf(tp, int(flags.sum()), corrupted_total)

    if clean_total == 0:
        clean_precision = clean_recall = clean_f1 = None
    else:
        kept_clean = int(np.sum(~flags & ~corrupted))
        clean_precision, clean_recall, clean_f1 = _prf(
            kept_clean, int((~flags).sum()), clean_total
        )

    return DetectionMetrics(
        tp=tp,
        fp=fp,
        fn=fn,
        corrupted_total=corrupted_total,
        precision=precision,
        recall=recall,
        f1=f1,
        clean_precision=clean_precision,
        clean_recall=clean_recall,
        clean_f1=clean_f1,
    )


def neighbor_mismatch_rate(features, clean_labels, k: int, *, index: KnnIndex | None = None) -> float:
    """Fraction of instances whose k nearest neighbors do not all share the
    instance's clean class. 0 means perfectly clusterable at this k."""
    profile = neighbor_mismatch_profile(features, clean_labels, [k], index=index)
    return profile[0][1]


def neighbor_mismatch_profile(features, clean_labels, ks, *, index: KnnIndex | None = None):
    """Mismatch rate for each k in ``ks``, sharing one index built at max(k).

    Nested neighbor sets make the rate non-decreasing in k. Returns a list of
    (k, rate) pairs in the order given.
    """
    ks = [int(k) for k in ks]
    if not ks or min(ks) < 1:
        raise ConfigError("ks must be positive integers")
    labels = np.asarray(clean_labels, dtype=np.int64)
    if index is None:
        index = build_index(features, max(ks))
    elif index.k < max(ks):
        raise ConfigError(f"index holds {index.k} neighbors, need {max(ks)}")
    if labels.shape[0] != index.n_points:
        raise DataError("clean labels must align with features")

    mismatch = labels[index.neighbor_ids] != labels[:, None]
    return [(k, float(mismatch[:, :k].any(axis=1).mean())) for k in ks]
