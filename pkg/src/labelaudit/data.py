"""Loading, validation, and persistence of features, labels, and detection
reports.

Two feature formats are supported: CSV (small, human-readable) and raw
little-endian float32 with a JSON sidecar (bulk). Raw values are widened to
float64 before any arithmetic. Reports serialize to JSON with sorted keys so
identical runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .hoc import NoiseModel
from .knn import l2_normalize_rows


def validate_features(arr, *, normalize: bool = True) -> np.ndarray:
    """Validate and (by default) L2-normalize a feature matrix.

    Rejects empty matrices, non-finite entries (reported with their row), and
    zero-norm rows when normalizing.
    """
    x = np.asarray(arr, dtype=np.float64)
    if x.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise DataError(f"feature matrix must be at least 1x1, got shape {x.shape}")
    finite = np.isfinite(x)
    if not finite.all():
        row = int(np.flatnonzero(~finite.all(axis=1))[0])
        raise DataError(f"non-finite feature value in row {row}")
    if normalize:
        return l2_normalize_rows(x)
    return np.array(x, order="C", copy=True)


def _load_csv_features(path: Path) -> np.ndarray:
    rows: list[list[float]] = []
    n_cols = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for i, record in enumerate(reader):
            if not record or all(tok.strip() == "" for tok in record):
                continue
            try:
                values = [float(tok) for tok in record]
            except ValueError:
                if i == 0:
                    continue  # optional header line
                raise DataError(f"{path}: non-numeric value at row {i}") from None
            if n_cols is None:
                n_cols = len(values)
            elif len(values) != n_cols:
                raise DataError(
                    f"{path}: row {i} has {len(values)} columns, expected {n_cols}"
                )
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no feature rows found")
    return np.asarray(rows, dtype=np.float64)


def _load_raw_features(path: Path) -> np.ndarray:
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        raise DataError(f"sidecar {sidecar} not found for raw feature file {path}")
    try:
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        rows, cols = int(meta["rows"]), int(meta["cols"])
        dtype = meta.get("dtype", "f32")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"sidecar {sidecar} is malformed: {exc}") from exc
    if dtype != "f32":
        raise DataError(f"sidecar {sidecar}: unsupported dtype {dtype!r}, expected 'f32'")
    if rows < 1 or cols < 1:
        raise DataError(f"sidecar {sidecar}: rows and cols must be >= 1")
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != rows * cols:
        raise DataError(
            f"{path} holds {raw.size} float32 values, sidecar declares {rows}x{cols}={rows * cols}"
        )
    return raw.astype(np.float64).reshape(rows, cols)


def load_features(path, fmt: str | None = None, *, normalize: bool = True) -> np.ndarray:
    """Load a feature matrix from CSV or raw float32 + sidecar.

    The format is inferred from the extension (.csv vs .f32) unless given
    explicitly. Returns a validated float64 matrix, row-normalized by default.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"feature file not found: {path}")
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "raw"
    if fmt == "csv":
        x = _load_csv_features(path)
    elif fmt == "raw":
        x = _load_raw_features(path)
    else:
        raise DataError(f"unknown feature format {fmt!r}; expected 'csv' or 'raw'")
    return validate_features(x, normalize=normalize)


def load_labels(path, column: str | None = None) -> np.ndarray:
    """Load class indices, one non-negative integer per line, or from a named
    CSV column when ``column`` is given."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"label file not found: {path}")
    tokens: list[tuple[int, str]] = []
    if column is not None:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or column not in reader.fieldnames:
                raise DataError(f"{path}: no column named {column!r}")
            for i, record in enumerate(reader, start=2):
                tokens.append((i, record[column]))
    else:
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                line = line.strip()
                if line:
                    tokens.append((i, line))
    if not tokens:
        raise DataError(f"{path}: no labels found")
    labels = np.empty(len(tokens), dtype=np.int64)
    for pos, (lineno, tok) in enumerate(tokens):
        try:
            value = int(tok)
        except ValueError:
            raise DataError(f"{path}: non-integer label {tok!r} at line {lineno}") from None
        if value < 0:
            raise DataError(f"{path}: negative label {value} at line {lineno}")
        labels[pos] = value
    return labels


def write_labels(labels, path) -> None:
    """One label per line, the inverse of the default ``load_labels`` format."""
    labels = np.asarray(labels, dtype=np.int64)
    Path(path).write_text("".join(f"{v}\n" for v in labels), encoding="utf-8")


def infer_n_classes(labels, n_classes: int | None = None) -> int:
    """Number of classes: max label + 1 unless overridden (and checked)."""
    labels = np.asarray(labels)
    observed = int(labels.max()) + 1
    if n_classes is None:
        return observed
    if observed > n_classes:
        raise DataError(f"label {observed - 1} exceeds declared n_classes={n_classes}")
    return int(n_classes)


@dataclass
class LabeledDataset:
    """Feature matrix plus noisy labels; clean labels optional and used only
    for evaluation."""

    features: np.ndarray            # (N, d) float64
    noisy_labels: np.ndarray        # (N,) int64, values in [0, n_classes)
    n_classes: int
    clean_labels: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.noisy_labels = np.asarray(self.noisy_labels, dtype=np.int64)
        n = self.features.shape[0]
        if self.noisy_labels.shape != (n,):
            raise DataError(
                f"{self.noisy_labels.shape[0]} labels for {n} feature rows"
            )
        if self.noisy_labels.min() < 0 or self.noisy_labels.max() >= self.n_classes:
            raise DataError(f"noisy label outside [0, {self.n_classes})")
        if self.clean_labels is not None:
            self.clean_labels = np.asarray(self.clean_labels, dtype=np.int64)
            if self.clean_labels.shape != self.noisy_labels.shape:
                raise DataError("clean labels must align with noisy labels")
            if self.clean_labels.min() < 0 or self.clean_labels.max() >= self.n_classes:
                raise DataError(f"clean label outside [0, {self.n_classes})")

    @property
    def n_points(self) -> int:
        return self.features.shape[0]


def majority_flags(per_epoch_flags: np.ndarray) -> np.ndarray:
    """Strict majority over epochs: flagged in more than half of them."""
    per_epoch_flags = np.asarray(per_epoch_flags, dtype=bool)
    m = per_epoch_flags.shape[0]
    return per_epoch_flags.sum(axis=0) * 2 > m


@dataclass(eq=False)
class DetectionReport:
    """Everything one detection run produced, JSON-serializable.

    ``flags`` is always the strict majority of ``per_epoch_flags``. The noisy
    labels are carried along so the report can be evaluated against clean
    labels later without re-reading the inputs.
    """

    flags: np.ndarray              # (N,) bool
    per_epoch_flags: np.ndarray    # (M, N) bool
    noisy_labels: np.ndarray       # (N,) int64
    config_echo: dict = field(default_factory=dict)
    scores: np.ndarray | None = None       # (N,) float64, rank mode
    thresholds: np.ndarray | None = None   # (K,) int64, rank mode
    noise_model: NoiseModel | None = None
    evaluation: dict | None = None

    def __post_init__(self):
        self.flags = np.asarray(self.flags, dtype=bool)
        self.per_epoch_flags = np.asarray(self.per_epoch_flags, dtype=bool)
        self.noisy_labels = np.asarray(self.noisy_labels, dtype=np.int64)
        if self.per_epoch_flags.ndim != 2:
            raise DataError("per_epoch_flags must be an (epochs, N) matrix")
        n = self.flags.shape[0]
        if self.per_epoch_flags.shape[1] != n or self.noisy_labels.shape != (n,):
            raise DataError("report arrays disagree on the number of instances")
        if not np.array_equal(self.flags, majority_flags(self.per_epoch_flags)):
            raise DataError("flags are not the strict majority of per_epoch_flags")
        if self.scores is not None:
            self.scores = np.asarray(self.scores, dtype=np.float64)
            if self.scores.shape != (n,):
                raise DataError("scores must have one entry per instance")
        if self.thresholds is not None:
            self.thresholds = np.asarray(self.thresholds, dtype=np.int64)

    @property
    def n_epochs(self) -> int:
        return self.per_epoch_flags.shape[0]

    def to_dict(self) -> dict:
        d = {
            "config": self.config_echo,
            "flags": self.flags.tolist(),
            "per_epoch_flags": self.per_epoch_flags.tolist(),
            "noisy_labels": self.noisy_labels.tolist(),
        }
        if self.scores is not None:
            d["scores"] = self.scores.tolist()
        if self.thresholds is not None:
            d["thresholds"] = self.thresholds.tolist()
        if self.noise_model is not None:
            d["noise_model"] = self.noise_model.to_dict()
        if self.evaluation is not None:
            d["evaluation"] = self.evaluation
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DetectionReport":
        model = d.get("noise_model")
        return cls(
            flags=np.asarray(d["flags"], dtype=bool),
            per_epoch_flags=np.asarray(d["per_epoch_flags"], dtype=bool),
            noisy_labels=np.asarray(d["noisy_labels"], dtype=np.int64),
            config_echo=d.get("config", {}),
            scores=None if d.get("scores") is None else np.asarray(d["scores"], dtype=np.float64),
            thresholds=None
            if d.get("thresholds") is None
            else np.asarray(d["thresholds"], dtype=np.int64),
            noise_model=None if model is None else NoiseModel.from_dict(model),
            evaluation=d.get("evaluation"),
        )

    def __eq__(self, other):
        if not isinstance(other, DetectionReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def dumps_stable(obj: dict) -> str:
    """JSON with sorted keys and fixed layout: identical content, identical bytes."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_report(report: DetectionReport, path) -> None:
    Path(path).write_text(dumps_stable(report.to_dict()), encoding="utf-8")


def read_report(path) -> DetectionReport:
    path = Path(path)
    if not path.exists():
        raise DataError(f"report file not found: {path}")
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from exc
    try:
        return DetectionReport.from_dict(d)
    except KeyError as exc:
        raise DataError(f"{path} is missing report field {exc}") from exc
