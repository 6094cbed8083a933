"""Dataset container, CSV ingestion, z-score normalization and stratified folds."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

# Standard deviations below this are treated as degenerate: constant
# columns map to 0 instead of NaN under z-scoring.
STD_FLOOR = 1e-12

_BUNDLED = {"iris": "iris.csv", "wine": "wine.csv"}


class DataError(ValueError):
    """Raised for malformed input data or invalid dataset operations."""


@dataclass(frozen=True)
class Dataset:
    """A numeric classification dataset.

    ``labels`` holds dense integer codes indexing into ``class_set``,
    which keeps the original class identifiers in first-appearance
    order. Arrays are frozen after construction and safe to share
    across threads.
    """

    features: np.ndarray
    labels: np.ndarray
    class_set: tuple[str, ...]
    name: str = "dataset"

    def __post_init__(self):
        features = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        labels = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
        if features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise DataError(
                f"label count {labels.shape[0] if labels.ndim == 1 else '?'} "
                f"does not match feature row count {features.shape[0]}"
            )
        if not np.all(np.isfinite(features)):
            i, j = np.argwhere(~np.isfinite(features))[0]
            raise DataError(f"non-finite feature value at row {i}, column {j}")
        if len(self.class_set) < 2:
            raise DataError("a classification dataset needs at least 2 classes")
        if len(set(self.class_set)) != len(self.class_set):
            raise DataError("class_set contains duplicate identifiers")
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.class_set)):
            raise DataError("label codes out of range of class_set")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_set", tuple(str(c) for c in self.class_set))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_dims(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_set)

    @property
    def label_values(self) -> np.ndarray:
        """Labels as their original identifiers."""
        return np.asarray(self.class_set, dtype=object)[self.labels]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    @staticmethod
    def from_arrays(features, raw_labels, name: str = "dataset") -> "Dataset":
        """Build a Dataset mapping raw labels to codes in first-appearance order."""
        raw = [str(v) for v in raw_labels]
        class_set: list[str] = []
        index: dict[str, int] = {}
        codes = np.empty(len(raw), dtype=np.int64)
        for i, v in enumerate(raw):
            if v not in index:
                index[v] = len(class_set)
                class_set.append(v)
            codes[i] = index[v]
        return Dataset(np.asarray(features, dtype=np.float64), codes, tuple(class_set), name)

    def subset(self, indices, name: str | None = None) -> "Dataset":
        """Row subset sharing this dataset's class_set (codes stay stable)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[idx],
            self.labels[idx],
            self.class_set,
            name if name is not None else self.name,
        )


@dataclass(frozen=True)
class NormalizationParams:
    """Per-dimension means and (floored) sample standard deviations."""

    means: np.ndarray
    std_devs: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        stds = np.asarray(self.std_devs, dtype=np.float64)
        if means.shape != stds.shape or means.ndim != 1:
            raise DataError("means and std_devs must be 1-D vectors of equal length")
        if np.any(stds < STD_FLOOR):
            raise DataError(f"std_devs must be >= {STD_FLOOR}")
        means.setflags(write=False)
        stds.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "std_devs", stds)

    @property
    def n_dims(self) -> int:
        return self.means.shape[0]


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every sample to one of ``n_folds`` folds."""

    fold_assignments: np.ndarray
    n_folds: int
    seed: int

    def __post_init__(self):
        assignments = np.ascontiguousarray(np.asarray(self.fold_assignments, dtype=np.int64))
        if assignments.ndim != 1:
            raise DataError("fold_assignments must be a 1-D vector")
        if self.n_folds < 2:
            raise DataError("n_folds must be at least 2")
        counts = np.bincount(assignments, minlength=self.n_folds)
        if assignments.size and (assignments.min() < 0 or assignments.max() >= self.n_folds):
            raise DataError("fold index out of range")
        if np.any(counts == 0):
            raise DataError("every fold must be non-empty")
        assignments.setflags(write=False)
        object.__setattr__(self, "fold_assignments", assignments)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_assignments == fold)[0]

    def train_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_assignments != fold)[0]


def load_csv(path, label_column: int = -1, header: str | bool = "auto",
             name: str | None = None) -> Dataset:
    """Load a comma-separated dataset.

    One sample per row; all columns except ``label_column`` (default:
    last) must parse as finite real numbers. ``header`` may be True,
    False, or "auto" (treat the first row as a header when its feature
    cells do not parse as numbers). Rows are kept in file order and the
    class set in first-appearance order.
    """
    path = str(path)
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataError(f"{path}: file is empty")

    n_cols = len(rows[0])
    if n_cols < 2:
        raise DataError(f"{path}: need at least one feature column and a label column")
    label_idx = label_column if label_column >= 0 else n_cols + label_column
    if not 0 <= label_idx < n_cols:
        raise DataError(f"{path}: label column {label_column} out of range for {n_cols} columns")
    feature_idx = [j for j in range(n_cols) if j != label_idx]

    start = 0
    if header == "auto":
        start = 0 if _parses_as_floats(rows[0], feature_idx) else 1
    elif header:
        start = 1
    if start >= len(rows):
        raise DataError(f"{path}: no data rows")

    features = np.empty((len(rows) - start, len(feature_idx)), dtype=np.float64)
    raw_labels: list[str] = []
    for r, row in enumerate(rows[start:], start=start):
        line = r + 1
        if len(row) != n_cols:
            raise DataError(f"{path}: line {line} has {len(row)} columns, expected {n_cols}")
        for out_j, j in enumerate(feature_idx):
            cell = row[j].strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: line {line}, column {j + 1}: cannot parse {cell!r} as a number"
                ) from None
            if not math.isfinite(value):
                raise DataError(
                    f"{path}: line {line}, column {j + 1}: non-finite value {cell!r}"
                )
            features[r - start, out_j] = value
        label = row[label_idx].strip()
        if not label:
            raise DataError(f"{path}: line {line}: empty label")
        raw_labels.append(label)

    if len(set(raw_labels)) < 2:
        raise DataError(f"{path}: found fewer than 2 classes")
    if name is None:
        name = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return Dataset.from_arrays(features, raw_labels, name)


def _parses_as_floats(row, feature_idx) -> bool:
    for j in feature_idx:
        try:
            float(row[j])
        except ValueError:
            return False
    return True


def load_bundled(name: str) -> Dataset:
    """Load one of the small datasets shipped with the package."""
    if name not in _BUNDLED:
        raise DataError(f"no bundled dataset {name!r}; available: {sorted(_BUNDLED)}")
    ref = resources.files("ldknn.datasets").joinpath(_BUNDLED[name])
    with resources.as_file(ref) as path:
        return load_csv(path, name=name)


def fit_zscore(d: Dataset) -> NormalizationParams:
    """Per-dimension mean and sample standard deviation (n-1 denominator).

    Standard deviations are floored at ``STD_FLOOR`` so constant columns
    stay usable.
    """
    if d.n_samples < 2:
        raise DataError("z-score fitting needs at least 2 samples")
    means = d.features.mean(axis=0)
    stds = np.maximum(d.features.std(axis=0, ddof=1), STD_FLOOR)
    return NormalizationParams(means, stds)


def apply_zscore(d: Dataset, p: NormalizationParams) -> Dataset:
    """Map every value x to (x - mean) / std; labels are unchanged."""
    if p.n_dims != d.n_dims:
        raise DataError(f"normalization has {p.n_dims} dims, dataset has {d.n_dims}")
    return Dataset((d.features - p.means) / p.std_devs, d.labels, d.class_set, d.name)


def invert_zscore(d: Dataset, p: NormalizationParams) -> Dataset:
    """Inverse of :func:`apply_zscore`."""
    if p.n_dims != d.n_dims:
        raise DataError(f"normalization has {p.n_dims} dims, dataset has {d.n_dims}")
    return Dataset(d.features * p.std_devs + p.means, d.labels, d.class_set, d.name)


def make_stratified_folds(d: Dataset, n_folds: int, seed: int) -> FoldPlan:
    """Randomly assign samples to folds, stratified by class.

    Within every class the per-fold counts differ by at most one, and
    overall fold sizes stay balanced by assigning shuffled class blocks
    to folds round-robin from a running offset. Classes smaller than
    ``n_folds`` are spread as evenly as possible (with a warning).
    """
    if n_folds < 2:
        raise DataError("n_folds must be at least 2")
    if n_folds > d.n_samples:
        raise DataError(f"n_folds={n_folds} exceeds the {d.n_samples} available samples")
    rng = np.random.default_rng(seed)
    assignments = np.empty(d.n_samples, dtype=np.int64)
    position = 0
    for ci in range(d.n_classes):
        members = np.nonzero(d.labels == ci)[0]
        if 0 < members.size < n_folds:
            warnings.warn(
                f"class {d.class_set[ci]!r} has only {members.size} samples for "
                f"{n_folds} folds; spreading as evenly as possible",
                stacklevel=2,
            )
        members = rng.permutation(members)
        for member in members:
            assignments[member] = position % n_folds
            position += 1
    return FoldPlan(assignments, n_folds, seed)


def export_fold_plan(plan: FoldPlan, path) -> None:
    """Write a fold plan as ``sample_index,fold`` rows for reproducibility audits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index", "fold"])
        for i, f in enumerate(plan.fold_assignments):
            writer.writerow([i, int(f)])


def import_fold_plan(path, n_folds: int, seed: int = -1) -> FoldPlan:
    """Read a fold plan written by :func:`export_fold_plan`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    assignments = np.full(len(rows), -1, dtype=np.int64)
    for row in rows:
        assignments[int(row[0])] = int(row[1])
    if np.any(assignments < 0):
        raise DataError(f"{path}: fold plan does not cover every sample index")
    return FoldPlan(assignments, n_folds, seed)
