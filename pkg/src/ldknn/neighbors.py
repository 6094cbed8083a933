"""Exhaustive nearest-neighbor search and class-wise neighborhood partitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset


@dataclass(frozen=True)
class ClassNeighbors:
    """One class's members of a neighborhood, sorted by distance ascending."""

    points: np.ndarray
    distances: np.ndarray
    indices: np.ndarray

    @property
    def count(self) -> int:
        return self.distances.shape[0]


@dataclass(frozen=True)
class NeighborhoodPartition:
    """A query's nearest neighbors grouped by class.

    ``per_class`` maps class codes (indices into the training set's
    class_set) to their neighbors; only classes with at least one
    neighbor appear. ``radius`` is the k-th smallest distance; every
    stored distance is <= radius, and distance ties at the radius are
    all included, so ``total_count`` may exceed ``k_requested``.
    """

    query: np.ndarray
    per_class: dict[int, ClassNeighbors]
    k_requested: int
    radius: float

    @property
    def total_count(self) -> int:
        return sum(cn.count for cn in self.per_class.values())

    def counts(self, n_classes: int) -> np.ndarray:
        out = np.zeros(n_classes, dtype=np.int64)
        for ci, cn in self.per_class.items():
            out[ci] = cn.count
        return out

    @property
    def nearest_class(self) -> int:
        """Class of the single nearest neighbor (smallest index on exact ties)."""
        best = None
        for ci, cn in self.per_class.items():
            key = (cn.distances[0], cn.indices[0])
            if best is None or key < best[0]:
                best = (key, ci)
        return best[1]


def euclidean_distance(a, b) -> float:
    """L2 distance between two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"vector shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.sqrt(np.dot(diff, diff)))


def _as_query(query, n_dims: int) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != n_dims:
        raise ValueError(f"query has {q.shape[0]} dims, training data has {n_dims}")
    return q


def _squared_distances(features: np.ndarray, query: np.ndarray) -> np.ndarray:
    diff = features - query
    return np.einsum("ij,ij->i", diff, diff)


def _partition_from_selection(train: Dataset, query: np.ndarray, sq: np.ndarray,
                              selected: np.ndarray, k: int, radius_sq: float) -> NeighborhoodPartition:
    order = selected[np.argsort(sq[selected], kind="stable")]
    dists = np.sqrt(sq[order])
    per_class: dict[int, ClassNeighbors] = {}
    labels = train.labels[order]
    for ci in range(train.n_classes):
        mask = labels == ci
        if mask.any():
            per_class[ci] = ClassNeighbors(
                points=train.features[order[mask]],
                distances=dists[mask],
                indices=order[mask],
            )
    return NeighborhoodPartition(
        query=query,
        per_class=per_class,
        k_requested=k,
        radius=float(np.sqrt(radius_sq)),
    )


def knn_partition(train: Dataset, query, k: int) -> NeighborhoodPartition:
    """The k nearest training samples of ``query``, grouped by class.

    Exhaustive scan; every sample whose distance equals the k-th
    smallest is included, which makes the result independent of the
    training-set row order.
    """
    if not 1 <= k <= train.n_samples:
        raise ValueError(f"k={k} out of range [1, {train.n_samples}]")
    query = _as_query(query, train.n_dims)
    sq = _squared_distances(train.features, query)
    radius_sq = np.partition(sq, k - 1)[k - 1]
    selected = np.nonzero(sq <= radius_sq)[0]
    return _partition_from_selection(train, query, sq, selected, k, radius_sq)


def knn_per_class(train: Dataset, query, k: int) -> NeighborhoodPartition:
    """For each class independently, its k nearest members.

    Produces the balanced neighborhood used by centroid rules. Radius
    ties within a class are all included; ``radius`` is the largest
    per-class selection radius.
    """
    if k < 1:
        raise ValueError(f"k={k} must be positive")
    query = _as_query(query, train.n_dims)
    sq = _squared_distances(train.features, query)
    per_class: dict[int, ClassNeighbors] = {}
    radius_sq_max = 0.0
    for ci in range(train.n_classes):
        members = np.nonzero(train.labels == ci)[0]
        if members.size < k:
            raise ValueError(
                f"class {train.class_set[ci]!r} has only {members.size} samples, need k={k}"
            )
        class_sq = sq[members]
        radius_sq = np.partition(class_sq, k - 1)[k - 1]
        radius_sq_max = max(radius_sq_max, float(radius_sq))
        chosen = members[class_sq <= radius_sq]
        order = chosen[np.argsort(sq[chosen], kind="stable")]
        per_class[ci] = ClassNeighbors(
            points=train.features[order],
            distances=np.sqrt(sq[order]),
            indices=order,
        )
    return NeighborhoodPartition(
        query=query,
        per_class=per_class,
        k_requested=k,
        radius=float(np.sqrt(radius_sq_max)),
    )
