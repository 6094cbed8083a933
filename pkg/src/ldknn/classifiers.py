"""Decision rules built on neighborhood partitions and local density models.

All rules share one interface: ``classify(train, query, cfg)`` returns
the predicted class plus per-class decision values. The neighborhood
rules size the shared neighborhood as ``k = kpc * n_classes`` (kpc =
average neighbors per class).

Rules:

* LD_GME / LD_KDE -- score a class by (neighbor count) x (local density
  at the query), with the density from a Gaussian model or a kernel
  density fitted to that class's neighbors.
* V_KNN -- majority vote.
* DW1_KNN / DW2_KNN -- distance-weighted votes (Dudani weights, and
  Dudani weights damped by neighbor rank).
* CAP -- nearest per-class centroid over a balanced neighborhood.
* NBC_GME / NBC_KDE -- global naive-Bayes controls using the same two
  density estimators on whole classes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset
from .localdist import (
    GmeModel,
    KdeModel,
    NormalizationMode,
    SIGMA_FLOOR,
    VAR_FLOOR,
    fit_gme,
    fit_kde,
    local_normalizer,
)
from .neighbors import (
    NeighborhoodPartition,
    _as_query,
    _squared_distances,
    euclidean_distance,
    knn_partition,
    knn_per_class,
)


class Rule(str, enum.Enum):
    LD_GME = "LD_GME"
    LD_KDE = "LD_KDE"
    V_KNN = "V_KNN"
    DW1_KNN = "DW1_KNN"
    DW2_KNN = "DW2_KNN"
    CAP = "CAP"
    NBC_GME = "NBC_GME"
    NBC_KDE = "NBC_KDE"


NEIGHBORHOOD_RULES = frozenset(
    {Rule.LD_GME, Rule.LD_KDE, Rule.V_KNN, Rule.DW1_KNN, Rule.DW2_KNN, Rule.CAP}
)

# Argmax ties are broken by (1) larger neighbor count, (2) the class of
# the single nearest neighbor, (3) class_set order.
TIE_BREAK = "local_evidence"


@dataclass(frozen=True)
class DecisionRuleConfig:
    """Which rule to run and with what parameters.

    ``kpc`` is ignored by the NBC rules. ``seed`` feeds any stochastic
    component (currently only Monte-Carlo normalization carries its own
    seed; the field is kept so configs stay explicit about entropy).
    """

    rule: Rule
    kpc: int = 1
    normalization: NormalizationMode = field(default_factory=NormalizationMode.omit)
    tie_break: str = TIE_BREAK
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rule", Rule(self.rule))
        if self.rule in NEIGHBORHOOD_RULES and self.kpc < 1:
            raise ValueError("kpc must be at least 1 for neighborhood rules")
        if self.tie_break != TIE_BREAK:
            raise ValueError(f"unknown tie_break {self.tie_break!r}")


@dataclass(frozen=True)
class ClassificationResult:
    """Predicted class and the decision value for every class in class_set."""

    predicted: str
    predicted_index: int
    scores: dict[str, float]


def _argmax_tie_break(values: np.ndarray, counts: np.ndarray, nn_class: int) -> int:
    """Index of the winning class under the documented tie rule."""
    best = values.max()
    candidates = np.nonzero(values == best)[0]
    if candidates.size == 1:
        return int(candidates[0])
    max_count = counts[candidates].max()
    candidates = candidates[counts[candidates] == max_count]
    if candidates.size == 1:
        return int(candidates[0])
    if nn_class in candidates:
        return int(nn_class)
    return int(candidates[0])


def _result(train: Dataset, values: np.ndarray, counts: np.ndarray, nn_class: int,
            log_space: bool) -> ClassificationResult:
    winner = _argmax_tie_break(values, counts, nn_class)
    reported = np.exp(values) if log_space else values
    scores = {train.class_set[ci]: float(reported[ci]) for ci in range(train.n_classes)}
    return ClassificationResult(
        predicted=train.class_set[winner], predicted_index=winner, scores=scores
    )


def _shared_k(train: Dataset, cfg: DecisionRuleConfig) -> int:
    k = cfg.kpc * train.n_classes
    if k > train.n_samples:
        raise ValueError(
            f"k = kpc * n_classes = {k} exceeds the {train.n_samples} training "
            f"samples; reduce kpc"
        )
    return k


def _nearest_class(train: Dataset, query: np.ndarray) -> int:
    sq = _squared_distances(train.features, query)
    return int(train.labels[int(np.argmin(sq))])


def classify_ld(train: Dataset, query, cfg: DecisionRuleConfig, *,
                variance_override=None, bandwidth_override=None,
                balanced: bool = False) -> ClassificationResult:
    """Local-density rule: argmax over (neighbor count) x (local density).

    For each class present in the neighborhood, a local model is fitted
    to that class's neighbors, evaluated at the query, divided by its
    region normalizer, and weighted by the class's neighbor count.
    Classes absent from the neighborhood score 0.

    ``variance_override`` / ``bandwidth_override`` replace the fitted
    model's spread parameters (used to study the rule's special cases);
    ``balanced`` draws the same number of neighbors per class instead of
    one shared neighborhood.
    """
    if cfg.rule not in (Rule.LD_GME, Rule.LD_KDE):
        raise ValueError(f"classify_ld cannot run rule {cfg.rule}")
    query = _as_query(query, train.n_dims)
    if balanced:
        part = knn_per_class(train, query, cfg.kpc)
    else:
        part = knn_partition(train, query, _shared_k(train, cfg))

    values = np.full(train.n_classes, -np.inf)
    counts = np.zeros(train.n_classes, dtype=np.int64)
    for ci, cn in part.per_class.items():
        counts[ci] = cn.count
        if cfg.rule is Rule.LD_GME:
            model = fit_gme(cn.points)
            if variance_override is not None:
                model = GmeModel(
                    mean=model.mean,
                    diag_var=np.asarray(variance_override, dtype=np.float64),
                    n_support=model.n_support,
                )
        else:
            model = fit_kde(cn.points)
            if bandwidth_override is not None:
                model = KdeModel(
                    support=model.support,
                    bandwidths=np.asarray(bandwidth_override, dtype=np.float64),
                    n_support=model.n_support,
                )
        radius = float(cn.distances[-1]) if balanced else part.radius
        if radius > 0:
            normalizer = local_normalizer(model, query, radius, cfg.normalization)
        else:
            normalizer = 1.0
        values[ci] = math.log(cn.count) + model.logpdf(query) - math.log(normalizer)
    return _result(train, values, counts, part.nearest_class, log_space=True)


def classify_vknn(train: Dataset, query, cfg: DecisionRuleConfig) -> ClassificationResult:
    """Majority vote over the shared neighborhood."""
    query = _as_query(query, train.n_dims)
    part = knn_partition(train, query, _shared_k(train, cfg))
    counts = part.counts(train.n_classes)
    return _result(train, counts.astype(np.float64), counts, part.nearest_class,
                   log_space=False)


def dudani_weight(d_i: float, d_1: float, d_k: float) -> float:
    """Linear distance weight (d_k - d_i) / (d_k - d_1); 1 when d_k == d_1."""
    if not d_1 <= d_i <= d_k:
        raise ValueError(f"need d_1 <= d_i <= d_k, got {d_1}, {d_i}, {d_k}")
    if d_k == d_1:
        return 1.0
    return (d_k - d_i) / (d_k - d_1)


def dual_weight(d_i: float, d_1: float, d_k: float, rank_i: int) -> float:
    """Dudani weight damped by 1/rank; the degenerate branch stays 1."""
    if rank_i < 1:
        raise ValueError("rank_i must be a positive integer")
    if not d_1 <= d_i <= d_k:
        raise ValueError(f"need d_1 <= d_i <= d_k, got {d_1}, {d_i}, {d_k}")
    if d_k == d_1:
        return 1.0
    return (d_k - d_i) / (d_k - d_1) / rank_i


def _merged_neighbors(part: NeighborhoodPartition):
    """Neighbors of all classes in one list sorted by (distance, train index)."""
    dists = np.concatenate([cn.distances for cn in part.per_class.values()])
    indices = np.concatenate([cn.indices for cn in part.per_class.values()])
    classes = np.concatenate(
        [np.full(cn.count, ci, dtype=np.int64) for ci, cn in part.per_class.items()]
    )
    order = np.lexsort((indices, dists))
    return dists[order], classes[order]


def classify_dwknn(train: Dataset, query, cfg: DecisionRuleConfig) -> ClassificationResult:
    """Distance-weighted vote; DW2 additionally divides each weight by rank.

    Ranks run over the tie-inclusive sorted neighbor list, so d_k is the
    neighborhood radius.
    """
    if cfg.rule not in (Rule.DW1_KNN, Rule.DW2_KNN):
        raise ValueError(f"classify_dwknn cannot run rule {cfg.rule}")
    query = _as_query(query, train.n_dims)
    part = knn_partition(train, query, _shared_k(train, cfg))
    dists, classes = _merged_neighbors(part)
    d_1, d_k = float(dists[0]), float(dists[-1])
    values = np.zeros(train.n_classes)
    for rank, (d_i, ci) in enumerate(zip(dists, classes), start=1):
        if cfg.rule is Rule.DW1_KNN:
            values[ci] += dudani_weight(float(d_i), d_1, d_k)
        else:
            values[ci] += dual_weight(float(d_i), d_1, d_k, rank)
    counts = part.counts(train.n_classes)
    return _result(train, values, counts, part.nearest_class, log_space=False)


def classify_cap(train: Dataset, query, cfg: DecisionRuleConfig) -> ClassificationResult:
    """Nearest per-class centroid over a balanced (kpc per class) neighborhood.

    Decision values are negated centroid distances so that argmax picks
    the closest centroid.
    """
    query = _as_query(query, train.n_dims)
    part = knn_per_class(train, query, cfg.kpc)
    values = np.empty(train.n_classes)
    counts = np.zeros(train.n_classes, dtype=np.int64)
    for ci, cn in part.per_class.items():
        centroid = cn.points.mean(axis=0)
        values[ci] = -euclidean_distance(query, centroid)
        counts[ci] = cn.count
    return _result(train, values, counts, part.nearest_class, log_space=False)


def classify_nbc(train: Dataset, query, cfg: DecisionRuleConfig) -> ClassificationResult:
    """Naive-Bayes control: class count times a whole-class density at the query.

    GME fits per-dimension means/variances over each entire class; KDE
    places one kernel per class sample with Silverman bandwidths.
    """
    if cfg.rule not in (Rule.NBC_GME, Rule.NBC_KDE):
        raise ValueError(f"classify_nbc cannot run rule {cfg.rule}")
    query = _as_query(query, train.n_dims)
    counts = train.class_counts()
    if np.any(counts == 0):
        empty = train.class_set[int(np.argmin(counts))]
        raise ValueError(f"class {empty!r} has no training samples")
    values = np.empty(train.n_classes)
    for ci in range(train.n_classes):
        pts = train.features[train.labels == ci]
        model = fit_gme(pts) if cfg.rule is Rule.NBC_GME else fit_kde(pts)
        values[ci] = math.log(counts[ci]) + model.logpdf(query)
    return _result(train, values, counts, _nearest_class(train, query), log_space=True)


_DISPATCH = {
    Rule.LD_GME: classify_ld,
    Rule.LD_KDE: classify_ld,
    Rule.V_KNN: classify_vknn,
    Rule.DW1_KNN: classify_dwknn,
    Rule.DW2_KNN: classify_dwknn,
    Rule.CAP: classify_cap,
    Rule.NBC_GME: classify_nbc,
    Rule.NBC_KDE: classify_nbc,
}


def classify(train: Dataset, query, cfg: DecisionRuleConfig) -> ClassificationResult:
    """Run the configured rule on one query."""
    return _DISPATCH[cfg.rule](train, query, cfg)


def classify_batch(train: Dataset, queries, cfg: DecisionRuleConfig) -> np.ndarray:
    """Predicted class codes for a batch of queries.

    Routes through the accelerated kernel backend when possible;
    Monte-Carlo normalization falls back to the per-query reference
    path. Results are identical to calling :func:`classify` per query.
    """
    queries = np.ascontiguousarray(np.atleast_2d(np.asarray(queries, dtype=np.float64)))
    if queries.shape[1] != train.n_dims:
        raise ValueError(f"queries have {queries.shape[1]} dims, training data has {train.n_dims}")
    if cfg.normalization.mode != "omit":
        return np.array(
            [classify(train, q, cfg).predicted_index for q in queries], dtype=np.int64
        )

    from . import backend

    kernels = backend.kernels()
    x, y, c = train.features, train.labels, train.n_classes
    if cfg.rule in (Rule.LD_GME, Rule.LD_KDE):
        k = _shared_k(train, cfg)
        return kernels.ld_predict(x, y, c, queries, k, cfg.rule is Rule.LD_KDE,
                                  VAR_FLOOR, SIGMA_FLOOR)
    if cfg.rule is Rule.V_KNN:
        return kernels.vknn_predict(x, y, c, queries, _shared_k(train, cfg))
    if cfg.rule in (Rule.DW1_KNN, Rule.DW2_KNN):
        return kernels.dw_predict(x, y, c, queries, _shared_k(train, cfg),
                                  cfg.rule is Rule.DW2_KNN)
    if cfg.rule is Rule.CAP:
        counts = train.class_counts()
        if cfg.kpc > counts.min():
            short = train.class_set[int(np.argmin(counts))]
            raise ValueError(
                f"class {short!r} has only {int(counts.min())} samples, need kpc={cfg.kpc}"
            )
        return kernels.cap_predict(x, y, c, queries, cfg.kpc)
    counts = train.class_counts()
    if np.any(counts == 0):
        empty = train.class_set[int(np.argmin(counts))]
        raise ValueError(f"class {empty!r} has no training samples")
    return kernels.nbc_predict(x, y, c, queries, cfg.rule is Rule.NBC_KDE,
                               VAR_FLOOR, SIGMA_FLOOR)
