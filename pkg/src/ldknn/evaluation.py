"""Repeated stratified cross-validation, metrics, and multi-classifier statistics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from ._seeds import derive_seed
from .classifiers import NEIGHBORHOOD_RULES, DecisionRuleConfig, Rule, classify_batch
from .data import Dataset, apply_zscore, fit_zscore, make_stratified_folds

# Upper critical values of the chi-square distribution, indexed by
# degrees of freedom 1..30 (standard tables).
CHI2_CRITICAL = {
    0.05: (
        3.841, 5.991, 7.815, 9.488, 11.070, 12.592, 14.067, 15.507, 16.919,
        18.307, 19.675, 21.026, 22.362, 23.685, 24.996, 26.296, 27.587,
        28.869, 30.144, 31.410, 32.671, 33.924, 35.172, 36.415, 37.652,
        38.885, 40.113, 41.337, 42.557, 43.773,
    ),
    0.10: (
        2.706, 4.605, 6.251, 7.779, 9.236, 10.645, 12.017, 13.362, 14.684,
        15.987, 17.275, 18.549, 19.812, 21.064, 22.307, 23.542, 24.769,
        25.989, 27.204, 28.412, 29.615, 30.813, 32.007, 33.196, 34.382,
        35.563, 36.741, 37.916, 39.087, 40.256,
    ),
}

# Two-tailed critical values for comparing k-1 classifiers against one
# control (normal quantiles at the family-wise-adjusted level), indexed
# by the number of classifiers k = 2..20.
BONFERRONI_DUNN_Q = {
    0.05: (
        1.9600, 2.2414, 2.3940, 2.4977, 2.5758, 2.6383, 2.6901, 2.7344,
        2.7729, 2.8070, 2.8376, 2.8653, 2.8905, 2.9137, 2.9352, 2.9552,
        2.9738, 2.9913, 3.0078,
    ),
    0.10: (
        1.6449, 1.9600, 2.1280, 2.2414, 2.3263, 2.3940, 2.4500, 2.4977,
        2.5392, 2.5758, 2.6086, 2.6383, 2.6653, 2.6901, 2.7131, 2.7344,
        2.7543, 2.7729, 2.7905,
    ),
}

ZERO_ERROR_FLOOR = 1e-12


class EvaluationError(RuntimeError):
    """A classifier failed inside the cross-validation loop."""


@dataclass(frozen=True)
class RunRecord:
    """Metrics of one (repeat, fold) evaluation cell."""

    dataset: str
    classifier: str
    repeat: int
    fold: int
    mr: float
    f1: float


def misclassification_rate(predicted, actual) -> float:
    """Fraction of mismatching labels."""
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape or predicted.ndim != 1 or predicted.size == 0:
        raise ValueError("predicted and actual must be equal-length non-empty vectors")
    return float(np.mean(predicted != actual))


def macro_f1(predicted, actual, class_set) -> float:
    """Unweighted mean of per-class F1 scores over ``class_set``.

    Precision/recall with zero denominators count as 0, so a class
    absent from both vectors contributes 0 to the mean.
    """
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape or predicted.ndim != 1 or predicted.size == 0:
        raise ValueError("predicted and actual must be equal-length non-empty vectors")
    total = 0.0
    classes = list(class_set)
    for c in classes:
        tp = np.sum((predicted == c) & (actual == c))
        fp = np.sum((predicted == c) & (actual != c))
        fn = np.sum((predicted != c) & (actual == c))
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        total += 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return total / len(classes)


def _split_cell(dataset: Dataset, normalized: Dataset | None, plan, fold: int,
                scope: str):
    train_idx = plan.train_indices(fold)
    test_idx = plan.test_indices(fold)
    if scope == "global":
        return normalized.subset(train_idx), normalized.subset(test_idx)
    params = fit_zscore(dataset.subset(train_idx))
    return (
        apply_zscore(dataset.subset(train_idx), params),
        apply_zscore(dataset.subset(test_idx), params),
    )


def _tune_kpc(train: Dataset, cfg: DecisionRuleConfig, grid, seed: int,
              n_folds: int = 5, n_repeats: int = 2) -> int:
    """Pick kpc from ``grid`` by an inner cross-validation on ``train`` only.

    The inner protocol is repeated to damp fold noise in the selection;
    grid values infeasible for the inner splits are skipped, and ties
    resolve to the smallest kpc.
    """
    n_folds = min(n_folds, train.n_samples)
    plans = [
        make_stratified_folds(train, n_folds, derive_seed(seed, "inner", rep))
        for rep in range(n_repeats)
    ]
    best_kpc, best_mr = None, None
    for kpc in grid:
        total, count = 0.0, 0
        try:
            for plan in plans:
                for fold in range(n_folds):
                    inner_train = train.subset(plan.train_indices(fold))
                    inner_test = train.subset(plan.test_indices(fold))
                    preds = classify_batch(inner_train, inner_test.features,
                                           replace(cfg, kpc=kpc))
                    total += np.sum(preds != inner_test.labels)
                    count += inner_test.n_samples
        except ValueError:
            continue  # kpc infeasible for this training split
        mr = total / count
        if best_mr is None or mr < best_mr:
            best_kpc, best_mr = kpc, mr
    if best_kpc is None:
        raise EvaluationError(f"no feasible kpc in grid {list(grid)} for {train.name!r}")
    return best_kpc


def cross_validate(dataset: Dataset, cfg: DecisionRuleConfig, n_folds: int = 5,
                   n_repeats: int = 10, seed: int = 0, *,
                   normalization_scope: str = "global",
                   kpc_grid=None, tune_on_test: bool = False,
                   classifier_name: str | None = None) -> list[RunRecord]:
    """Repeated stratified cross-validation of one rule on one dataset.

    Every repeat draws fresh folds from a seed derived from ``seed``, so
    the result is deterministic and two classifiers evaluated with the
    same seed see the same folds. ``normalization_scope`` fits z-score
    parameters either on the full dataset ("global") or per training
    split ("train_fold").

    When ``kpc_grid`` is given, kpc is selected per training split by a
    nested inner cross-validation. ``tune_on_test=True`` instead runs
    the full protocol for every grid value and reports the best outcome
    (an optimistic protocol, kept for comparability with tuning on the
    evaluation data itself).
    """
    if normalization_scope not in ("global", "train_fold"):
        raise ValueError(f"unknown normalization_scope {normalization_scope!r}")
    name = classifier_name or cfg.rule.value.lower()
    if kpc_grid is not None and cfg.rule not in NEIGHBORHOOD_RULES:
        kpc_grid = None
    if kpc_grid is not None and tune_on_test:
        best = None
        for kpc in kpc_grid:
            try:
                records = cross_validate(
                    dataset, replace(cfg, kpc=kpc), n_folds, n_repeats, seed,
                    normalization_scope=normalization_scope,
                    classifier_name=name,
                )
            except EvaluationError:
                continue
            amr = float(np.mean([r.mr for r in records]))
            if best is None or amr < best[0]:
                best = (amr, records)
        if best is None:
            raise EvaluationError(f"no feasible kpc in grid {list(kpc_grid)}")
        return best[1]

    normalized = apply_zscore(dataset, fit_zscore(dataset)) \
        if normalization_scope == "global" else None
    records = []
    for repeat in range(n_repeats):
        plan = make_stratified_folds(dataset, n_folds, derive_seed(seed, "folds", repeat))
        for fold in range(n_folds):
            train, test = _split_cell(dataset, normalized, plan, fold, normalization_scope)
            cell_cfg = cfg
            if kpc_grid is not None:
                kpc = _tune_kpc(train, cfg, kpc_grid,
                                derive_seed(seed, "tune", repeat, fold))
                cell_cfg = replace(cfg, kpc=kpc)
            try:
                preds = classify_batch(train, test.features, cell_cfg)
            except ValueError as exc:
                raise EvaluationError(
                    f"classifier {name!r} failed on {dataset.name!r} "
                    f"(repeat {repeat}, fold {fold}): {exc}"
                ) from exc
            records.append(RunRecord(
                dataset=dataset.name,
                classifier=name,
                repeat=repeat,
                fold=fold,
                mr=misclassification_rate(preds, test.labels),
                f1=macro_f1(preds, test.labels, range(dataset.n_classes)),
            ))
    return records


def rank_with_ties(values, higher_better: bool = False) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(-v if higher_better else v, kind="stable")
    ranks = np.empty(v.shape[0])
    sorted_v = v[order]
    i = 0
    while i < v.shape[0]:
        j = i
        while j + 1 < v.shape[0] and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def friedman_statistic(rank_matrix) -> tuple[float, int]:
    """Friedman chi-square statistic over a (datasets x classifiers) rank table.

    Rows must already hold tie-adjusted ranks. Returns the statistic and
    its degrees of freedom (k - 1).
    """
    ranks = np.asarray(rank_matrix, dtype=np.float64)
    if ranks.ndim != 2 or ranks.shape[0] < 2 or ranks.shape[1] < 2:
        raise ValueError("need at least 2 datasets and 2 classifiers")
    n, k = ranks.shape
    mean_ranks = ranks.mean(axis=0)
    stat = 12.0 * n / (k * (k + 1.0)) * (np.sum(mean_ranks ** 2) - k * (k + 1.0) ** 2 / 4.0)
    return float(stat), k - 1


def chi2_critical_value(alpha: float, df: int) -> float:
    """Tabled upper chi-square critical value."""
    if alpha not in CHI2_CRITICAL:
        raise ValueError(f"alpha must be one of {sorted(CHI2_CRITICAL)}")
    table = CHI2_CRITICAL[alpha]
    if not 1 <= df <= len(table):
        raise ValueError(f"df={df} outside the tabled range 1..{len(table)}")
    return table[df - 1]


def bonferroni_dunn(avg_ranks, n_datasets: int, control_index: int,
                    alpha: float = 0.05) -> tuple[float, np.ndarray]:
    """Critical difference and per-classifier significance against a control.

    A classifier differs significantly from the control when the gap
    between their average ranks exceeds CD = q * sqrt(k(k+1) / (6N)),
    with q from the family-wise-adjusted normal table.
    """
    ranks = np.asarray(avg_ranks, dtype=np.float64)
    k = ranks.shape[0]
    if alpha not in BONFERRONI_DUNN_Q:
        raise ValueError(f"alpha must be one of {sorted(BONFERRONI_DUNN_Q)}")
    table = BONFERRONI_DUNN_Q[alpha]
    if not 2 <= k <= len(table) + 1:
        raise ValueError(f"k={k} classifiers outside the tabled range 2..{len(table) + 1}")
    if not 0 <= control_index < k:
        raise ValueError(f"control_index {control_index} out of range")
    if n_datasets < 1:
        raise ValueError("n_datasets must be positive")
    q = table[k - 2]
    cd = q * math.sqrt(k * (k + 1.0) / (6.0 * n_datasets))
    significant = np.abs(ranks - ranks[control_index]) > cd
    significant[control_index] = False
    return cd, significant


def robustness_ratios(amr_matrix) -> np.ndarray:
    """Each classifier's error divided by the best error on that dataset.

    Rows whose minimum is zero use a floored denominator so the ratios
    stay finite (the per-row best still maps to 1.0).
    """
    amr = np.asarray(amr_matrix, dtype=np.float64)
    if amr.ndim != 2 or amr.size == 0:
        raise ValueError("amr_matrix must be a non-empty 2-D matrix")
    mins = amr.min(axis=1, keepdims=True)
    ratios = amr / np.maximum(mins, ZERO_ERROR_FLOOR)
    ratios[np.nonzero(amr == mins)] = 1.0
    return ratios


@dataclass
class EvaluationReport:
    """Aggregated view over run records: AMR/AF1 matrices plus ranks."""

    runs: list
    datasets: list
    classifiers: list
    amr: np.ndarray
    af1: np.ndarray
    ranks_amr: np.ndarray
    ranks_af1: np.ndarray

    @staticmethod
    def from_runs(runs: list) -> "EvaluationReport":
        datasets, classifiers = [], []
        for r in runs:
            if r.dataset not in datasets:
                datasets.append(r.dataset)
            if r.classifier not in classifiers:
                classifiers.append(r.classifier)
        amr = np.full((len(datasets), len(classifiers)), np.nan)
        af1 = np.full_like(amr, np.nan)
        for di, ds in enumerate(datasets):
            for ci, clf in enumerate(classifiers):
                cell = [r for r in runs if r.dataset == ds and r.classifier == clf]
                if cell:
                    amr[di, ci] = np.mean([r.mr for r in cell])
                    af1[di, ci] = np.mean([r.f1 for r in cell])
        return EvaluationReport.from_matrices(datasets, classifiers, amr, af1, runs)

    @staticmethod
    def from_matrices(datasets, classifiers, amr, af1, runs=None) -> "EvaluationReport":
        amr = np.asarray(amr, dtype=np.float64)
        af1 = np.asarray(af1, dtype=np.float64)
        if np.any(np.isnan(amr)) or np.any(np.isnan(af1)):
            raise ValueError("incomplete results: every (dataset, classifier) cell is required")
        ranks_amr = np.vstack([rank_with_ties(row) for row in amr])
        ranks_af1 = np.vstack([rank_with_ties(row, higher_better=True) for row in af1])
        return EvaluationReport(
            runs=list(runs) if runs else [],
            datasets=list(datasets),
            classifiers=list(classifiers),
            amr=amr,
            af1=af1,
            ranks_amr=ranks_amr,
            ranks_af1=ranks_af1,
        )


def write_runs_csv(runs, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "classifier", "repeat", "fold", "mr", "f1"])
        for r in runs:
            writer.writerow(
                [r.dataset, r.classifier, r.repeat, r.fold, f"{r.mr:.6f}", f"{r.f1:.6f}"]
            )


def write_aggregate_csv(report: EvaluationReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "classifier", "amr", "af1", "rank_amr", "rank_af1"])
        for di, ds in enumerate(report.datasets):
            for ci, clf in enumerate(report.classifiers):
                writer.writerow([
                    ds, clf,
                    f"{report.amr[di, ci]:.6f}", f"{report.af1[di, ci]:.6f}",
                    f"{report.ranks_amr[di, ci]:.2f}", f"{report.ranks_af1[di, ci]:.2f}",
                ])


def read_aggregate_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _markdown_table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(lines)


def write_markdown_summary(report: EvaluationReport, path, title: str = "Evaluation summary") -> None:
    """Dataset-by-classifier tables (AMR % then macro-F1), best cell bold."""
    sections = [f"# {title}", ""]
    for label, matrix, best_is_min, fmt in (
        ("Average misclassification rate (%)", report.amr * 100.0, True, "{:.2f}"),
        ("Average macro F1", report.af1, False, "{:.4f}"),
    ):
        rows = []
        for di, ds in enumerate(report.datasets):
            best = matrix[di].min() if best_is_min else matrix[di].max()
            cells = [
                f"**{fmt.format(v)}**" if v == best else fmt.format(v)
                for v in matrix[di]
            ]
            rows.append([ds] + cells)
        sections += [f"## {label}", "",
                     _markdown_table(["Dataset"] + report.classifiers, rows), ""]
    with open(path, "w") as fh:
        fh.write("\n".join(sections))
