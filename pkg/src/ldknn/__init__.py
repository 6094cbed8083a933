"""Local-density k-nearest-neighbor classification and benchmarking tools."""

from .data import (
    Dataset,
    FoldPlan,
    NormalizationParams,
    apply_zscore,
    fit_zscore,
    invert_zscore,
    load_bundled,
    load_csv,
    make_stratified_folds,
)
from .synthgen import SyntheticSpec, bayes_error_t2, generate
from .neighbors import (
    NeighborhoodPartition,
    euclidean_distance,
    knn_partition,
    knn_per_class,
)
from .localdist import (
    GmeModel,
    KdeModel,
    NormalizationMode,
    fit_gme,
    fit_kde,
    gaussian_pdf_diag,
    kde_density,
    local_normalizer,
    silverman_bandwidth,
)
from .classifiers import (
    ClassificationResult,
    DecisionRuleConfig,
    Rule,
    classify,
    classify_batch,
)
from .evaluation import (
    EvaluationReport,
    bonferroni_dunn,
    cross_validate,
    friedman_statistic,
    macro_f1,
    misclassification_rate,
    robustness_ratios,
)

__version__ = "0.1.0"

__all__ = [
    "ClassificationResult",
    "Dataset",
    "DecisionRuleConfig",
    "EvaluationReport",
    "FoldPlan",
    "GmeModel",
    "KdeModel",
    "NeighborhoodPartition",
    "NormalizationMode",
    "NormalizationParams",
    "Rule",
    "SyntheticSpec",
    "apply_zscore",
    "bayes_error_t2",
    "bonferroni_dunn",
    "classify",
    "classify_batch",
    "cross_validate",
    "euclidean_distance",
    "fit_gme",
    "fit_kde",
    "fit_zscore",
    "friedman_statistic",
    "gaussian_pdf_diag",
    "generate",
    "invert_zscore",
    "kde_density",
    "knn_partition",
    "knn_per_class",
    "load_bundled",
    "load_csv",
    "local_normalizer",
    "macro_f1",
    "make_stratified_folds",
    "misclassification_rate",
    "robustness_ratios",
    "silverman_bandwidth",
]
