"""Command-line interface: dataset generation, experiment runs, reports.

Subcommands:

* ``gen`` -- write a synthetic dataset as CSV.
* ``run`` -- execute a declarative experiment config (YAML) and write
  per-run, aggregate and summary files.
* ``report`` -- compare classifiers across aggregate files: ranks,
  Friedman test, critical-difference test against a control, and
  robustness ratios.

All randomness flows from the config's master seed: the dataset seed is
derived as (seed, "dataset", name), per-dataset fold seeds as
(cv_seed, "folds", repeat) with cv_seed = (seed, "cv", dataset name),
and inner tuning seeds as (cv_seed, "tune", repeat, fold). Classifiers
therefore share folds on each dataset, which keeps the comparisons
paired.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ._seeds import derive_seed
from .classifiers import DecisionRuleConfig, Rule
from .data import Dataset, load_bundled, load_csv
from .evaluation import (
    EvaluationError,
    EvaluationReport,
    _markdown_table,
    bonferroni_dunn,
    chi2_critical_value,
    cross_validate,
    friedman_statistic,
    read_aggregate_csv,
    robustness_ratios,
    write_aggregate_csv,
    write_markdown_summary,
    write_runs_csv,
)
from .localdist import NormalizationMode
from .synthgen import FAMILIES, SyntheticSpec, generate

DEFAULT_KPC_GRID = (1, 2, 3, 5, 7, 10, 15, 20)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass(frozen=True)
class ClassifierSpec:
    name: str
    cfg: DecisionRuleConfig
    kpc_grid: tuple | None = None
    tune_on_test: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple
    classifiers: tuple[ClassifierSpec, ...]
    n_folds: int
    n_repeats: int
    seed: int
    output_dir: str
    normalization_scope: str = "global"


def _require(mapping, key, path):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ConfigError(f"missing required field {path}.{key}" if path else
                          f"missing required field {key}")
    return mapping[key]


def _parse_classifier(entry, index) -> ClassifierSpec:
    path = f"classifiers[{index}]"
    rule_name = str(_require(entry, "rule", path)).upper()
    try:
        rule = Rule(rule_name)
    except ValueError:
        raise ConfigError(
            f"{path}.rule: unknown rule {rule_name!r}; "
            f"expected one of {[r.value for r in Rule]}"
        ) from None
    normalization = NormalizationMode.omit()
    if "normalization" in entry:
        norm = entry["normalization"]
        mode = str(_require(norm, "mode", f"{path}.normalization"))
        if mode == "omit":
            normalization = NormalizationMode.omit()
        elif mode == "monte_carlo":
            normalization = NormalizationMode.monte_carlo(
                int(_require(norm, "samples", f"{path}.normalization")),
                int(norm.get("seed", 0)),
            )
        else:
            raise ConfigError(f"{path}.normalization.mode: unknown mode {mode!r}")
    kpc_grid = entry.get("kpc_grid")
    if kpc_grid is not None:
        kpc_grid = tuple(int(v) for v in kpc_grid)
    cfg = DecisionRuleConfig(
        rule=rule,
        kpc=int(entry.get("kpc", kpc_grid[0] if kpc_grid else 1)),
        normalization=normalization,
        seed=int(entry.get("seed", 0)),
    )
    return ClassifierSpec(
        name=str(entry.get("name", rule.value.lower())),
        cfg=cfg,
        kpc_grid=kpc_grid,
        tune_on_test=bool(entry.get("tune_on_test", False)),
    )


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML experiment config."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    cv = _require(raw, "cv", "")
    for key in ("n_folds", "n_repeats", "seed"):
        _require(cv, key, "cv")
    datasets = _require(raw, "datasets", "")
    classifiers = _require(raw, "classifiers", "")
    if not datasets:
        raise ConfigError("datasets: need at least one dataset")
    if not classifiers:
        raise ConfigError("classifiers: need at least one classifier")
    parsed_datasets = []
    for i, entry in enumerate(datasets):
        name = str(_require(entry, "name", f"datasets[{i}]"))
        sources = [k for k in ("csv", "synthetic", "bundled") if k in entry]
        if len(sources) != 1:
            raise ConfigError(
                f"datasets[{i}]: give exactly one of csv, synthetic or bundled"
            )
        parsed_datasets.append((name, sources[0], entry[sources[0]]))
    specs = tuple(_parse_classifier(e, i) for i, e in enumerate(classifiers))
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError("classifiers: names must be unique (set 'name' explicitly)")
    scope = str(raw.get("normalization_scope", "global"))
    if scope not in ("global", "train_fold"):
        raise ConfigError(
            f"normalization_scope: expected global or train_fold, got {scope!r}"
        )
    return ExperimentConfig(
        datasets=tuple(parsed_datasets),
        classifiers=specs,
        n_folds=int(cv["n_folds"]),
        n_repeats=int(cv["n_repeats"]),
        seed=int(cv["seed"]),
        output_dir=str(_require(raw, "output_dir", "")),
        normalization_scope=scope,
    )


def _materialize_dataset(name, kind, source, master_seed) -> Dataset:
    if kind == "bundled":
        d = load_bundled(str(source))
        return Dataset(d.features, d.labels, d.class_set, name)
    if kind == "csv":
        if isinstance(source, dict):
            return load_csv(
                _require(source, "path", f"datasets.{name}.csv"),
                label_column=int(source.get("label_column", -1)),
                header=source.get("header", "auto"),
                name=name,
            )
        return load_csv(str(source), name=name)
    spec = SyntheticSpec(
        family=str(_require(source, "family", f"datasets.{name}.synthetic")),
        dim_p=int(_require(source, "p", f"datasets.{name}.synthetic")),
        n_per_class=int(_require(source, "n_per_class", f"datasets.{name}.synthetic")),
        seed=int(source.get("seed", derive_seed(master_seed, "dataset", name))),
    )
    return generate(spec, name=name)


def _run_cell(dataset: Dataset, spec: ClassifierSpec, config: ExperimentConfig):
    return cross_validate(
        dataset,
        spec.cfg,
        n_folds=config.n_folds,
        n_repeats=config.n_repeats,
        seed=derive_seed(config.seed, "cv", dataset.name),
        normalization_scope=config.normalization_scope,
        kpc_grid=spec.kpc_grid,
        tune_on_test=spec.tune_on_test,
        classifier_name=spec.name,
    )


def _run_cell_safe(args):
    dataset, spec, config = args
    try:
        return _run_cell(dataset, spec, config), None
    except (ValueError, EvaluationError) as exc:
        return None, str(exc)


def cmd_gen(args) -> int:
    """Generate a synthetic dataset and write it as CSV."""
    spec = SyntheticSpec(family=args.family, dim_p=args.p,
                         n_per_class=args.n, seed=args.seed)
    dataset = generate(spec)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(dataset.n_dims - 1)] + ["y", "label"])
        labels = dataset.label_values
        for i in range(dataset.n_samples):
            writer.writerow([repr(float(v)) for v in dataset.features[i]] + [labels[i]])
    print(f"wrote {args.out}: {dataset.n_samples} samples, "
          f"{dataset.n_dims} attributes, {dataset.n_classes} classes")
    return 0


def cmd_run(args) -> int:
    """Run every (dataset x classifier) cell of an experiment config."""
    try:
        config = load_config(args.config)
    except (ConfigError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(config.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        datasets = [
            _materialize_dataset(name, kind, source, config.seed)
            for name, kind, source in config.datasets
        ]
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    cells = [(d, spec, config) for d in datasets for spec in config.classifiers]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_run_cell_safe, cells))
    else:
        outcomes = [_run_cell_safe(cell) for cell in cells]

    runs, errors = [], []
    for (dataset, spec, _), (records, error) in zip(cells, outcomes):
        if error is None:
            runs.extend(records)
        else:
            errors.append((dataset.name, spec.name, error))

    write_runs_csv(runs, out_dir / "runs.csv")
    if errors:
        with open(out_dir / "errors.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dataset", "classifier", "error"])
            writer.writerows(errors)
        for dataset_name, classifier_name, message in errors:
            print(f"error: {dataset_name}/{classifier_name}: {message}", file=sys.stderr)

    if runs:
        failed = {(d, c) for d, c, _ in errors}
        complete = [
            ds.name for ds in datasets
            if not any((ds.name, spec.name) in failed for spec in config.classifiers)
        ]
        report_runs = [r for r in runs if r.dataset in complete]
        if report_runs:
            report = EvaluationReport.from_runs(report_runs)
            write_aggregate_csv(report, out_dir / "aggregate.csv")
            write_markdown_summary(report, out_dir / "summary.md")
    print(f"completed {len(cells) - len(errors)}/{len(cells)} cells -> {out_dir}")
    if not errors:
        return 0
    return 2 if len(errors) == len(cells) else 1


def _merge_aggregates(paths):
    per_file = []
    for path in paths:
        rows = read_aggregate_csv(path)
        if not rows:
            raise ValueError(f"{path}: no rows")
        per_file.append(rows)
    common = [c for c in dict.fromkeys(r["classifier"] for r in per_file[0])
              if all(any(row["classifier"] == c for row in rows) for rows in per_file)]
    if len(common) < 2:
        raise ValueError("need at least 2 classifiers common to all aggregate files")
    cells = {}
    datasets = []
    for rows in per_file:
        for row in rows:
            if row["classifier"] not in common:
                continue
            key = (row["dataset"], row["classifier"])
            if key in cells:
                raise ValueError(f"duplicate aggregate cell {key}")
            cells[key] = (float(row["amr"]), float(row["af1"]))
            if row["dataset"] not in datasets:
                datasets.append(row["dataset"])
    amr = np.full((len(datasets), len(common)), np.nan)
    af1 = np.full_like(amr, np.nan)
    for di, ds in enumerate(datasets):
        for ci, clf in enumerate(common):
            if (ds, clf) not in cells:
                raise ValueError(f"missing aggregate cell ({ds}, {clf})")
            amr[di, ci], af1[di, ci] = cells[(ds, clf)]
    return datasets, common, amr, af1


def cmd_report(args) -> int:
    """Rank classifiers and run the comparison statistics against a control."""
    try:
        datasets, classifiers, amr, af1 = _merge_aggregates(args.aggregates)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.control not in classifiers:
        print(f"error: control {args.control!r} not found; available: {classifiers}",
              file=sys.stderr)
        return 2
    control = classifiers.index(args.control)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    report = EvaluationReport.from_matrices(datasets, classifiers, amr, af1)
    write_aggregate_csv(report, out_dir / "ranks.csv")

    if len(datasets) < 2:
        print("error: Friedman test needs at least 2 datasets; ranks were still written",
              file=sys.stderr)
        return 1

    sections = ["# Classifier comparison", "",
                f"Control: {args.control}; datasets: {len(datasets)}; "
                f"alpha: {args.alpha}", ""]
    stats_rows = []
    bd_rows = []
    for metric, ranks in (("amr", report.ranks_amr), ("af1", report.ranks_af1)):
        stat, df = friedman_statistic(ranks)
        critical = chi2_critical_value(args.alpha, df)
        avg = ranks.mean(axis=0)
        cd, significant = bonferroni_dunn(avg, len(datasets), control, args.alpha)
        stats_rows.append([metric, len(datasets), len(classifiers),
                           f"{stat:.6f}", df, f"{critical:.3f}",
                           str(stat > critical), f"{cd:.6f}"])
        for ci, clf in enumerate(classifiers):
            bd_rows.append([metric, clf, f"{avg[ci]:.4f}",
                            f"{avg[ci] - avg[control]:+.4f}",
                            str(bool(significant[ci]))])
        sections += [
            f"## {metric.upper()}", "",
            f"Friedman statistic {stat:.2f} (df={df}, critical {critical:.2f} "
            f"at alpha={args.alpha}) -> "
            f"{'significant' if stat > critical else 'not significant'}; "
            f"critical difference {cd:.3f}",
            "",
            _markdown_table(
                ["Classifier", "Avg rank", "Gap to control", "Significant"],
                [[clf, f"{avg[ci]:.3f}", f"{avg[ci] - avg[control]:+.3f}",
                  "yes" if significant[ci] else "no"]
                 for ci, clf in enumerate(classifiers)],
            ),
            "",
        ]

    with open(out_dir / "friedman.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "n_datasets", "n_classifiers", "statistic",
                         "df", "critical_value", "significant", "critical_difference"])
        writer.writerows(stats_rows)
    with open(out_dir / "bonferroni_dunn.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "classifier", "avg_rank", "rank_gap", "significant"])
        writer.writerows(bd_rows)

    ratios = robustness_ratios(amr)
    zero_rows = [datasets[i] for i in np.nonzero(amr.min(axis=1) == 0.0)[0]]
    with open(out_dir / "robustness.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["classifier", "min", "q1", "median", "q3", "max"])
        quartile_rows = []
        for ci, clf in enumerate(classifiers):
            q = np.percentile(ratios[:, ci], [0, 25, 50, 75, 100])
            row = [clf] + [f"{v:.4f}" for v in q]
            writer.writerow(row)
            quartile_rows.append(row)
    sections += ["## Robustness ratios (error / best error per dataset)", "",
                 _markdown_table(["Classifier", "Min", "Q1", "Median", "Q3", "Max"],
                                 quartile_rows), ""]
    if zero_rows:
        sections += [f"Zero-error rows used a floored denominator: {zero_rows}", ""]
    with open(out_dir / "report.md", "w") as fh:
        fh.write("\n".join(sections))
    print(f"report written to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldknn",
        description="Local-density kNN classification benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    gen.add_argument("--family", required=True, choices=FAMILIES)
    gen.add_argument("--p", required=True, type=int, help="total dimensions")
    gen.add_argument("--n", required=True, type=int, help="samples per class")
    gen.add_argument("--seed", required=True, type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", help="YAML experiment configuration")
    run.add_argument("--jobs", type=int, default=1,
                     help="parallel worker processes (results are identical)")
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="compare classifiers across aggregates")
    report.add_argument("aggregates", nargs="+", help="aggregate CSV files")
    report.add_argument("--control", required=True,
                        help="classifier the others are compared against")
    report.add_argument("--out-dir", default="ldknn-report")
    report.add_argument("--alpha", type=float, default=0.05)
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
