"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with the measured values."""

import math
import time

import numpy as np
import pytest
import yaml

from ldknn.classifiers import (
    DecisionRuleConfig,
    Rule,
    classify_batch,
    classify_cap,
    classify_ld,
    classify_nbc,
    classify_vknn,
)
from ldknn.cli import main as cli_main
from ldknn.data import Dataset, load_bundled
from ldknn.evaluation import (
    chi2_critical_value,
    cross_validate,
    friedman_statistic,
    rank_with_ties,
    robustness_ratios,
)
from ldknn.localdist import (
    NormalizationMode,
    ball_volume,
    fit_gme,
    fit_kde,
    local_normalizer,
    sample_in_ball,
)
from ldknn.neighbors import knn_partition
from ldknn.synthgen import SyntheticSpec, bayes_error_t2, generate

from conftest import make_blobs
from scenes import dense_vs_majority_scene, spread_vs_centroid_scene

KPC_GRID = (1, 2, 3, 5, 7, 10, 15, 20)
SEED = 42


def report(name, ok, detail):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def tuned_amr_af1(dataset, rule):
    runs = cross_validate(dataset, DecisionRuleConfig(rule=rule, kpc=1),
                          n_folds=5, n_repeats=10, seed=SEED, kpc_grid=KPC_GRID)
    return (float(np.mean([r.mr for r in runs])),
            float(np.mean([r.f1 for r in runs])))


def warm_up_kernels():
    tiny = make_blobs(np.random.default_rng(0), [[0, 0], [2, 2]], 10)
    for rule in (Rule.LD_GME, Rule.V_KNN, Rule.NBC_GME):
        classify_batch(tiny, tiny.features[:2], DecisionRuleConfig(rule=rule, kpc=2))


def test_criterion_1_iris_reproduction():
    warm_up_kernels()
    d = load_bundled("iris")
    start = time.perf_counter()
    ld_amr, _ = tuned_amr_af1(d, Rule.LD_GME)
    v_amr, _ = tuned_amr_af1(d, Rule.V_KNN)
    elapsed = time.perf_counter() - start
    ok = ld_amr <= 0.055 and v_amr <= 0.055 and elapsed < 30
    report("1 iris", ok,
           f"LD_GME AMR {ld_amr * 100:.2f}% <= 5.5, V_KNN AMR {v_amr * 100:.2f}% <= 5.5, "
           f"{elapsed:.1f}s < 30s")


def test_criterion_2_wine_reproduction():
    warm_up_kernels()
    d = load_bundled("wine")
    start = time.perf_counter()
    amr, af1 = tuned_amr_af1(d, Rule.LD_GME)
    elapsed = time.perf_counter() - start
    ok = amr <= 0.03 and af1 >= 0.96 and elapsed < 30
    report("2 wine", ok,
           f"LD_GME AMR {amr * 100:.2f}% <= 3.0, AF1 {af1:.4f} >= 0.96, "
           f"{elapsed:.1f}s < 30s")


def test_criterion_3_t2_bayes_consistency():
    warm_up_kernels()
    d = generate(SyntheticSpec("t2", 5, 500, seed=99))
    bayes = bayes_error_t2(5)
    start = time.perf_counter()
    ld_runs = cross_validate(d, DecisionRuleConfig(rule=Rule.LD_GME, kpc=20),
                             n_folds=5, n_repeats=10, seed=SEED)
    nbc_runs = cross_validate(d, DecisionRuleConfig(rule=Rule.NBC_GME),
                              n_folds=5, n_repeats=10, seed=SEED)
    elapsed = time.perf_counter() - start
    ld_amr = float(np.mean([r.mr for r in ld_runs]))
    nbc_amr = float(np.mean([r.mr for r in nbc_runs]))
    ok = abs(ld_amr - bayes) <= 0.04 and abs(nbc_amr - bayes) <= 0.02 and elapsed < 120
    report("3 t2-bayes", ok,
           f"bayes {bayes * 100:.2f}%, LD_GME {ld_amr * 100:.2f}% (|gap| <= 4), "
           f"NBC_GME {nbc_amr * 100:.2f}% (|gap| <= 2), {elapsed:.1f}s < 120s")


def test_criterion_4_special_case_reductions():
    rng = np.random.default_rng(2024)
    d = make_blobs(rng, [[0, 0], [2, 2]], 100)
    queries = rng.standard_normal((200, 2)) + 1

    full = DecisionRuleConfig(rule=Rule.LD_GME, kpc=100)  # k = n_train
    nbc = DecisionRuleConfig(rule=Rule.NBC_GME)
    agree_nbc = sum(
        classify_ld(d, q, full).predicted == classify_nbc(d, q, nbc).predicted
        for q in queries
    )

    ld5 = DecisionRuleConfig(rule=Rule.LD_GME, kpc=5)
    cap5 = DecisionRuleConfig(rule=Rule.CAP, kpc=5)
    agree_cap = sum(
        classify_ld(d, q, ld5, variance_override=[1.0, 1.0], balanced=True).predicted
        == classify_cap(d, q, cap5).predicted
        for q in queries
    )

    kde6 = DecisionRuleConfig(rule=Rule.LD_KDE, kpc=6)
    agree_vote = 0
    for q in queries:
        ld = classify_ld(d, q, kde6, bandwidth_override=[1.0, 1.0])
        part = knn_partition(d, q, 12)
        votes = {
            ci: sum(math.exp(-0.5 * dist * dist) for dist in cn.distances)
            for ci, cn in part.per_class.items()
        }
        agree_vote += ld.predicted == d.class_set[max(votes, key=votes.get)]

    ok = agree_nbc == 200 and agree_cap == 200 and agree_vote == 200
    report("4 reductions", ok,
           f"full-neighborhood==NBC {agree_nbc}/200, "
           f"identity-variance==CAP {agree_cap}/200, "
           f"unit-bandwidth==kernel-vote {agree_vote}/200")


def test_criterion_5_region_density_invariants():
    rng = np.random.default_rng(7)

    # (a) unitarity: normalize over a ball, re-integrate with a fresh stream
    pts = rng.standard_normal((50, 2))
    radius = 1.5
    z = local_normalizer(fit_gme(pts), np.zeros(2), radius,
                         NormalizationMode.monte_carlo(200000, seed=11))
    probe = np.random.default_rng(99)
    samples = sample_in_ball(probe, np.zeros(2), radius, 200000)
    values = fit_gme(pts).pdf(samples) * ball_volume(2, radius) / z
    estimate = float(values.mean())
    stderr = float(values.std(ddof=1)) / math.sqrt(values.shape[0])
    unitarity_ok = abs(estimate - 1.0) <= 3.0 * stderr

    # (b) local density x region mass recovers the global density at the center
    sample = np.random.default_rng(123).standard_normal(100000)
    k = 99000
    order = np.argsort(np.abs(sample), kind="stable")
    region_radius = float(np.abs(sample[order[k - 1]]))
    neighbors = sample[np.abs(sample) <= region_radius][:, None]
    mass = neighbors.shape[0] / sample.shape[0]
    truth = 1.0 / math.sqrt(2.0 * math.pi)
    gme = fit_gme(neighbors)
    z2 = local_normalizer(gme, [0.0], region_radius,
                          NormalizationMode.monte_carlo(100000, seed=5))
    consistency_err = abs(float(gme.pdf(np.zeros(1))) / z2 * mass - truth) / truth
    consistency_ok = consistency_err < 0.10

    # (c) the kernel density integrates to one on a 1-D grid
    pts1 = rng.normal(2.0, 1.5, size=(60, 1))
    kde = fit_kde(pts1)
    h = kde.bandwidths[0]
    grid = np.linspace(pts1.min() - 8 * h, pts1.max() + 8 * h, 20001)
    integral = float(np.trapezoid(kde.pdf(grid[:, None]), grid))
    integral_ok = abs(integral - 1.0) < 1e-3

    ok = unitarity_ok and consistency_ok and integral_ok
    report("5 density-invariants", ok,
           f"reintegration {estimate:.4f} within 3SE ({3 * stderr:.4f}), "
           f"consistency err {consistency_err * 100:.1f}% < 10%, "
           f"grid integral {integral:.5f} within 1e-3")


def test_criterion_6_counterexample_scenes():
    d1, q1 = dense_vs_majority_scene()
    ld1 = classify_ld(d1, q1, DecisionRuleConfig(rule=Rule.LD_GME, kpc=5)).predicted
    v1 = classify_vknn(d1, q1, DecisionRuleConfig(rule=Rule.V_KNN, kpc=5)).predicted

    d2, q2 = spread_vs_centroid_scene()
    ld2 = classify_ld(d2, q2, DecisionRuleConfig(rule=Rule.LD_GME, kpc=5)).predicted
    cap2 = classify_cap(d2, q2, DecisionRuleConfig(rule=Rule.CAP, kpc=5)).predicted

    ok = (ld1, v1, ld2, cap2) == ("1", "2", "1", "2")
    report("6 scenes", ok,
           f"dense-vs-majority: LD_GME={ld1} V_KNN={v1} (want 1/2); "
           f"spread-vs-centroid: LD_GME={ld2} CAP={cap2} (want 1/2)")


def test_criterion_7_statistics_suite():
    rng = np.random.default_rng(17)

    def oracle(ranks):
        n, k = ranks.shape
        sums = ranks.sum(axis=0)
        return 12.0 / (n * k * (k + 1)) * np.sum(sums ** 2) - 3.0 * n * (k + 1)

    max_err = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 15))
        k = int(rng.integers(2, 12))
        ranks = np.vstack([rank_with_ties(row) for row in rng.random((n, k))])
        stat, _ = friedman_statistic(ranks)
        max_err = max(max_err, abs(stat - oracle(ranks)))

    _, df = friedman_statistic(np.tile(np.arange(1.0, 13.0), (27, 1)))
    critical = chi2_critical_value(0.05, df)

    ratios = robustness_ratios(rng.random((20, 6)) + 0.01)
    minima_ok = bool(np.all(ratios.min(axis=1) == 1.0))

    ok = max_err <= 1e-9 and df == 11 and abs(critical - 19.68) < 0.01 and minima_ok
    report("7 statistics", ok,
           f"friedman vs oracle max err {max_err:.2e} <= 1e-9, df={df}, "
           f"critical {critical:.3f} ~ 19.68, row minima exactly 1: {minima_ok}")


def _two_class_gaussians(m, d, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((m, d))
    x[m // 2:, -1] += 2.0
    y = np.repeat(np.array([0, 1], dtype=np.int64), [m - m // 2, m // 2])
    return Dataset(x, y, ("1", "2"), "scaling")


def _per_query_time(train, queries, kpc, repeats=3):
    cfg = DecisionRuleConfig(rule=Rule.LD_GME, kpc=kpc)
    classify_batch(train, queries[:2], cfg)  # warm-up / JIT
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        classify_batch(train, queries, cfg)
        best = min(best, time.perf_counter() - start)
    return best / queries.shape[0]


def _fit_exponent(xs, times):
    return float(np.polyfit(np.log(np.asarray(xs, float)),
                            np.log(np.asarray(times)), 1)[0])


def test_criterion_8_scaling_exponents():
    rng = np.random.default_rng(3)
    queries16 = np.ascontiguousarray(rng.standard_normal((100, 16)))
    queries64 = np.ascontiguousarray(rng.standard_normal((100, 64)))

    train = _two_class_gaussians(8000, 16)
    kpcs = [5, 10, 20, 40]
    k_exp = _fit_exponent(kpcs, [_per_query_time(train, queries16, kpc) for kpc in kpcs])

    ms = [2000, 4000, 8000, 16000]
    m_exp = _fit_exponent(
        ms, [_per_query_time(_two_class_gaussians(m, 64), queries64, 10) for m in ms])

    dims = [64, 128, 256, 512]
    d_times = []
    for dim in dims:
        qd = np.ascontiguousarray(rng.standard_normal((100, dim)))
        d_times.append(_per_query_time(_two_class_gaussians(2000, dim), qd, 10))
    d_exp = _fit_exponent(dims, d_times)

    ok = k_exp < 1.3 and 0.8 <= m_exp <= 1.3 and 0.8 <= d_exp <= 1.3
    report("8 scaling", ok,
           f"k exponent {k_exp:.2f} < 1.3, m exponent {m_exp:.2f} in [0.8, 1.3], "
           f"d exponent {d_exp:.2f} in [0.8, 1.3]")


def test_criterion_9_byte_identical_runs(tmp_path):
    config = {
        "output_dir": None,
        "cv": {"n_folds": 5, "n_repeats": 2, "seed": 20240601},
        "datasets": [
            {"name": "t2det", "synthetic": {"family": "t2", "p": 3, "n_per_class": 60}},
        ],
        "classifiers": [
            {"name": "ld_gme", "rule": "LD_GME", "kpc": 5},
            {"name": "vknn", "rule": "V_KNN", "kpc": 5},
        ],
    }
    contents = []
    for tag, jobs in (("a", 1), ("b", 1), ("c", 2)):
        out = tmp_path / tag
        config["output_dir"] = str(out)
        path = tmp_path / f"{tag}.yaml"
        path.write_text(yaml.safe_dump(config))
        assert cli_main(["run", str(path), "--jobs", str(jobs)]) == 0
        contents.append((out / "runs.csv").read_bytes())
    ok = contents[0] == contents[1] == contents[2]
    report("9 determinism", ok,
           f"rerun identical: {contents[0] == contents[1]}, "
           f"parallel identical: {contents[0] == contents[2]}")
