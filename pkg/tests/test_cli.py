import csv

import numpy as np
import pytest
import yaml

from ldknn.cli import ConfigError, load_config, main


def run_config(tmp_path, **overrides):
    config = {
        "output_dir": str(tmp_path / "out"),
        "cv": {"n_folds": 5, "n_repeats": 2, "seed": 77},
        "datasets": [
            {"name": "t2small", "synthetic": {"family": "t2", "p": 3, "n_per_class": 40}},
        ],
        "classifiers": [
            {"name": "ld_gme", "rule": "LD_GME", "kpc": 3},
            {"name": "vknn", "rule": "V_KNN", "kpc": 3},
        ],
    }
    config.update(overrides)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config))
    return path, config


class TestGen:
    def test_writes_expected_shape(self, tmp_path, capsys):
        out = tmp_path / "t2.csv"
        code = main(["gen", "--family", "t2", "--p", "5", "--n", "500",
                     "--seed", "7", "--out", str(out)])
        assert code == 0
        rows = out.read_text().strip().split("\n")
        assert len(rows) == 1001  # header + 1000 samples
        assert rows[0] == "x1,x2,x3,x4,y,label"
        assert "1000 samples, 5 attributes, 2 classes" in capsys.readouterr().out

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            main(["gen", "--family", "t4", "--p", "3", "--n", "50",
                  "--seed", "3", "--out", str(out)])
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_family_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["gen", "--family", "t9", "--p", "3", "--n", "10",
                  "--seed", "0", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_generated_file_loads_back(self, tmp_path):
        out = tmp_path / "t1.csv"
        main(["gen", "--family", "t1", "--p", "2", "--n", "30",
              "--seed", "1", "--out", str(out)])
        from ldknn.data import load_csv
        d = load_csv(out)
        assert d.n_samples == 60 and d.n_dims == 2


class TestRun:
    def test_outputs_written(self, tmp_path):
        path, config = run_config(tmp_path)
        assert main(["run", str(path)]) == 0
        out = tmp_path / "out"
        assert (out / "runs.csv").exists()
        assert (out / "aggregate.csv").exists()
        assert (out / "summary.md").exists()
        with open(out / "aggregate.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert {r["classifier"] for r in rows} == {"ld_gme", "vknn"}
        with open(out / "runs.csv") as fh:
            runs = list(csv.DictReader(fh))
        assert len(runs) == 2 * 2 * 5  # classifiers x repeats x folds

    def test_rerun_is_byte_identical(self, tmp_path):
        path, _ = run_config(tmp_path)
        main(["run", str(path)])
        first = (tmp_path / "out" / "runs.csv").read_bytes()
        path2, _ = run_config(tmp_path, output_dir=str(tmp_path / "out2"))
        main(["run", str(path2)])
        assert (tmp_path / "out2" / "runs.csv").read_bytes() == first

    def test_parallel_matches_sequential(self, tmp_path):
        path, _ = run_config(tmp_path)
        main(["run", str(path)])
        path2, _ = run_config(tmp_path, output_dir=str(tmp_path / "outp"))
        main(["run", str(path2), "--jobs", "2"])
        assert ((tmp_path / "outp" / "runs.csv").read_bytes()
                == (tmp_path / "out" / "runs.csv").read_bytes())

    def test_missing_seed_names_field(self, tmp_path, capsys):
        path, _ = run_config(tmp_path)
        raw = yaml.safe_load(path.read_text())
        del raw["cv"]["seed"]
        path.write_text(yaml.safe_dump(raw))
        assert main(["run", str(path)]) == 2
        assert "cv.seed" in capsys.readouterr().err

    def test_duplicate_classifier_names_rejected(self, tmp_path):
        path, config = run_config(tmp_path)
        raw = yaml.safe_load(path.read_text())
        raw["classifiers"] = [{"rule": "V_KNN", "kpc": 2}, {"rule": "V_KNN", "kpc": 5}]
        path.write_text(yaml.safe_dump(raw))
        with pytest.raises(ConfigError, match="unique"):
            load_config(path)

    def test_partial_failure_reported(self, tmp_path, capsys):
        path, _ = run_config(tmp_path, classifiers=[
            {"name": "vknn", "rule": "V_KNN", "kpc": 3},
            {"name": "cap_bad", "rule": "CAP", "kpc": 1000},  # exceeds class sizes
        ])
        code = main(["run", str(path)])
        assert code == 1
        out = tmp_path / "out"
        assert (out / "errors.csv").exists()
        assert "cap_bad" in capsys.readouterr().err
        with open(out / "runs.csv") as fh:
            runs = list(csv.DictReader(fh))
        assert {r["classifier"] for r in runs} == {"vknn"}

    def test_bundled_dataset_source(self, tmp_path):
        path, _ = run_config(tmp_path, datasets=[{"name": "iris", "bundled": "iris"}],
                             classifiers=[{"name": "vknn", "rule": "V_KNN", "kpc": 5}],
                             cv={"n_folds": 5, "n_repeats": 1, "seed": 3})
        assert main(["run", str(path)]) == 0

    def test_kpc_grid_accepted(self, tmp_path):
        path, _ = run_config(
            tmp_path,
            classifiers=[{"name": "tuned", "rule": "V_KNN", "kpc_grid": [1, 2, 5]}],
            cv={"n_folds": 4, "n_repeats": 1, "seed": 5},
        )
        assert main(["run", str(path)]) == 0


def write_aggregate(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "classifier", "amr", "af1", "rank_amr", "rank_af1"])
        writer.writerows(rows)


class TestReport:
    def make_dominant_aggregate(self, path):
        rows = []
        for di, ds in enumerate(["d1", "d2", "d3"]):
            rows.append([ds, "champ", f"{0.05 + di * 0.01:.6f}", "0.950000", "1", "1"])
            rows.append([ds, "mid", f"{0.10 + di * 0.01:.6f}", "0.900000", "2", "2"])
            rows.append([ds, "weak", f"{0.20 + di * 0.01:.6f}", "0.800000", "3", "3"])
        write_aggregate(path, rows)

    def test_dominant_classifier_ranks_first(self, tmp_path, capsys):
        agg = tmp_path / "agg.csv"
        self.make_dominant_aggregate(agg)
        out = tmp_path / "rep"
        code = main(["report", str(agg), "--control", "champ", "--out-dir", str(out)])
        assert code == 0
        with open(out / "ranks.csv") as fh:
            rows = [r for r in csv.DictReader(fh) if r["classifier"] == "champ"]
        assert all(float(r["rank_amr"]) == 1.0 for r in rows)
        with open(out / "friedman.csv") as fh:
            stats = list(csv.DictReader(fh))
        assert all(float(r["statistic"]) > 0 for r in stats)
        assert (out / "robustness.csv").exists()
        assert (out / "report.md").exists()

    def test_single_dataset_refuses_friedman(self, tmp_path, capsys):
        agg = tmp_path / "agg.csv"
        write_aggregate(agg, [
            ["only", "a", "0.100000", "0.9", "1", "1"],
            ["only", "b", "0.200000", "0.8", "2", "2"],
        ])
        out = tmp_path / "rep"
        code = main(["report", str(agg), "--control", "a", "--out-dir", str(out)])
        assert code == 1
        assert (out / "ranks.csv").exists()
        assert "at least 2 datasets" in capsys.readouterr().err

    def test_unknown_control_lists_names(self, tmp_path, capsys):
        agg = tmp_path / "agg.csv"
        self.make_dominant_aggregate(agg)
        code = main(["report", str(agg), "--control", "nope",
                     "--out-dir", str(tmp_path / "rep")])
        assert code == 2
        err = capsys.readouterr().err
        assert "champ" in err and "mid" in err

    def test_merging_multiple_aggregates(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_aggregate(a, [
            ["d1", "x", "0.1", "0.9", "1", "1"], ["d1", "y", "0.2", "0.8", "2", "2"],
        ])
        write_aggregate(b, [
            ["d2", "x", "0.3", "0.7", "1", "1"], ["d2", "y", "0.1", "0.9", "2", "2"],
        ])
        out = tmp_path / "rep"
        assert main(["report", str(a), str(b), "--control", "x",
                     "--out-dir", str(out)]) == 0
        with open(out / "ranks.csv") as fh:
            assert len(list(csv.DictReader(fh))) == 4
