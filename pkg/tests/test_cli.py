"""End-to-end command-line behavior, exercised in process via main()."""

import json

import numpy as np
import pytest

from proxqrf import NumericError, save_csv
from proxqrf.cli import main

from conftest import make_dataset

SMALL = ["--trees", "5", "--max-depth", "3"]


@pytest.fixture()
def train_csv(tmp_path):
    path = tmp_path / "train.csv"
    save_csv(make_dataset(n=40, p=3, seed=12), path)
    return path


@pytest.fixture()
def model_file(tmp_path, train_csv):
    path = tmp_path / "model.json"
    code = main(["train", "--data", str(train_csv), "--target", "target",
                 "--out", str(path), *SMALL])
    assert code == 0
    return path


def query_csv(tmp_path, columns, rows):
    path = tmp_path / "query.csv"
    lines = [",".join(columns)]
    lines += [",".join(repr(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestTrain:

    def test_writes_model_and_summary(self, tmp_path, train_csv, capsys):
        out = tmp_path / "m.json"
        code = main(["train", "--data", str(train_csv), "--target",
                     "target", "--out", str(out), *SMALL])
        assert code == 0
        assert out.exists()
        captured = capsys.readouterr()
        assert "n=40" in captured.out and "trees=5" in captured.out

    def test_missing_data_file_exits_2(self, tmp_path):
        code = main(["train", "--data", str(tmp_path / "nope.csv"),
                     "--target", "y", "--out", str(tmp_path / "m.json")])
        assert code == 2

    def test_missing_required_flag_exits_1(self, train_csv):
        code = main(["train", "--data", str(train_csv), "--target",
                     "target"])
        assert code == 1


class TestPredict:

    def test_emits_quantiles_and_interval(self, tmp_path, model_file,
                                          capsys):
        q = query_csv(tmp_path, ["x0", "x1", "x2"],
                      [[0.0, 0.0, 0.0], [1.0, -1.0, 0.5]])
        code = main(["predict", "--model", str(model_file), "--data",
                     str(q), "--scheme", "gap", "--alphas", "0.25,0.5"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "query,q@0.25,q@0.5,lower,upper,width,defined"
        assert len(lines) == 3
        for line in lines[1:]:
            cells = line.split(",")
            assert cells[-1] == "1"
            q25, q50 = float(cells[1]), float(cells[2])
            lower, upper = float(cells[3]), float(cells[4])
            assert lower <= q25 <= q50 <= upper

    def test_query_columns_may_be_reordered(self, tmp_path, model_file):
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        qa = query_csv(tmp_path, ["x0", "x1", "x2"], [[0.1, 0.2, 0.3]])
        assert main(["predict", "--model", str(model_file), "--data",
                     str(qa), "--out", str(out_a)]) == 0
        qb = query_csv(tmp_path, ["x2", "x0", "x1"], [[0.3, 0.1, 0.2]])
        assert main(["predict", "--model", str(model_file), "--data",
                     str(qb), "--out", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_missing_feature_column_exits_2(self, tmp_path, model_file):
        q = query_csv(tmp_path, ["x0", "x1"], [[0.1, 0.2]])
        code = main(["predict", "--model", str(model_file), "--data",
                     str(q)])
        assert code == 2

    def test_unknown_scheme_exits_1(self, tmp_path, model_file):
        q = query_csv(tmp_path, ["x0", "x1", "x2"], [[0.0, 0.0, 0.0]])
        code = main(["predict", "--model", str(model_file), "--data",
                     str(q), "--scheme", "euclid"])
        assert code == 1


class TestBenchmark:

    def args(self, train_csv, extra=()):
        return ["benchmark", "--data", str(train_csv), "--target",
                "target", "--schemes", "qrf,gap", "--cv", "kfold:3",
                *SMALL, *extra]

    def test_text_to_stdout(self, train_csv, capsys):
        assert main(self.args(train_csv)) == 0
        out = capsys.readouterr().out
        assert "qrf" in out and "gap" in out and "train" in out

    def test_csv_report_file(self, tmp_path, train_csv):
        report = tmp_path / "r.csv"
        code = main(self.args(train_csv,
                              ["--format", "csv", "--report", str(report)]))
        assert code == 0
        lines = report.read_text().strip().splitlines()
        assert len(lines) == 3

    def test_repeat_runs_are_byte_identical(self, tmp_path, train_csv):
        r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
        for path in (r1, r2):
            assert main(self.args(train_csv, ["--format", "json",
                                              "--report", str(path)])) == 0
        assert r1.read_bytes() == r2.read_bytes()

    def test_sliding_cv(self, train_csv, capsys):
        code = main(["benchmark", "--data", str(train_csv), "--target",
                     "target", "--schemes", "qrf", "--cv", "sliding:3",
                     *SMALL])
        assert code == 0
        assert "sliding-window" in capsys.readouterr().out

    def test_bad_cv_string_exits_1(self, train_csv):
        assert main(self.args(train_csv)[:-2] + ["--cv", "loo"]) == 1

    def test_numeric_failure_exits_3(self, train_csv, monkeypatch):
        from proxqrf import bench

        def boom(*a, **k):
            raise NumericError("synthetic numeric failure")

        monkeypatch.setattr(bench, "run_benchmark", boom)
        assert main(self.args(train_csv)) == 3


class TestConfigFile:

    def test_config_supplies_defaults_and_flags_win(self, tmp_path,
                                                    train_csv, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"trees": 7, "max_depth": 3}))
        out = tmp_path / "m.json"
        code = main(["train", "--data", str(train_csv), "--target",
                     "target", "--out", str(out), "--config", str(config)])
        assert code == 0
        assert "trees=7" in capsys.readouterr().out
        code = main(["train", "--data", str(train_csv), "--target",
                     "target", "--out", str(out), "--config", str(config),
                     "--trees", "4"])
        assert code == 0
        assert "trees=4" in capsys.readouterr().out

    def test_unknown_config_key_exits_1(self, tmp_path, train_csv):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"n_estimators": 7}))
        out = tmp_path / "m.json"
        code = main(["train", "--data", str(train_csv), "--target",
                     "target", "--out", str(out), "--config", str(config)])
        assert code == 1

    def test_malformed_config_exits_1(self, tmp_path, train_csv):
        config = tmp_path / "config.json"
        config.write_text("{not json")
        code = main(["train", "--data", str(train_csv), "--target",
                     "target", "--out", str(tmp_path / "m.json"),
                     "--config", str(config)])
        assert code == 1


class TestOtherCommands:

    def test_grid_search_text_and_json(self, tmp_path, train_csv, capsys):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({
            "n_trees": [4, 8], "max_depth": [3],
            "min_samples_leaf": [1], "min_samples_split": [2]}))
        code = main(["grid-search", "--data", str(train_csv), "--target",
                     "target", "--grid", str(grid), "--cv", "3"])
        assert code == 0
        text = capsys.readouterr().out
        assert "best" in text.lower()
        code = main(["grid-search", "--data", str(train_csv), "--target",
                     "target", "--grid", str(grid), "--cv", "3",
                     "--format", "json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["table"]) == 2

    def test_criterion_study_shape(self, tmp_path, train_csv):
        report = tmp_path / "crit.csv"
        code = main(["criterion-study", "--data", str(train_csv),
                     "--target", "target", "--seeds", "2", "--cv", "3",
                     "--alphas", "0.25,0.5,0.75", "--trees", "4",
                     "--max-depth", "3", "--format", "csv", "--report",
                     str(report)])
        assert code == 0
        lines = report.read_text().strip().splitlines()
        assert len(lines) == 1 + 4 * 3 * 3

    def test_interval_report(self, tmp_path, train_csv):
        report = tmp_path / "iv.csv"
        code = main(["interval-report", "--data", str(train_csv),
                     "--target", "target", "--scheme", "gap", "--cv",
                     "kfold:3", *SMALL, "--format", "csv", "--report",
                     str(report)])
        assert code == 0
        lines = report.read_text().strip().splitlines()
        assert lines[0].startswith("rank,")
        assert len(lines) > 1


class TestTopLevel:

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0

    def test_no_subcommand_exits_1(self):
        assert main([]) == 1

    def test_unknown_subcommand_exits_1(self):
        assert main(["transmogrify"]) == 1
