import json

import pytest
from click.testing import CliRunner

from uplift_rank.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args, **kw):
    result = runner.invoke(main, args, catch_exceptions=False, **kw)
    return result


class TestGenerateAndPrepare:
    def test_generate_synthetic(self, runner, tmp_path):
        out = tmp_path / "synth.csv"
        result = invoke(runner, ["generate", "synthetic", "--n", "200", "--d", "3",
                                 "--output", str(out)])
        assert result.exit_code == 0
        assert out.exists()

    def test_generate_campaign_and_prepare(self, runner, tmp_path):
        raw = tmp_path / "raw.csv"
        result = invoke(runner, ["generate", "email-campaign", "--scale", "0.02",
                                 "--seed", "4", "--output", str(raw)])
        assert result.exit_code == 0
        data = tmp_path / "data.csv"
        schema = tmp_path / "schema.json"
        result = invoke(runner, ["prepare", "--input", str(raw), "--output", str(data),
                                 "--schema-out", str(schema)])
        assert result.exit_code == 0, result.output
        assert "22 features" in result.output
        doc = json.loads(schema.read_text())
        assert doc["dim"] == 22

    def test_prepare_missing_file_exits_3(self, runner, tmp_path):
        result = runner.invoke(main, ["prepare", "--input", str(tmp_path / "nope.csv"),
                                      "--output", str(tmp_path / "o.csv")])
        assert result.exit_code == 3


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    runner = CliRunner()
    path = tmp_path_factory.mktemp("clidata") / "synth.csv"
    result = runner.invoke(main, [
        "generate", "synthetic", "--n", "2500", "--d", "5",
        "--coef-base", "0.4,-0.3,0.2,0.0,0.1", "--coef-uplift", "0.5,0.4,0.0,-0.3,0.0",
        "--seed", "12", "--output", str(path),
    ], catch_exceptions=False)
    assert result.exit_code == 0
    return str(path)


class TestTrainEvaluateBound:
    def test_full_flow(self, runner, tmp_path, synth_csv):
        model = tmp_path / "model.json"
        result = invoke(runner, [
            "train", "--data", synth_csv, "--method", "auuc-max",
            "--lambda-grid", "0.8", "--lr-grid", "1e-3", "--epochs", "8",
            "--batch-size", "128", "--output-model", str(model),
            "--selection-out", str(tmp_path / "sel.json"),
        ])
        assert result.exit_code == 0, result.output
        doc = json.loads(model.read_text())
        assert doc["type"] == "linear" and doc["version"] == "1"

        out_dir = tmp_path / "eval"
        result = invoke(runner, ["evaluate", "--data", synth_csv, "--model", str(model),
                                 "--output-dir", str(out_dir)])
        assert result.exit_code == 0
        assert (out_dir / "uplift_curve.csv").exists()
        assert (out_dir / "policy_risk.csv").exists()
        metrics = json.loads((out_dir / "metrics.json").read_text())
        assert "auuc" in metrics and len(metrics["policy_risk"]) == 9

        result = invoke(runner, ["bound", "--data", synth_csv, "--model", str(model),
                                 "--lambda-cap", "0.8"])
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report["lower_bound"] <= report["gamma"]

    def test_train_tm_and_cvt(self, runner, tmp_path, synth_csv):
        for method in ("tm", "cvt"):
            model = tmp_path / f"{method}.json"
            result = invoke(runner, ["train", "--data", synth_csv, "--method", method,
                                     "--epochs", "6", "--output-model", str(model)])
            assert result.exit_code == 0, result.output
            assert json.loads(model.read_text())["type"] == {"tm": "two_model", "cvt": "cvt"}[method]

    def test_bad_grid_exits_2(self, runner, tmp_path, synth_csv):
        result = runner.invoke(main, ["train", "--data", synth_csv,
                                      "--lambda-grid", "abc",
                                      "--output-model", str(tmp_path / "m.json")])
        assert result.exit_code == 2


class TestExperimentCommands:
    def test_splits_and_verify(self, runner, tmp_path, synth_csv):
        out = tmp_path / "exp"
        result = invoke(runner, [
            "experiment", "splits", "--data", synth_csv, "--method", "cvt",
            "--num-splits", "2", "--output-dir", str(out),
            "--config", self._config(tmp_path, synth_csv),
        ])
        assert result.exit_code == 0, result.output
        result = invoke(runner, ["verify", "--rows", str(out / "rows.csv"),
                                 "--aggregate", str(out / "aggregate.json")])
        assert result.exit_code == 0
        assert "matches" in result.output

    def test_bound_gap(self, runner, tmp_path, synth_csv):
        out = tmp_path / "gap"
        result = invoke(runner, [
            "experiment", "bound-gap", "--data", synth_csv, "--num-splits", "3",
            "--output-dir", str(out), "--config", self._config(tmp_path, synth_csv),
        ])
        assert result.exit_code == 0, result.output
        assert (out / "gap_summary.json").exists()

    def test_unknown_method_exits_2(self, runner, tmp_path, synth_csv):
        result = runner.invoke(main, [
            "experiment", "splits", "--data", synth_csv, "--output-dir",
            str(tmp_path / "x"), "--config", self._bad_config(tmp_path),
        ])
        assert result.exit_code == 2

    def test_missing_data_exits_3(self, runner, tmp_path):
        result = runner.invoke(main, [
            "experiment", "splits", "--data", str(tmp_path / "missing.csv"),
            "--num-splits", "1", "--output-dir", str(tmp_path / "y"),
        ])
        assert result.exit_code == 3

    def test_all_splits_failed_exits_4(self, runner, tmp_path):
        # a single control row cannot reach both train and test in any split
        import numpy as np

        from uplift_rank import UpliftDataset, write_canonical_csv

        ds = UpliftDataset(np.random.default_rng(0).normal(size=(12, 2)),
                           [1] * 11 + [0], [0, 1] * 6, ["f0", "f1"])
        tiny = tmp_path / "tiny.csv"
        write_canonical_csv(ds, str(tiny))
        result = runner.invoke(main, [
            "experiment", "splits", "--data", str(tiny), "--method", "cvt",
            "--num-splits", "2", "--output-dir", str(tmp_path / "z"),
        ])
        assert result.exit_code == 4

    @staticmethod
    def _config(tmp_path, synth_csv):
        path = tmp_path / "cfg.json"
        if not path.exists():
            path.write_text(json.dumps({
                "dataset_csv": synth_csv,
                "lambda_grid": [0.8],
                "lr_grid": [1e-3],
                "l2_grid": [1e-6],
                "train": {"batch_size": 128, "epochs": 6, "early_stop_patience": 3},
            }))
        return str(path)

    @staticmethod
    def _bad_config(tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"method": "gradient-boost"}))
        return str(path)


class TestDeterminism:
    def test_repeat_runs_are_byte_identical(self, runner, tmp_path, synth_csv):
        outputs = []
        for tag in ("one", "two"):
            out = tmp_path / tag
            model = out / "model.json"
            out.mkdir()
            invoke(runner, ["train", "--data", synth_csv, "--method", "auuc-max",
                            "--lambda-grid", "0.8", "--lr-grid", "1e-3",
                            "--epochs", "6", "--batch-size", "128",
                            "--output-model", str(model),
                            "--selection-out", str(out / "sel.json")])
            invoke(runner, ["evaluate", "--data", synth_csv, "--model", str(model),
                            "--output-dir", str(out / "eval")])
            outputs.append(out)
        for name in ("model.json", "sel.json", "eval/metrics.json",
                     "eval/uplift_curve.csv", "eval/policy_risk.csv"):
            a = (outputs[0] / name).read_bytes()
            b = (outputs[1] / name).read_bytes()
            assert a == b, f"{name} differs between identical runs"
