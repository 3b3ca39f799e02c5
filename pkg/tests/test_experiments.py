import numpy as np
import pytest

from uplift_rank import SurrogateSpec, TrainConfig, write_canonical_csv
from uplift_rank.experiments import (
    AllSplitsFailed,
    ExperimentConfig,
    aggregate_rows,
    run_bound_gap,
    run_experiment_splits,
    run_one_split,
    split_seed,
    verify_artifacts,
)

from conftest import low_rate_synthetic


@pytest.fixture(scope="module")
def dataset_csv(tmp_path_factory):
    ds = low_rate_synthetic(2500, d=5, seed=61, coef_scale=0.5, uplift_scale=0.6)
    path = tmp_path_factory.mktemp("expdata") / "data.csv"
    write_canonical_csv(ds, str(path))
    return str(path), ds


def quick_config(path, method="auuc-max", num_splits=3, **kw):
    return ExperimentConfig(
        dataset_csv=path,
        method=method,
        num_splits=num_splits,
        lambda_grid=(0.8,),
        lr_grid=(1e-3,),
        l2_grid=(1e-6,),
        surrogate=SurrogateSpec("poly", mu=0.1, p=3),
        train=TrainConfig(batch_size=128, epochs=8, early_stop_patience=4),
        **kw,
    )


class TestSingleSplit:
    def test_row_fields(self, dataset_csv):
        path, ds = dataset_csv
        row = run_one_split(ds, quick_config(path), 0)
        assert row.split == 0
        assert row.method == "auuc-max"
        assert row.bound_lower is not None
        assert len(row.policy_risks) == 9
        assert all(0.0 <= r <= 1.0 for r in row.policy_risks)

    def test_baseline_methods_have_no_bound(self, dataset_csv):
        path, ds = dataset_csv
        row = run_one_split(ds, quick_config(path, method="tm"), 0)
        assert row.bound_lower is None and row.method == "tm"

    def test_cv_selection_method(self, dataset_csv):
        path, ds = dataset_csv
        row = run_one_split(ds, quick_config(path, method="auuc-max-cv", cv_folds=3), 0)
        assert row.method == "auuc-max-cv"
        assert row.bound_lower is None
        assert row.best_lambda == 0.8  # singleton grid

    def test_split_seeds_differ_by_index(self):
        seeds = {split_seed(0, i) for i in range(10)}
        assert len(seeds) == 10

    def test_deterministic_row(self, dataset_csv):
        path, ds = dataset_csv
        a = run_one_split(ds, quick_config(path), 1)
        b = run_one_split(ds, quick_config(path), 1)
        assert a.test_auuc == b.test_auuc and a.bound_lower == b.bound_lower


class TestExperimentRunner:
    def test_artifacts_and_aggregate(self, dataset_csv, tmp_path):
        path, _ = dataset_csv
        out = tmp_path / "exp"
        rows, aggregate = run_experiment_splits(quick_config(path), str(out))
        assert len(rows) == 3
        assert (out / "rows.csv").exists()
        assert (out / "aggregate.json").exists()
        assert (out / "timings.csv").exists()
        assert aggregate["test_auuc_mean"] == pytest.approx(
            np.mean([r.test_auuc for r in rows])
        )
        assert verify_artifacts(str(out / "rows.csv"), str(out / "aggregate.json")) == []

    def test_resume_matches_uninterrupted(self, dataset_csv, tmp_path):
        path, _ = dataset_csv
        full_dir, resumed_dir = tmp_path / "full", tmp_path / "resumed"
        run_experiment_splits(quick_config(path, num_splits=4), str(full_dir))
        run_experiment_splits(quick_config(path, num_splits=2), str(resumed_dir))
        run_experiment_splits(quick_config(path, num_splits=4), str(resumed_dir))
        assert (full_dir / "rows.csv").read_bytes() == (resumed_dir / "rows.csv").read_bytes()
        assert (full_dir / "aggregate.json").read_bytes() == (
            resumed_dir / "aggregate.json"
        ).read_bytes()

    def test_rerun_is_byte_identical(self, dataset_csv, tmp_path):
        path, _ = dataset_csv
        d1, d2 = tmp_path / "a", tmp_path / "b"
        run_experiment_splits(quick_config(path, method="cvt"), str(d1))
        run_experiment_splits(quick_config(path, method="cvt"), str(d2))
        assert (d1 / "rows.csv").read_bytes() == (d2 / "rows.csv").read_bytes()
        assert (d1 / "aggregate.json").read_bytes() == (d2 / "aggregate.json").read_bytes()

    def test_parallel_jobs_match_serial(self, dataset_csv, tmp_path):
        path, _ = dataset_csv
        serial_dir, parallel_dir = tmp_path / "serial", tmp_path / "parallel"
        run_experiment_splits(quick_config(path, num_splits=4), str(serial_dir))
        run_experiment_splits(quick_config(path, num_splits=4, jobs=2), str(parallel_dir))
        assert (serial_dir / "rows.csv").read_bytes() == (parallel_dir / "rows.csv").read_bytes()

    def test_all_splits_failed(self, tmp_path):
        # a dataset too small for the split fractions fails every split
        ds = low_rate_synthetic(12, seed=3)
        path = tmp_path / "tiny.csv"
        write_canonical_csv(ds, str(path))
        cfg = quick_config(str(path), num_splits=2, train_fraction=0.98,
                           validation_fraction=0.01)
        with pytest.raises(AllSplitsFailed):
            run_experiment_splits(cfg, str(tmp_path / "out"))

    def test_aggregate_recompute_detects_tampering(self, dataset_csv, tmp_path):
        path, _ = dataset_csv
        out = tmp_path / "tamper"
        run_experiment_splits(quick_config(path), str(out))
        agg_path = out / "aggregate.json"
        text = agg_path.read_text().replace(
            '"test_auuc_mean": 0.0', '"test_auuc_mean": 9.0'
        )
        import json

        doc = json.loads(agg_path.read_text())
        doc["test_auuc_mean"] = 99.0
        agg_path.write_text(json.dumps(doc))
        problems = verify_artifacts(str(out / "rows.csv"), str(agg_path))
        assert problems and "test_auuc_mean" in problems[0]


class TestBoundGap:
    def test_gap_artifacts(self, dataset_csv, tmp_path):
        path, _ = dataset_csv
        out = tmp_path / "gap"
        gaps, summary = run_bound_gap(quick_config(path, num_splits=4), str(out), num_bins=5)
        assert len(gaps) == 4
        assert (out / "gap_hist.csv").exists()
        assert (out / "gap_summary.json").exists()
        assert summary["mean_gap"] == pytest.approx(float(np.mean(gaps)))
        # histogram counts cover every split
        import csv

        with open(out / "gap_hist.csv") as fh:
            counts = [int(r["count"]) for r in csv.DictReader(fh)]
        assert sum(counts) == 4

    def test_requires_auuc_max(self, dataset_csv, tmp_path):
        path, _ = dataset_csv
        from uplift_rank import DataError

        with pytest.raises(DataError):
            run_bound_gap(quick_config(path, method="tm"), str(tmp_path / "x"))


class TestAggregate:
    def test_2sigma_definition(self, dataset_csv):
        path, ds = dataset_csv
        cfg = quick_config(path)
        rows = [run_one_split(ds, cfg, i) for i in range(3)]
        agg = aggregate_rows(rows)
        auucs = [r.test_auuc for r in rows]
        assert agg["test_auuc_2sigma"] == pytest.approx(2 * np.std(auucs, ddof=1))
