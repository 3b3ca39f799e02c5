import numpy as np
import pytest

from uplift_rank import (
    DataError,
    SplitSpec,
    SurrogateSpec,
    TrainConfig,
    UpliftDataset,
    group_stats,
    group_view,
    project_max_norm,
    split,
    train_ranker,
)
from uplift_rank.metrics import view_ranking_risk
from uplift_rank.optimizer import pairwise_grad, pairwise_loss

from conftest import low_rate_synthetic

LOG = SurrogateSpec("log")
POLY = SurrogateSpec("poly", mu=0.1, p=3)


def views_of(ds):
    return group_view(ds, "T"), group_view(ds, "C", revert=True)


class TestProjection:
    def test_interior_point_unchanged(self):
        w = np.array([0.3, 0.4])
        assert project_max_norm(w, 1.0) is w

    def test_three_four_five(self):
        np.testing.assert_allclose(project_max_norm(np.array([3.0, 4.0]), 1.0), [0.6, 0.8])

    def test_idempotent(self):
        w = np.array([5.0, -2.0, 1.0])
        once = project_max_norm(w, 0.7)
        twice = project_max_norm(once, 0.7)
        np.testing.assert_allclose(once, twice)


class TestPairwiseObjective:
    def test_zero_weight_saturation(self):
        ds = low_rate_synthetic(200, seed=1)
        vt, vc = views_of(ds)
        assert pairwise_loss(np.zeros(ds.d), vt, vc, LOG) == pytest.approx(2.0)

    def test_weighted_zero_weight(self):
        ds = low_rate_synthetic(200, seed=1)
        vt, vc = views_of(ds)
        stats = group_stats(ds)
        expected = stats.lambda_t + stats.lambda_c
        assert pairwise_loss(np.zeros(ds.d), vt, vc, LOG, True, stats) == pytest.approx(expected)

    def test_benchmark_weighted_value(self):
        from uplift_rank import GroupStats

        stats = GroupStats(0.1514, 0.10617)
        assert stats.lambda_t + stats.lambda_c == pytest.approx(0.22338, abs=1e-5)

    def test_separable_poly_reaches_flat_region(self):
        # separating direction with margin > mu zeroes the poly loss
        x = np.vstack([np.full((5, 1), 2.0), np.full((5, 1), -2.0)] * 2)
        t = np.r_[np.ones(10), np.zeros(10)].astype(int)
        y = np.r_[np.ones(5), np.zeros(5), np.zeros(5), np.ones(5)].astype(int)
        ds = UpliftDataset(x, t, y, ["a"])
        vt, vc = views_of(ds)
        assert pairwise_loss(np.array([1.0]), vt, vc, POLY) == 0.0

    def test_identical_features_zero_gradient(self):
        ds = UpliftDataset(np.ones((8, 2)), [1, 1, 1, 1, 0, 0, 0, 0],
                           [1, 0, 1, 0, 1, 0, 1, 0], ["a", "b"])
        vt, vc = views_of(ds)
        np.testing.assert_allclose(pairwise_grad(np.zeros(2), vt, vc, LOG), 0.0)

    def test_single_pair_closed_form(self):
        x = np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
        ds = UpliftDataset(x, [1, 1, 0, 0], [1, 0, 0, 1], ["a", "b"])
        vt, vc = views_of(ds)
        grad = pairwise_grad(np.zeros(2), vt, vc, LOG)
        # each group contributes one pair with difference e1
        np.testing.assert_allclose(grad, [-2.0 / (2.0 * np.log(2.0)), 0.0])

    def test_mirrored_pairs_double_the_direction(self):
        # every positive at +x has its negative at -x, so the w=0 gradient
        # is s'(0) * 2 * mean(positive direction) per group
        rng = np.random.default_rng(8)
        xp = rng.normal(size=(6, 3))
        x = np.vstack([xp, -xp, xp, -xp])
        t = np.r_[np.ones(12), np.zeros(12)].astype(int)
        y = np.r_[np.ones(6), np.zeros(6), np.zeros(6), np.ones(6)].astype(int)
        ds = UpliftDataset(x, t, y, ["a", "b", "c"])
        vt, vc = views_of(ds)
        grad = pairwise_grad(np.zeros(3), vt, vc, LOG)
        expected = 2.0 * (-1.0 / (2.0 * np.log(2.0))) * 2.0 * xp.mean(axis=0)
        np.testing.assert_allclose(grad, expected, rtol=1e-10)

    @pytest.mark.parametrize("spec", [LOG, POLY, SurrogateSpec("poly", mu=1.0, p=3)])
    def test_gradient_matches_finite_differences(self, spec):
        rng = np.random.default_rng(17)
        ds = low_rate_synthetic(180, d=6, seed=31)
        vt, vc = views_of(ds)
        w = rng.normal(size=6) * 0.4
        grad = pairwise_grad(w, vt, vc, spec)
        h = 1e-6
        for j in rng.choice(6, size=6, replace=False):
            e = np.zeros(6)
            e[j] = h
            fd = (pairwise_loss(w + e, vt, vc, spec) - pairwise_loss(w - e, vt, vc, spec)) / (2 * h)
            assert grad[j] == pytest.approx(fd, rel=1e-5, abs=1e-10)

    def test_dominating_surrogate_bounds_zero_one_risks(self):
        ds = low_rate_synthetic(250, seed=41)
        vt, vc = views_of(ds)
        rng = np.random.default_rng(3)
        for spec in (LOG, SurrogateSpec("poly", mu=1.0, p=3)):
            for _ in range(5):
                w = rng.normal(size=ds.d)
                scores = ds.features @ w
                risks = view_ranking_risk(scores, vt, "full") + view_ranking_risk(
                    scores, vc, "full"
                )
                assert pairwise_loss(w, vt, vc, spec) >= risks - 1e-12

    def test_missing_class_errors(self):
        ds = UpliftDataset(np.ones((4, 1)), [1, 1, 0, 0], [1, 1, 0, 1], ["a"])
        vt, vc = views_of(ds)
        with pytest.raises(DataError):
            pairwise_loss(np.zeros(1), vt, vc, LOG)


class TestTraining:
    def make_parts(self, n=2500, seed=5):
        ds = low_rate_synthetic(n, d=5, seed=seed, coef_scale=0.5, uplift_scale=0.6)
        tr, _, va = split(ds, SplitSpec(0.75, 0.0, seed=2))
        return ds, tr, va

    def test_descent_on_easy_problem(self):
        ds, tr, va = self.make_parts()
        cfg = TrainConfig(learning_rate=5e-3, batch_size=128, epochs=25,
                          surrogate=POLY, seed=7)
        w, log = train_ranker(tr, va, cfg)
        vt, vc = views_of(tr)
        assert pairwise_loss(w, vt, vc, POLY) < pairwise_loss(np.zeros(tr.d), vt, vc, POLY)

    def test_determinism(self):
        ds, tr, va = self.make_parts()
        cfg = TrainConfig(learning_rate=2e-3, batch_size=64, epochs=8, seed=99)
        w1, _ = train_ranker(tr, va, cfg)
        w2, _ = train_ranker(tr, va, cfg)
        assert np.array_equal(w1, w2)

    def test_norm_constraint_after_training(self):
        ds, tr, va = self.make_parts()
        cfg = TrainConfig(learning_rate=0.5, batch_size=64, epochs=6,
                          lambda_cap=0.3, seed=1)
        w, log = train_ranker(tr, va, cfg)
        assert np.linalg.norm(w) <= 0.3 * (1 + 1e-12)
        assert all(r.weight_norm <= 0.3 * (1 + 1e-12) for r in log.records)

    def test_best_snapshot_has_minimal_validation_loss(self):
        ds, tr, va = self.make_parts()
        cfg = TrainConfig(learning_rate=5e-3, batch_size=64, epochs=20, seed=3)
        w, log = train_ranker(tr, va, cfg)
        assert log.best_val_loss == pytest.approx(min(r.val_loss for r in log.records))
        vt, vc = views_of(va)
        assert pairwise_loss(w, vt, vc, cfg.surrogate) == pytest.approx(log.best_val_loss)

    def test_early_stopping_stops(self):
        # a large step size makes validation loss oscillate, so patience runs out
        ds, tr, va = self.make_parts(n=800)
        cfg = TrainConfig(learning_rate=0.8, batch_size=32, epochs=200,
                          early_stop_patience=3, seed=5)
        _, log = train_ranker(tr, va, cfg)
        assert len(log.records) < 200
        best = min(r.val_loss for r in log.records)
        assert log.best_val_loss == pytest.approx(best)

    def test_config_validation(self):
        with pytest.raises(DataError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(DataError):
            TrainConfig(epochs=0)
        with pytest.raises(DataError):
            TrainConfig(lambda_cap=-1.0)

    def test_training_log_csv_shape(self):
        ds, tr, va = self.make_parts(n=600)
        cfg = TrainConfig(epochs=4, batch_size=32, seed=2)
        _, log = train_ranker(tr, va, cfg)
        rows = log.as_csv_rows()
        assert rows[0] == ("epoch", "train_loss", "val_loss", "lr", "weight_norm")
        assert len(rows) == len(log.records) + 1
