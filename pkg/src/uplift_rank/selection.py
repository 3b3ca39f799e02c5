"""Hyperparameter selection for the max-norm ranker.

Two selectors over the same (lambda_cap, learning_rate) grid:

* by bound: train once per grid point and keep the point whose
  training-set AUUC lower bound is largest -- no inner folds, so the
  whole selection costs one training per point;
* by cross-validation: the usual k-fold mean validation AUUC, costing k
  trainings per point.

Both record per-point values and wall times so the efficiency claim is
checkable.  Statistical utilities used by the experiment protocols (the
exact binomial sign test and the empirical-Bernstein mean upper bound)
live here too.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .bound import BoundReport, auuc_lower_bound, function_class_for
from .data import DataError, UpliftDataset
from .metrics import auuc
from .models import LinearScorer, config_digest
from .optimizer import TrainConfig, TrainingLog, train_ranker


@dataclass(frozen=True)
class GridSpec:
    lambda_grid: list[float]
    lr_grid: list[float]
    template: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if not self.lambda_grid or not self.lr_grid:
            raise DataError("both grids must be non-empty")

    def points(self):
        for lam in self.lambda_grid:
            for lr in self.lr_grid:
                yield lam, lr


@dataclass(frozen=True)
class GridPointRecord:
    lambda_cap: float
    learning_rate: float
    value: float | None
    wall_time: float
    bound_report: BoundReport | None = None
    error: str | None = None


@dataclass(frozen=True)
class SelectionResult:
    best_weights: np.ndarray
    best_lambda: float
    best_learning_rate: float
    best_value: float
    criterion: str  # "bound" or "cv"
    records: list[GridPointRecord]
    wall_time: float
    best_training_log: TrainingLog | None = None

    def best_scorer(self, feature_names: list[str] | None = None) -> LinearScorer:
        return LinearScorer(
            self.best_weights,
            feature_names=feature_names,
            meta={"lambda_cap": self.best_lambda,
                  "train_digest": config_digest(
                      (self.criterion, self.best_lambda, self.best_learning_rate))},
        )

    def records_csv_rows(self):
        rows = [("lambda_cap", "learning_rate", "value", "error")]
        rows += [
            (r.lambda_cap, r.learning_rate,
             "" if r.value is None else repr(r.value), r.error or "")
            for r in self.records
        ]
        return rows

    def to_dict(self, include_timings: bool = True) -> dict:
        doc = {
            "criterion": self.criterion,
            "best_lambda": self.best_lambda,
            "best_learning_rate": self.best_learning_rate,
            "best_value": self.best_value,
            "weights": [float(v) for v in self.best_weights],
            "records": [
                {
                    "lambda_cap": r.lambda_cap,
                    "learning_rate": r.learning_rate,
                    "value": r.value,
                    "error": r.error,
                    **({"wall_time": r.wall_time} if include_timings else {}),
                }
                for r in self.records
            ],
        }
        if include_timings:
            doc["wall_time"] = self.wall_time
        return doc


def _point_seed(base_seed: int, index: int) -> int:
    # independent stream per grid point, stable under scheduling order
    return int(np.random.SeedSequence((base_seed, index)).generate_state(1)[0])


def _argmax_records(records: list[GridPointRecord]):
    """Largest value; ties broken by smaller lambda, then smaller rate."""
    best = None
    for rec in records:
        if rec.value is None:
            continue
        key = (-rec.value, rec.lambda_cap, rec.learning_rate)
        if best is None or key < best[0]:
            best = (key, rec)
    if best is None:
        raise DataError("every grid point failed: " + "; ".join(r.error or "?" for r in records))
    return best[1]


def run_auuc_max(
    train: UpliftDataset,
    validation: UpliftDataset,
    grid: GridSpec,
    delta: float = 0.05,
) -> SelectionResult:
    """Grid search selected by the training-set AUUC lower bound."""
    t_start = time.perf_counter()
    records: list[GridPointRecord] = []
    weights_by_point: dict[int, np.ndarray] = {}
    logs_by_point: dict[int, TrainingLog] = {}
    for idx, (lam, lr) in enumerate(grid.points()):
        t0 = time.perf_counter()
        try:
            cfg = replace(
                grid.template,
                lambda_cap=lam,
                learning_rate=lr,
                seed=_point_seed(grid.template.seed, idx),
            )
            w, log = train_ranker(train, validation, cfg)
            report = auuc_lower_bound(
                LinearScorer(w), train, function_class_for(train, lam), delta
            )
            weights_by_point[idx] = w
            logs_by_point[idx] = log
            records.append(
                GridPointRecord(lam, lr, report.lower_bound, time.perf_counter() - t0, report)
            )
        except DataError as exc:
            records.append(GridPointRecord(lam, lr, None, time.perf_counter() - t0, error=str(exc)))
    best = _argmax_records(records)
    best_idx = records.index(best)
    return SelectionResult(
        best_weights=weights_by_point[best_idx],
        best_lambda=best.lambda_cap,
        best_learning_rate=best.learning_rate,
        best_value=best.value,
        criterion="bound",
        records=records,
        wall_time=time.perf_counter() - t_start,
        best_training_log=logs_by_point[best_idx],
    )


def stratified_folds(ds: UpliftDataset, k: int, seed: int) -> list[np.ndarray]:
    """Row-index folds balanced within each treatment arm."""
    if k < 2:
        raise DataError("k_folds must be >= 2")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 104729)))
    folds: list[list[np.ndarray]] = [[] for _ in range(k)]
    for flag in (1, 0):
        rows = np.flatnonzero(ds.treatment == flag)
        perm = rows[rng.permutation(rows.size)]
        for j in range(k):
            folds[j].append(perm[j::k])
    return [np.sort(np.concatenate(parts)) for parts in folds]


def select_by_cv(
    train: UpliftDataset,
    grid: GridSpec,
    k_folds: int = 5,
) -> SelectionResult:
    """Grid search by mean held-out-fold AUUC, then refit on all of train.

    Folds are stratified by treatment.  Within a fold the held-out part
    doubles as the early-stopping validation set, matching how the grid
    value is measured.  The winning configuration is refit on the full
    training set with a fresh stratified 80/20 early-stop split.
    """

    t_start = time.perf_counter()
    folds = stratified_folds(train, k_folds, grid.template.seed)
    all_rows = np.arange(train.n)
    records: list[GridPointRecord] = []
    for idx, (lam, lr) in enumerate(grid.points()):
        t0 = time.perf_counter()
        try:
            cfg = replace(
                grid.template,
                lambda_cap=lam,
                learning_rate=lr,
                seed=_point_seed(grid.template.seed, idx),
            )
            fold_scores = []
            for fold_rows in folds:
                fit_part = train.subset(np.setdiff1d(all_rows, fold_rows))
                held_out = train.subset(fold_rows)
                w, _ = train_ranker(fit_part, held_out, cfg)
                fold_scores.append(auuc(LinearScorer(w), held_out))
            records.append(
                GridPointRecord(lam, lr, float(np.mean(fold_scores)), time.perf_counter() - t0)
            )
        except DataError as exc:
            records.append(GridPointRecord(lam, lr, None, time.perf_counter() - t0, error=str(exc)))
    best = _argmax_records(records)
    best_idx = records.index(best)
    from .data import SplitSpec, split  # local import to avoid a cycle at module load

    refit_cfg = replace(
        grid.template,
        lambda_cap=best.lambda_cap,
        learning_rate=best.learning_rate,
        seed=_point_seed(grid.template.seed, best_idx),
    )
    fit_part, _, early_stop = split(
        train, SplitSpec(train_fraction=0.8, validation_fraction=0.0, seed=refit_cfg.seed)
    )
    w, refit_log = train_ranker(fit_part, early_stop, refit_cfg)
    return SelectionResult(
        best_weights=w,
        best_lambda=best.lambda_cap,
        best_learning_rate=best.learning_rate,
        best_value=best.value,
        criterion="cv",
        records=records,
        wall_time=time.perf_counter() - t_start,
        best_training_log=refit_log,
    )


# ---------------------------------------------------------------------------
# Statistical utilities
# ---------------------------------------------------------------------------

def binomial_sign_test(paired_metric_a, paired_metric_b, alpha: float = 0.05):
    """One-sided exact sign test for "a beats b" on paired metrics.

    Ties are dropped; the p-value is P[Bin(m, 1/2) >= wins_a] computed
    exactly.  ``alpha`` is the test level, so the 95% comparisons use the
    default 0.05 threshold.  Returns (wins_a, p_value, significant).
    """

    a = np.asarray(paired_metric_a, dtype=np.float64)
    b = np.asarray(paired_metric_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise DataError("paired metric vectors must be equal-length and non-empty")
    non_tied = a != b
    m = int(non_tied.sum())
    if m == 0:
        raise DataError("all pairs are tied; sign test undefined")
    wins = int((a[non_tied] > b[non_tied]).sum())
    numerator = sum(math.comb(m, k) for k in range(wins, m + 1))
    p_value = float(Fraction(numerator, 2**m))
    return wins, p_value, p_value < alpha


def empirical_bernstein_upper(samples, delta: float, value_range=(0.0, 1.0)) -> float:
    """Variance-adaptive high-probability upper bound on the true mean.

    mean + (b-a) * [sqrt(2 V ln(2/d) / n) + 7 ln(2/d) / (3 (n-1))] with V
    the unbiased sample variance of the values rescaled to [0, 1].
    """

    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise DataError("need at least two samples")
    if not 0.0 < delta < 1.0:
        raise DataError("delta must lie strictly inside (0, 1)")
    lo, hi = float(value_range[0]), float(value_range[1])
    if not hi > lo:
        raise DataError("value range must satisfy b > a")
    u = (x - lo) / (hi - lo)
    if u.min() < -1e-12 or u.max() > 1.0 + 1e-12:
        raise DataError("samples fall outside the declared range")
    n = x.size
    log_term = math.log(2.0 / delta)
    v_hat = float(u.var(ddof=1))
    penalty = math.sqrt(2.0 * v_hat * log_term / n) + 7.0 * log_term / (3.0 * (n - 1))
    return float(x.mean()) + (hi - lo) * penalty


def grid_digest(grid: GridSpec) -> str:
    return config_digest((grid.lambda_grid, grid.lr_grid, grid.template))
