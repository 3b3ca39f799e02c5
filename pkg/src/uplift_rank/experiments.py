"""Repeated-split experiment protocols.

Each split draws a fresh stratified train/validation/test partition from
a master seed, runs one method end-to-end (training, hyperparameter
selection, test evaluation) and records the per-split metrics.  Rows are
written incrementally so an interrupted run resumes where it stopped,
and all deterministic artifacts exclude wall times (those go to a
sidecar file) so reruns under the same master seed are byte-identical.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .artifacts import atomic_write_json, atomic_write_text, read_json
from .data import DataError, SplitSpec, UpliftDataset, load_canonical_csv, split
from .metrics import auuc, policy_risk
from .models import fit_cvt, fit_two_model
from .optimizer import TrainConfig
from .selection import GridSpec, empirical_bernstein_upper, run_auuc_max
from .surrogates import SurrogateSpec

METHODS = ("auuc-max", "auuc-max-cv", "tm", "cvt")
POLICY_RATIOS = [round(0.1 * k, 1) for k in range(1, 10)]


class AllSplitsFailed(Exception):
    """Raised when no split of an experiment produced a result row."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_csv: str
    method: str = "auuc-max"
    num_splits: int = 20
    train_fraction: float = 0.56
    validation_fraction: float = 0.14
    delta: float = 0.05
    master_seed: int = 0
    lambda_grid: tuple[float, ...] = (0.5, 0.8, 1.0)
    lr_grid: tuple[float, ...] = (5e-4, 1e-3)
    l2_grid: tuple[float, ...] = (0.0, 1e-6, 1e-4)
    surrogate: SurrogateSpec = field(default_factory=SurrogateSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    cv_folds: int = 5
    jobs: int = 1
    # a-priori envelope of per-split AUUC for the Bernstein mean estimate;
    # the decomposition confines AUUC to [gamma - lambda_t - lambda_c, gamma],
    # which this covers for outcome rates up to ~1/3
    eb_value_range: tuple[float, float] = (-0.1, 0.25)

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"unknown method {self.method!r}; pick one of {METHODS}")
        if self.num_splits < 1:
            raise DataError("num_splits must be >= 1")


@dataclass(frozen=True)
class SplitRow:
    split: int
    seed: int
    method: str
    test_auuc: float
    bound_lower: float | None
    best_lambda: float | None
    best_learning_rate: float | None
    policy_risks: tuple[float, ...]
    train_seconds: float


ROW_FIELDS = ["split", "seed", "method", "test_auuc", "bound_lower", "best_lambda",
              "best_learning_rate"] + [f"policy_risk_{r}" for r in POLICY_RATIOS]


def split_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence((master_seed, 7919, index)).generate_state(1)[0])


def _grid_for(cfg: ExperimentConfig, seed: int) -> GridSpec:
    template = replace(cfg.train, surrogate=cfg.surrogate, seed=seed)
    return GridSpec(list(cfg.lambda_grid), list(cfg.lr_grid), template)


def _select_baseline(train_ds, val_ds, cfg: ExperimentConfig, seed: int, fit_fn):
    """Pick (learning rate, l2) by validation AUUC, as in the outer protocol."""
    best = None
    for i, lr in enumerate(cfg.lr_grid):
        for j, l2 in enumerate(cfg.l2_grid):
            opt = replace(cfg.train, learning_rate=lr, lambda_cap=1.0,
                          seed=int(np.random.SeedSequence((seed, i, j)).generate_state(1)[0]))
            scorer = fit_fn(train_ds, val_ds, l2, opt)
            value = auuc(scorer, val_ds)
            if best is None or value > best[0]:
                best = (value, scorer)
    return best[1]


def run_one_split(ds: UpliftDataset, cfg: ExperimentConfig, index: int) -> SplitRow:
    seed = split_seed(cfg.master_seed, index)
    spec = SplitSpec(cfg.train_fraction, cfg.validation_fraction, seed=seed)
    train_ds, val_ds, test_ds = split(ds, spec)
    t0 = time.perf_counter()
    bound_lower = best_lambda = best_lr = None
    if cfg.method == "auuc-max":
        sel = run_auuc_max(train_ds, val_ds, _grid_for(cfg, seed), cfg.delta)
        scorer, bound_lower = sel.best_scorer(), sel.best_value
        best_lambda, best_lr = sel.best_lambda, sel.best_learning_rate
    elif cfg.method == "auuc-max-cv":
        from .selection import select_by_cv

        pool = ds.subset(np.sort(np.concatenate([
            train_ds.extras["source_rows"], val_ds.extras["source_rows"]])))
        sel = select_by_cv(pool, _grid_for(cfg, seed), cfg.cv_folds)
        scorer = sel.best_scorer()
        best_lambda, best_lr = sel.best_lambda, sel.best_learning_rate
    elif cfg.method == "tm":
        scorer = _select_baseline(train_ds, val_ds, cfg, seed, fit_two_model)
    else:
        scorer = _select_baseline(train_ds, val_ds, cfg, seed, fit_cvt)
    seconds = time.perf_counter() - t0
    risks = tuple(policy_risk(scorer, test_ds, r) for r in POLICY_RATIOS)
    return SplitRow(
        split=index,
        seed=seed,
        method=cfg.method,
        test_auuc=auuc(scorer, test_ds),
        bound_lower=bound_lower,
        best_lambda=best_lambda,
        best_learning_rate=best_lr,
        policy_risks=risks,
        train_seconds=seconds,
    )


# -- worker plumbing: the dataset is loaded once per process and cached ------

_DATASET_CACHE: dict[str, UpliftDataset] = {}


def _cached_dataset(path: str) -> UpliftDataset:
    ds = _DATASET_CACHE.get(path)
    if ds is None:
        ds = load_canonical_csv(path)
        _DATASET_CACHE[path] = ds
    return ds


def _worker(args) -> tuple[int, SplitRow | None, str | None]:
    cfg, index = args
    try:
        return index, run_one_split(_cached_dataset(cfg.dataset_csv), cfg, index), None
    except DataError as exc:
        return index, None, str(exc)


def run_experiment_splits(cfg: ExperimentConfig, output_dir: str):
    """Run every split (resuming over completed rows) and write artifacts.

    Returns (rows, aggregate dict).  Raises :class:`AllSplitsFailed` if no
    split succeeds.
    """

    os.makedirs(output_dir, exist_ok=True)
    rows_path = os.path.join(output_dir, "rows.csv")
    done: dict[int, SplitRow] = {}
    errors: dict[int, str] = {}
    if os.path.exists(rows_path):
        for row in _read_rows(rows_path):
            done[row.split] = row
    pending = [i for i in range(cfg.num_splits) if i not in done]
    # warm the cache before forking so workers inherit the parsed dataset
    _cached_dataset(cfg.dataset_csv)

    def record(result):
        index, row, err = result
        if row is not None:
            done[index] = row
        else:
            errors[index] = err
        _write_rows(rows_path, done)

    if cfg.jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_worker, (cfg, i)) for i in pending]
            for future in futures:
                record(future.result())
    else:
        for i in pending:
            record(_worker((cfg, i)))
    if not done:
        raise AllSplitsFailed(
            "every split failed: " + "; ".join(f"#{i}: {e}" for i, e in sorted(errors.items()))
        )
    rows = [done[i] for i in sorted(done)]
    aggregate = aggregate_rows(rows)
    aggregate["errors"] = {str(i): errors[i] for i in sorted(errors)}
    atomic_write_json(os.path.join(output_dir, "aggregate.json"), aggregate)
    _write_timings(os.path.join(output_dir, "timings.csv"), rows)
    return rows, aggregate


def aggregate_rows(rows: list[SplitRow]) -> dict:
    """Mean and 2-sigma aggregates, recomputable from the rows file."""
    auucs = np.asarray([r.test_auuc for r in rows])
    agg = {
        "method": rows[0].method,
        "n_splits": len(rows),
        "test_auuc_mean": float(auucs.mean()),
        "test_auuc_2sigma": float(2.0 * auucs.std(ddof=1)) if len(rows) > 1 else 0.0,
        "policy_risk_mean": {
            str(r): float(np.mean([row.policy_risks[k] for row in rows]))
            for k, r in enumerate(POLICY_RATIOS)
        },
    }
    bounds = [r.bound_lower for r in rows if r.bound_lower is not None]
    if bounds:
        agg["bound_lower_mean"] = float(np.mean(bounds))
    return agg


def _format_float(v) -> str:
    return "" if v is None else repr(float(v))


def _write_rows(path: str, done: dict[int, SplitRow]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROW_FIELDS)
    for i in sorted(done):
        r = done[i]
        writer.writerow(
            [r.split, r.seed, r.method, repr(r.test_auuc), _format_float(r.bound_lower),
             _format_float(r.best_lambda), _format_float(r.best_learning_rate)]
            + [repr(v) for v in r.policy_risks]
        )
    atomic_write_text(path, buf.getvalue())


def _read_rows(path: str) -> list[SplitRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                SplitRow(
                    split=int(rec["split"]),
                    seed=int(rec["seed"]),
                    method=rec["method"],
                    test_auuc=float(rec["test_auuc"]),
                    bound_lower=float(rec["bound_lower"]) if rec["bound_lower"] else None,
                    best_lambda=float(rec["best_lambda"]) if rec["best_lambda"] else None,
                    best_learning_rate=(
                        float(rec["best_learning_rate"]) if rec["best_learning_rate"] else None
                    ),
                    policy_risks=tuple(
                        float(rec[f"policy_risk_{r}"]) for r in POLICY_RATIOS
                    ),
                    train_seconds=0.0,
                )
            )
    return rows


def _write_timings(path: str, rows: list[SplitRow]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["split", "train_seconds"])
    for r in rows:
        writer.writerow([r.split, f"{r.train_seconds:.3f}"])
    atomic_write_text(path, buf.getvalue())


def run_bound_gap(cfg: ExperimentConfig, output_dir: str, num_bins: int = 20):
    """Gap distribution between the mean-AUUC estimate and per-split bounds.

    The expected AUUC is pinned by an empirical-Bernstein upper bound over
    the test-split AUUCs; each split contributes the gap between that
    estimate and its training-set lower bound.
    """

    if cfg.method != "auuc-max":
        raise DataError("bound-gap experiments require method = auuc-max")
    rows, _ = run_experiment_splits(cfg, output_dir)
    auucs = [r.test_auuc for r in rows]
    lowers = [r.bound_lower for r in rows]
    if len(auucs) < 2:
        raise DataError("bound-gap needs at least two completed splits")
    expected_upper = empirical_bernstein_upper(auucs, cfg.delta, cfg.eb_value_range)
    gaps = np.asarray([expected_upper - lb for lb in lowers])
    counts, edges = np.histogram(gaps, bins=num_bins)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_lo", "bin_hi", "count"])
    for k in range(num_bins):
        writer.writerow([repr(float(edges[k])), repr(float(edges[k + 1])), int(counts[k])])
    atomic_write_text(os.path.join(output_dir, "gap_hist.csv"), buf.getvalue())
    summary = {
        "expected_auuc_upper": float(expected_upper),
        "mean_gap": float(gaps.mean()),
        "quantiles": {
            str(q): float(np.quantile(gaps, q)) for q in (0.05, 0.25, 0.5, 0.75, 0.95)
        },
        "n_splits": len(rows),
    }
    atomic_write_json(os.path.join(output_dir, "gap_summary.json"), summary)
    return gaps, summary


def verify_artifacts(rows_path: str, aggregate_path: str) -> list[str]:
    """Recompute the aggregate from the rows file; return mismatch messages."""
    rows = _read_rows(rows_path)
    if not rows:
        return ["rows file has no rows"]
    recomputed = aggregate_rows(rows)
    stored = read_json(aggregate_path)
    problems = []
    for key, value in recomputed.items():
        if key not in stored:
            problems.append(f"aggregate missing key {key}")
            continue
        if not _close(stored[key], value):
            problems.append(f"aggregate mismatch at {key}: {stored[key]!r} != {value!r}")
    return problems


def _close(a, b) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        return set(a) == set(b) and all(_close(a[k], b[k]) for k in a)
    if isinstance(a, float) or isinstance(b, float):
        return abs(float(a) - float(b)) <= 1e-12 * max(1.0, abs(float(b)))
    return a == b
