"""Command-line surface.

Subcommands cover the whole pipeline: ``prepare`` (raw campaign CSV ->
canonical feature CSV + schema), ``generate`` (synthetic data), ``train``,
``evaluate`` (AUUC, uplift curve, policy-risk table), ``bound`` (the
training-set lower-bound report), ``experiment splits`` /
``experiment bound-gap`` (the repeated-split protocols) and ``verify``
(recompute aggregates from emitted rows).

Exit codes: 0 success, 2 configuration error, 3 data error, 4 every
split of an experiment failed.  ``UPLIFT_RANK_JOBS`` (or ``--jobs``)
caps split parallelism.  All artifacts are written atomically and are
byte-identical across reruns with the same master seed.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys

import click
import numpy as np

from .artifacts import atomic_write_json, atomic_write_text, read_json
from .bound import auuc_lower_bound, function_class_for
from .data import (
    ColumnRule,
    DataError,
    fit_encode,
    generate_synthetic,
    hillstrom_default_rules,
    load_canonical_csv,
    load_hillstrom,
    make_email_campaign_raw,
    schema_to_dict,
    split,
    write_canonical_csv,
    SplitSpec,
)
from .experiments import (
    AllSplitsFailed,
    ExperimentConfig,
    run_bound_gap,
    run_experiment_splits,
    verify_artifacts,
)
from .metrics import auuc, policy_risk_table, uplift_curve
from .models import fit_cvt, fit_two_model, load_model, save_model
from .optimizer import TrainConfig
from .selection import GridSpec, run_auuc_max, select_by_cv
from .surrogates import SurrogateSpec


class ConfigError(Exception):
    pass


EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ALL_SPLITS_FAILED = 4


def _run(fn):
    try:
        fn()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except AllSplitsFailed as exc:
        click.echo(f"experiment failed: {exc}", err=True)
        sys.exit(EXIT_ALL_SPLITS_FAILED)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(EXIT_DATA)


@click.group()
def main():
    """Train and evaluate uplift ranking models."""


# ---------------------------------------------------------------------------
# prepare / generate
# ---------------------------------------------------------------------------

@main.command()
@click.option("--input", "input_path", required=True, help="Raw campaign CSV.")
@click.option("--output", required=True, help="Canonical feature CSV to write.")
@click.option("--schema-out", default=None, help="Where to write the fitted schema JSON.")
@click.option("--arm", default="Womens E-Mail", show_default=True,
              help="E-mail arm kept as the treated group.")
@click.option("--outcome", default="visit", show_default=True)
@click.option("--scale-numeric", is_flag=True,
              help="Min-max scale plain numeric columns to [0, 1].")
def prepare(input_path, output, schema_out, arm, outcome, scale_numeric):
    """Encode a raw campaign CSV into the canonical feature CSV."""

    def go():
        raw = load_hillstrom(input_path, treatment_arm_kept=arm, outcome_column=outcome)
        rules = hillstrom_default_rules()
        if scale_numeric:
            rules = {c: (ColumnRule("minmax") if r.kind == "numeric" else r)
                     for c, r in rules.items()}
        schema, ds = fit_encode(raw, rules)
        write_canonical_csv(ds, output)
        if schema_out:
            atomic_write_json(schema_out, schema_to_dict(schema))
        click.echo(f"prepared {ds.n} rows x {ds.d} features -> {output}")

    _run(go)


@main.group()
def generate():
    """Write synthetic datasets."""


@generate.command("synthetic")
@click.option("--n", type=int, default=10000, show_default=True)
@click.option("--d", type=int, default=8, show_default=True)
@click.option("--treat-prob", type=float, default=0.5, show_default=True)
@click.option("--coef-base", default="0.5", show_default=True,
              help="Comma-separated base coefficients (broadcast if scalar).")
@click.option("--coef-uplift", default="0.3", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", required=True)
def generate_synthetic_cmd(n, d, treat_prob, coef_base, coef_uplift, seed, output):
    """Gaussian-feature trial with a known logistic outcome model."""

    def parse_coefs(text):
        vals = [float(v) for v in text.split(",")]
        return np.asarray(vals if len(vals) > 1 else vals * d)

    def go():
        ds = generate_synthetic(n, d, treat_prob, parse_coefs(coef_base),
                                parse_coefs(coef_uplift), seed)
        write_canonical_csv(ds, output)
        click.echo(f"wrote {ds.n} rows x {ds.d} features -> {output}")

    _run(go)


@generate.command("email-campaign")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--scale", type=float, default=1.0, show_default=True,
              help="Shrink factor for the arm sizes (1.0 = benchmark size).")
@click.option("--output", required=True)
def generate_email_campaign(seed, scale, output):
    """Simulated e-mail campaign raw CSV (benchmark schema and marginals)."""

    def go():
        make_email_campaign_raw(output, seed=seed, scale=scale)
        click.echo(f"wrote simulated campaign file -> {output}")

    _run(go)


# ---------------------------------------------------------------------------
# train / evaluate / bound
# ---------------------------------------------------------------------------

def _surrogate_from_flags(surrogate, poly_mu, poly_p) -> SurrogateSpec:
    return SurrogateSpec(kind=surrogate, mu=poly_mu, p=poly_p)


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc


@main.command()
@click.option("--data", "data_path", required=True, help="Canonical feature CSV.")
@click.option("--method", type=click.Choice(["auuc-max", "auuc-max-cv", "tm", "cvt"]),
              default="auuc-max", show_default=True)
@click.option("--train-fraction", type=float, default=0.8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--surrogate", type=click.Choice(["log", "poly"]), default="poly",
              show_default=True)
@click.option("--poly-mu", type=float, default=0.1, show_default=True)
@click.option("--poly-p", type=int, default=3, show_default=True)
@click.option("--lambda-grid", default="0.5,0.8,1.0", show_default=True)
@click.option("--lr-grid", default="5e-4,1e-3", show_default=True)
@click.option("--l2", type=float, default=1e-6, show_default=True,
              help="L2 weight for the tm/cvt logistic members.")
@click.option("--delta", type=float, default=0.05, show_default=True)
@click.option("--epochs", type=int, default=120, show_default=True)
@click.option("--batch-size", type=int, default=512, show_default=True)
@click.option("--output-model", required=True)
@click.option("--selection-out", default=None, help="Selection record JSON.")
@click.option("--log-out", default=None,
              help="Training-log CSV of the selected ranker configuration.")
def train(data_path, method, train_fraction, seed, surrogate, poly_mu, poly_p,
          lambda_grid, lr_grid, l2, delta, epochs, batch_size, output_model,
          selection_out, log_out):
    """Train one model on a (train, early-stop) split of the dataset."""

    def go():
        if log_out and method in ("tm", "cvt"):
            raise ConfigError("--log-out applies to the ranker methods only")
        ds = load_canonical_csv(data_path)
        train_ds, _, val_ds = split(
            ds, SplitSpec(train_fraction, 0.0, seed=seed)
        )
        spec = _surrogate_from_flags(surrogate, poly_mu, poly_p)
        template = TrainConfig(epochs=epochs, batch_size=batch_size, surrogate=spec, seed=seed)
        if method in ("auuc-max", "auuc-max-cv"):
            grid = GridSpec(list(_parse_grid(lambda_grid)), list(_parse_grid(lr_grid)), template)
            if method == "auuc-max":
                sel = run_auuc_max(train_ds, val_ds, grid, delta)
            else:
                sel = select_by_cv(ds, grid)
            scorer = sel.best_scorer(feature_names=list(ds.feature_names))
            if selection_out:
                atomic_write_json(selection_out, sel.to_dict(include_timings=False))
            if log_out and sel.best_training_log is not None:
                buf = io.StringIO()
                writer = csv.writer(buf, lineterminator="\n")
                writer.writerows(sel.best_training_log.as_csv_rows())
                atomic_write_text(log_out, buf.getvalue())
        elif method == "tm":
            scorer = fit_two_model(train_ds, val_ds, l2, template)
        else:
            scorer = fit_cvt(train_ds, val_ds, l2, template)
        save_model(scorer, output_model)
        click.echo(f"trained {method} -> {output_model}")

    _run(go)


@main.command()
@click.option("--data", "data_path", required=True)
@click.option("--model", "model_path", required=True)
@click.option("--output-dir", required=True)
def evaluate(data_path, model_path, output_dir):
    """AUUC, uplift curve CSV and the policy-risk table for one model."""

    def go():
        ds = load_canonical_csv(data_path)
        scorer = load_model(model_path)
        os.makedirs(output_dir, exist_ok=True)
        curve = uplift_curve(scorer, ds)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "v"])
        for k, v in curve.as_csv_rows():
            writer.writerow([k, repr(v)])
        atomic_write_text(os.path.join(output_dir, "uplift_curve.csv"), buf.getvalue())
        table = policy_risk_table(scorer, ds)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["ratio", "risk"])
        for point in table:
            writer.writerow([point.ratio, repr(point.risk)])
        atomic_write_text(os.path.join(output_dir, "policy_risk.csv"), buf.getvalue())
        value = auuc(scorer, ds)
        atomic_write_json(os.path.join(output_dir, "metrics.json"), {
            "auuc": value,
            "n": ds.n,
            "policy_risk": {str(p.ratio): p.risk for p in table},
        })
        click.echo(f"auuc {value:.5f} on {ds.n} rows -> {output_dir}")

    _run(go)


@main.command()
@click.option("--data", "data_path", required=True, help="Training split CSV.")
@click.option("--model", "model_path", required=True)
@click.option("--lambda-cap", type=float, required=True)
@click.option("--delta", type=float, default=0.05, show_default=True)
@click.option("--output", default=None)
def bound(data_path, model_path, lambda_cap, delta, output):
    """Print the AUUC lower-bound report for a trained linear model."""

    def go():
        ds = load_canonical_csv(data_path)
        scorer = load_model(model_path)
        report = auuc_lower_bound(scorer, ds, function_class_for(ds, lambda_cap), delta)
        text = json.dumps(report.to_dict(), sort_keys=True, indent=2)
        click.echo(text)
        if output:
            atomic_write_text(output, text + "\n")

    _run(go)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _experiment_config(config_path, overrides) -> ExperimentConfig:
    doc = {}
    if config_path:
        doc = read_json(config_path)
    doc.update({k: v for k, v in overrides.items() if v is not None})
    jobs = doc.pop("jobs", None)
    if jobs is None:
        jobs = int(os.environ.get("UPLIFT_RANK_JOBS", "1"))
    surrogate = doc.pop("surrogate", {"kind": "poly", "mu": 0.1, "p": 3})
    if isinstance(surrogate, str):
        surrogate = {"kind": surrogate}
    train_doc = doc.pop("train", {})
    try:
        spec = SurrogateSpec(**surrogate)
        cfg = ExperimentConfig(
            surrogate=spec,
            train=TrainConfig(surrogate=spec, **train_doc),
            jobs=jobs,
            **{k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()},
        )
    except (TypeError, DataError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


@main.group()
def experiment():
    """Repeated-split experiment protocols."""


_EXPERIMENT_OPTIONS = [
    click.option("--config", "config_path", default=None, help="Experiment config JSON."),
    click.option("--data", "dataset_csv", default=None, help="Canonical feature CSV."),
    click.option("--method", default=None,
                 type=click.Choice(["auuc-max", "auuc-max-cv", "tm", "cvt"])),
    click.option("--num-splits", type=int, default=None),
    click.option("--seed", "master_seed", type=int, default=None),
    click.option("--delta", type=float, default=None),
    click.option("--jobs", type=int, default=None),
    click.option("--output-dir", required=True),
]


def _with_experiment_options(fn):
    for option in reversed(_EXPERIMENT_OPTIONS):
        fn = option(fn)
    return fn


@experiment.command("splits")
@_with_experiment_options
def experiment_splits(config_path, dataset_csv, method, num_splits, master_seed,
                      delta, jobs, output_dir):
    """Per-split test metrics plus the mean +- 2 sigma aggregate."""

    def go():
        cfg = _experiment_config(config_path, {
            "dataset_csv": dataset_csv, "method": method, "num_splits": num_splits,
            "master_seed": master_seed, "delta": delta, "jobs": jobs,
        })
        rows, aggregate = run_experiment_splits(cfg, output_dir)
        click.echo(
            f"{cfg.method}: test AUUC {aggregate['test_auuc_mean']:.5f} "
            f"+- {aggregate['test_auuc_2sigma']:.5f} over {len(rows)} splits"
        )

    _run(go)


@experiment.command("bound-gap")
@_with_experiment_options
@click.option("--bins", type=int, default=20, show_default=True)
def experiment_bound_gap(config_path, dataset_csv, method, num_splits, master_seed,
                         delta, jobs, output_dir, bins):
    """Distribution of (expected AUUC estimate - per-split lower bound)."""

    def go():
        cfg = _experiment_config(config_path, {
            "dataset_csv": dataset_csv, "method": method or "auuc-max",
            "num_splits": num_splits, "master_seed": master_seed,
            "delta": delta, "jobs": jobs,
        })
        _, summary = run_bound_gap(cfg, output_dir, num_bins=bins)
        click.echo(f"mean gap {summary['mean_gap']:.5f} over {summary['n_splits']} splits")

    _run(go)


@main.command()
@click.option("--rows", "rows_path", required=True)
@click.option("--aggregate", "aggregate_path", required=True)
def verify(rows_path, aggregate_path):
    """Check that the emitted aggregate matches the emitted rows."""

    def go():
        problems = verify_artifacts(rows_path, aggregate_path)
        if problems:
            raise DataError("; ".join(problems))
        click.echo("aggregate matches rows")

    _run(go)


if __name__ == "__main__":
    main()
