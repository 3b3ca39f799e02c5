"""Randomized-trial datasets: ingestion, encoding, splits, group views.

The canonical in-memory form is :class:`UpliftDataset` (dense float
features, binary treatment flag, binary outcome).  Raw campaign CSVs are
first read into a :class:`RawTrialTable` of string columns, then turned
into features by :func:`fit_encode` under explicit per-column rules.

A seeded synthetic generator with known ground truth
(:func:`generate_synthetic`) backs the property tests, and
:func:`make_email_campaign_raw` emits a full-size simulated e-mail
campaign file with the same schema and marginals as the public retailer
benchmark, for end-to-end pipeline runs when the real file is not on
disk.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np


class DataError(Exception):
    """Raised for unusable input data (missing files/columns, bad rows)."""


# ---------------------------------------------------------------------------
# Core containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UpliftDataset:
    """Immutable trial table: features, binary treatment, binary outcome."""

    features: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray
    feature_names: list[str]
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        t = np.asarray(self.treatment, dtype=np.int64)
        y = np.asarray(self.outcome, dtype=np.int64)
        if x.ndim != 2 or x.shape[0] < 1:
            raise DataError("feature matrix must be 2-D with at least one row")
        n = x.shape[0]
        if t.shape != (n,) or y.shape != (n,):
            raise DataError("treatment/outcome length must match feature rows")
        if not np.isfinite(x).all():
            raise DataError("feature matrix contains non-finite values")
        if not np.isin(t, (0, 1)).all() or not np.isin(y, (0, 1)).all():
            raise DataError("treatment and outcome entries must be 0 or 1")
        if len(self.feature_names) != x.shape[1]:
            raise DataError("feature_names length must equal feature columns")
        x.setflags(write=False)
        t.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "treatment", t)
        object.__setattr__(self, "outcome", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, rows: np.ndarray) -> "UpliftDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return UpliftDataset(
            self.features[rows],
            self.treatment[rows],
            self.outcome[rows],
            list(self.feature_names),
            extras={"source_rows": rows},
        )


@dataclass(frozen=True)
class GroupView:
    """One treatment arm of a dataset, optionally with reverted labels.

    Reverting flips the effective label of every row (1 - y), which turns
    the control arm's ranking objective from "converters on top" into
    "non-converters on top" -- exactly what the uplift decomposition
    needs.  Reverting twice restores the original labels.
    """

    parent: UpliftDataset
    group: str
    reverted: bool
    row_indices: np.ndarray

    def __post_init__(self):
        if self.group not in ("T", "C"):
            raise DataError("group must be 'T' or 'C'")
        idx = np.asarray(self.row_indices, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "row_indices", idx)

    @property
    def effective_labels(self) -> np.ndarray:
        y = self.parent.outcome[self.row_indices]
        return 1 - y if self.reverted else y

    @property
    def features(self) -> np.ndarray:
        return self.parent.features[self.row_indices]

    @property
    def n_pos(self) -> int:
        return int(self.effective_labels.sum())

    @property
    def n_neg(self) -> int:
        return int(self.row_indices.size - self.effective_labels.sum())

    def reverted_view(self) -> "GroupView":
        return GroupView(self.parent, self.group, not self.reverted, self.row_indices)


def group_view(ds: UpliftDataset, group: str, revert: bool = False) -> GroupView:
    """View over the rows of one arm; ``revert`` flips effective labels."""
    flag = 1 if group == "T" else 0
    rows = np.flatnonzero(ds.treatment == flag)
    if rows.size == 0:
        raise DataError(f"group {group} is empty")
    return GroupView(ds, group, revert, rows)


# ---------------------------------------------------------------------------
# Raw table + encoding
# ---------------------------------------------------------------------------

@dataclass
class RawTrialTable:
    """Unencoded trial rows: string-valued columns plus the two flags.

    Produced by the loaders, consumed by :func:`fit_encode`; the feature
    columns stay raw so encoding rules can be chosen afterwards.
    """

    columns: dict[str, list[str]]
    treatment: np.ndarray
    outcome: np.ndarray

    @property
    def n(self) -> int:
        return self.treatment.size


@dataclass(frozen=True)
class ColumnRule:
    """Per-column encoding rule.

    kinds: ``numeric`` (pass-through), ``minmax`` (scaled to [0, 1] with
    the fit range recorded), ``onehot`` (one indicator per observed
    category, no reference drop), ``qbin`` (quantile-binned indicator
    columns, ``n_bins`` of them).
    """

    kind: str
    n_bins: int = 3

    def __post_init__(self):
        if self.kind not in ("numeric", "minmax", "onehot", "qbin"):
            raise DataError(f"unknown encoding rule kind: {self.kind!r}")


@dataclass(frozen=True)
class EncodingSchema:
    """Fitted per-column encoders; applying it yields exactly ``dim`` columns."""

    column_order: list[str]
    rules: dict[str, ColumnRule]
    categories: dict[str, list[str]]
    ranges: dict[str, tuple[float, float]]
    bin_edges: dict[str, list[float]]
    dim: int
    feature_names: list[str]

    def apply(self, raw: RawTrialTable) -> UpliftDataset:
        blocks = []
        for col in self.column_order:
            values = raw.columns.get(col)
            if values is None:
                raise DataError(f"missing required column: {col}")
            blocks.append(self._encode_column(col, values))
        x = np.hstack(blocks)
        return UpliftDataset(x, raw.treatment, raw.outcome, list(self.feature_names))

    def _encode_column(self, col: str, values: list[str]) -> np.ndarray:
        rule = self.rules[col]
        n = len(values)
        if rule.kind in ("numeric", "minmax"):
            v = _parse_numeric(col, values)
            if rule.kind == "minmax":
                lo, hi = self.ranges[col]
                span = hi - lo
                v = (v - lo) / span if span > 0 else np.zeros_like(v)
            return v.reshape(n, 1)
        if rule.kind == "onehot":
            cats = self.categories[col]
            index = {c: k for k, c in enumerate(cats)}
            out = np.zeros((n, len(cats)))
            for i, val in enumerate(values):
                k = index.get(val)
                if k is None:
                    raise DataError(f"unseen category {val!r} in column {col}")
                out[i, k] = 1.0
            return out
        # qbin: searchsorted over the fitted inner edges; out-of-range
        # values fall into the end bins
        v = _parse_numeric(col, values)
        edges = np.asarray(self.bin_edges[col])
        k = np.searchsorted(edges, v, side="right")
        out = np.zeros((n, len(edges) + 1))
        out[np.arange(n), k] = 1.0
        return out


def _parse_numeric(col: str, values: list[str]) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in values])
    except ValueError as exc:
        raise DataError(f"non-numeric value in numeric column {col}: {exc}") from exc


def fit_encode(raw: RawTrialTable, schema_rules: dict[str, ColumnRule]):
    """Fit an :class:`EncodingSchema` on ``raw`` and encode it.

    Column blocks follow the order of ``schema_rules``; categories within
    a one-hot block are sorted lexically, so the output is deterministic.
    Returns ``(schema, dataset)``.
    """

    column_order = list(schema_rules)
    categories: dict[str, list[str]] = {}
    ranges: dict[str, tuple[float, float]] = {}
    bin_edges: dict[str, list[float]] = {}
    feature_names: list[str] = []
    for col in column_order:
        values = raw.columns.get(col)
        if values is None:
            raise DataError(f"missing required column: {col}")
        rule = schema_rules[col]
        if rule.kind == "onehot":
            cats = sorted(set(values))
            if not cats:
                raise DataError(f"column {col} has no values to encode")
            categories[col] = cats
            feature_names.extend(f"{col}={c}" for c in cats)
        elif rule.kind == "qbin":
            v = _parse_numeric(col, values)
            qs = np.linspace(0.0, 1.0, rule.n_bins + 1)[1:-1]
            edges = sorted(set(float(e) for e in np.quantile(v, qs)))
            bin_edges[col] = edges
            feature_names.extend(f"{col}#q{k}" for k in range(len(edges) + 1))
        else:
            v = _parse_numeric(col, values)
            if rule.kind == "minmax":
                ranges[col] = (float(v.min()), float(v.max()))
            feature_names.append(col)
    schema = EncodingSchema(
        column_order=column_order,
        rules=dict(schema_rules),
        categories=categories,
        ranges=ranges,
        bin_edges=bin_edges,
        dim=len(feature_names),
        feature_names=feature_names,
    )
    return schema, schema.apply(raw)


def schema_to_dict(schema: EncodingSchema) -> dict:
    return {
        "column_order": schema.column_order,
        "rules": {c: {"kind": r.kind, "n_bins": r.n_bins} for c, r in schema.rules.items()},
        "categories": schema.categories,
        "ranges": {c: list(v) for c, v in schema.ranges.items()},
        "bin_edges": schema.bin_edges,
        "dim": schema.dim,
        "feature_names": schema.feature_names,
    }


def schema_from_dict(doc: dict) -> EncodingSchema:
    return EncodingSchema(
        column_order=list(doc["column_order"]),
        rules={c: ColumnRule(r["kind"], r.get("n_bins", 3)) for c, r in doc["rules"].items()},
        categories={c: list(v) for c, v in doc.get("categories", {}).items()},
        ranges={c: (float(v[0]), float(v[1])) for c, v in doc.get("ranges", {}).items()},
        bin_edges={c: [float(e) for e in v] for c, v in doc.get("bin_edges", {}).items()},
        dim=int(doc["dim"]),
        feature_names=list(doc["feature_names"]),
    )


# ---------------------------------------------------------------------------
# E-mail campaign CSV ingestion
# ---------------------------------------------------------------------------

HILLSTROM_COLUMNS = [
    "recency", "history_segment", "history", "mens", "womens",
    "zip_code", "newbie", "channel", "segment", "visit", "conversion", "spend",
]

HILLSTROM_FEATURE_COLUMNS = [
    "recency", "history_segment", "history", "mens", "womens",
    "zip_code", "newbie", "channel",
]

CONTROL_SEGMENT = "No E-Mail"


def hillstrom_default_rules() -> dict[str, ColumnRule]:
    """Default encoding for the retailer campaign schema (22 columns).

    One-hot for the three string columns (7 + 3 + 3 levels), pass-through
    for the three 0/1 flags, and tercile indicator bins for the two
    continuous columns (3 + 3).  The original study does not document its
    exact encoding; this one is fixed here so every reported number is
    reproducible.
    """

    return {
        "recency": ColumnRule("qbin", n_bins=3),
        "history_segment": ColumnRule("onehot"),
        "history": ColumnRule("qbin", n_bins=3),
        "mens": ColumnRule("numeric"),
        "womens": ColumnRule("numeric"),
        "zip_code": ColumnRule("onehot"),
        "newbie": ColumnRule("numeric"),
        "channel": ColumnRule("onehot"),
    }


def load_hillstrom(
    path: str,
    treatment_arm_kept: str = "Womens E-Mail",
    outcome_column: str = "visit",
) -> RawTrialTable:
    """Read the e-mail campaign CSV, keeping one e-mail arm vs no e-mail.

    Rows from other arms are dropped; treatment is 1 iff ``segment``
    equals ``treatment_arm_kept``.  Raw columns are retained for the
    encoder.  Raises :class:`DataError` for a missing file, a missing
    column, an empty table, or an unparseable row (with its row number).
    """

    if not os.path.exists(path):
        raise DataError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        required = set(HILLSTROM_FEATURE_COLUMNS + ["segment", outcome_column])
        missing = sorted(required - set(header))
        if missing:
            raise DataError(f"missing required column(s): {', '.join(missing)}")
        columns: dict[str, list[str]] = {c: [] for c in HILLSTROM_FEATURE_COLUMNS}
        treatment: list[int] = []
        outcome: list[int] = []
        n_read = 0
        for row_number, row in enumerate(reader, start=2):
            n_read += 1
            segment = row.get("segment")
            if segment is None or None in row.values():
                raise DataError(f"unparseable row at line {row_number}")
            if segment != treatment_arm_kept and segment != CONTROL_SEGMENT:
                continue
            try:
                y_raw = float(row[outcome_column])
            except (TypeError, ValueError):
                raise DataError(
                    f"unparseable {outcome_column} value at line {row_number}: "
                    f"{row[outcome_column]!r}"
                ) from None
            if y_raw not in (0.0, 1.0):
                raise DataError(f"non-binary outcome at line {row_number}: {y_raw}")
            y = int(y_raw)
            for c in HILLSTROM_FEATURE_COLUMNS:
                value = row[c]
                if value == "" or value is None:
                    raise DataError(f"missing value in column {c} at line {row_number}")
                columns[c].append(value)
            treatment.append(1 if segment == treatment_arm_kept else 0)
            outcome.append(y)
    if n_read == 0:
        raise DataError("no data rows")
    if not treatment:
        raise DataError(
            f"no rows left after filtering to segments "
            f"{treatment_arm_kept!r} / {CONTROL_SEGMENT!r}"
        )
    return RawTrialTable(columns, np.asarray(treatment), np.asarray(outcome))


# ---------------------------------------------------------------------------
# Canonical CSV interchange (f0..f{d-1}, treatment, outcome)
# ---------------------------------------------------------------------------

def write_canonical_csv(ds: UpliftDataset, path: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"f{j}" for j in range(ds.d)] + ["treatment", "outcome"])
    for i in range(ds.n):
        writer.writerow(
            [repr(float(v)) for v in ds.features[i]]
            + [int(ds.treatment[i]), int(ds.outcome[i])]
        )
    from .artifacts import atomic_write_text

    atomic_write_text(path, buf.getvalue())


def load_canonical_csv(path: str) -> UpliftDataset:
    if not os.path.exists(path):
        raise DataError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError("no data rows")
        if header[-2:] != ["treatment", "outcome"]:
            raise DataError("canonical CSV must end with treatment,outcome columns")
        d = len(header) - 2
        feats, treat, out = [], [], []
        for row_number, row in enumerate(reader, start=2):
            if len(row) != d + 2:
                raise DataError(f"unparseable row at line {row_number}")
            try:
                feats.append([float(v) for v in row[:d]])
                treat.append(int(row[d]))
                out.append(int(row[d + 1]))
            except ValueError:
                raise DataError(f"unparseable row at line {row_number}") from None
    if not feats:
        raise DataError("no data rows")
    return UpliftDataset(np.asarray(feats), np.asarray(treat), np.asarray(out), header[:-2])


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    """Stratified train/validation/test split fractions plus a seed."""

    train_fraction: float
    validation_fraction: float = 0.0
    seed: int = 0
    stratify_by_treatment: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction <= 1.0:
            raise DataError("train_fraction must be in (0, 1]")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise DataError("validation_fraction must be in [0, 1)")
        if self.train_fraction + self.validation_fraction > 1.0 + 1e-12:
            raise DataError("train_fraction + validation_fraction must be <= 1")


def split(ds: UpliftDataset, spec: SplitSpec, allow_empty_test: bool = False):
    """Partition rows into (train, validation, test), stratified per arm.

    Within each treatment arm the realized fractions match the spec to
    within one row.  The same seed always yields the same partition.
    """

    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    if spec.stratify_by_treatment:
        strata = [np.flatnonzero(ds.treatment == 1), np.flatnonzero(ds.treatment == 0)]
    else:
        strata = [np.arange(ds.n)]
    train_idx, val_idx, test_idx = [], [], []
    for stratum in strata:
        perm = stratum[rng.permutation(stratum.size)]
        n = perm.size
        n_train = int(round(spec.train_fraction * n))
        n_val = int(round(spec.validation_fraction * n))
        n_train = min(n_train, n)
        n_val = min(n_val, n - n_train)
        train_idx.append(perm[:n_train])
        val_idx.append(perm[n_train : n_train + n_val])
        test_idx.append(perm[n_train + n_val :])
    parts = [np.sort(np.concatenate(p)) for p in (train_idx, val_idx, test_idx)]

    def check_arm_coverage(rows: np.ndarray, name: str):
        t = ds.treatment[rows]
        if rows.size == 0 or t.min() == t.max():
            raise DataError(f"split infeasible: {name} part lacks a treatment arm")

    check_arm_coverage(parts[0], "train")
    if spec.validation_fraction > 0:
        check_arm_coverage(parts[1], "validation")
    if not allow_empty_test:
        check_arm_coverage(parts[2], "test")
    out = []
    for rows in parts:
        out.append(ds.subset(rows) if rows.size else None)
    return tuple(out)


# ---------------------------------------------------------------------------
# Synthetic data with known ground truth
# ---------------------------------------------------------------------------

def generate_synthetic(
    n: int,
    d: int,
    treat_prob: float,
    coef_base: np.ndarray,
    coef_uplift: np.ndarray,
    seed: int = 0,
    intercept_base: float = 0.0,
    intercept_uplift: float = 0.0,
) -> UpliftDataset:
    """Gaussian features, Bernoulli treatment, logistic outcome model.

    Y ~ Bernoulli(sigmoid(b0 + coef_base . x + T * (u0 + coef_uplift . x)))
    with both intercepts 0 by default; a negative ``intercept_base``
    produces the low outcome rates typical of campaign data.  The true
    individual effect at x follows by differencing the two sigmoids, and
    the generating coefficients are recorded in ``extras`` for oracle use.
    """

    if n < 2 or d < 1:
        raise DataError("need n >= 2 and d >= 1")
    if not 0.0 < treat_prob < 1.0:
        raise DataError("treat_prob must be strictly inside (0, 1)")
    coef_base = np.broadcast_to(np.asarray(coef_base, dtype=np.float64), (d,)).copy()
    coef_uplift = np.broadcast_to(np.asarray(coef_uplift, dtype=np.float64), (d,)).copy()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x = rng.standard_normal((n, d))
    t = (rng.random(n) < treat_prob).astype(np.int64)
    logits = intercept_base + x @ coef_base + t * (intercept_uplift + x @ coef_uplift)
    y = (rng.random(n) < sigmoid(logits)).astype(np.int64)
    return UpliftDataset(
        x, t, y, [f"x{j}" for j in range(d)],
        extras={"coef_base": coef_base, "coef_uplift": coef_uplift,
                "treat_prob": treat_prob, "intercept_base": intercept_base,
                "intercept_uplift": intercept_uplift},
    )


def true_ite(
    x: np.ndarray,
    coef_base: np.ndarray,
    coef_uplift: np.ndarray,
    intercept_base: float = 0.0,
    intercept_uplift: float = 0.0,
) -> np.ndarray:
    """Ground-truth individual effect of the synthetic outcome model."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    treated = sigmoid(
        intercept_base + intercept_uplift + x @ (np.asarray(coef_base) + np.asarray(coef_uplift))
    )
    return treated - sigmoid(intercept_base + x @ np.asarray(coef_base))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    pos = z >= 0
    ez = np.exp(np.where(pos, -z, z))
    return np.where(pos, 1.0 / (1.0 + ez), ez / (1.0 + ez))


# ---------------------------------------------------------------------------
# Simulated e-mail campaign file (benchmark stand-in)
# ---------------------------------------------------------------------------

HISTORY_SEGMENT_EDGES = [100.0, 200.0, 350.0, 500.0, 750.0, 1000.0]
HISTORY_SEGMENT_LABELS = [
    "1) $0 - $100", "2) $100 - $200", "3) $200 - $350", "4) $350 - $500",
    "5) $500 - $750", "6) $750 - $1,000", "7) $1,000 +",
]

# Arm sizes mirror the public retailer benchmark: 42,693 rows survive the
# two-arm filter with a treated share of 0.49905.
CAMPAIGN_ARM_SIZES = {"Mens E-Mail": 21307, "Womens E-Mail": 21306, "No E-Mail": 21387}


def make_email_campaign_raw(path: str, seed: int = 0, scale: float = 1.0) -> None:
    """Write a simulated e-mail campaign CSV with the benchmark schema.

    Covariates follow a plausible retail mix; the visit outcome is a
    logistic model whose intercepts are calibrated on the sampled rows so
    the no-mail arm visits at 0.10617 and the women's-mail arm at 0.1514,
    with a heterogeneous lift concentrated on recent, high-history
    customers.  ``scale`` shrinks all arm sizes for quick runs.
    """

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    sizes = {k: max(2, int(round(v * scale))) for k, v in CAMPAIGN_ARM_SIZES.items()}
    n = sum(sizes.values())
    segments = np.repeat(list(sizes), list(sizes.values()))
    rng.shuffle(segments)

    recency = rng.geometric(0.22, size=n).clip(1, 12)
    history = np.round(29.99 + rng.lognormal(mean=4.7, sigma=0.9, size=n), 2)
    seg_idx = np.searchsorted(HISTORY_SEGMENT_EDGES, history, side="right")
    history_segment = np.asarray(HISTORY_SEGMENT_LABELS)[seg_idx]
    mw = rng.choice(3, size=n, p=[0.45, 0.40, 0.15])  # mens only / womens only / both
    mens = np.where(mw != 1, 1, 0)
    womens = np.where(mw != 0, 1, 0)
    zip_code = rng.choice(["Surburban", "Rural", "Urban"], size=n, p=[0.45, 0.15, 0.40])
    newbie = rng.integers(0, 2, size=n)
    channel = rng.choice(["Phone", "Web", "Multichannel"], size=n, p=[0.44, 0.44, 0.12])

    z_recency = (6.0 - recency) / 4.0
    z_history = (np.log(history) - 5.0) / 1.0
    base_score = 0.45 * z_recency + 0.25 * z_history + 0.25 * (channel == "Multichannel") - 0.20 * newbie
    lift_score = (
        1.0 * z_recency.clip(-1, 2) + 0.55 * womens + 0.45 * z_history.clip(-2, 2) - 0.25 * newbie
    )

    treated = segments != "No E-Mail"
    a0 = _calibrate_intercept(base_score[~treated], 0.10617)
    womens_arm = segments == "Womens E-Mail"
    treated_score = base_score + 0.45 * lift_score
    b0 = _calibrate_intercept(treated_score[womens_arm], 0.1514)
    logit = np.where(treated, b0 + treated_score, a0 + base_score)
    visit = (rng.random(n) < sigmoid(logit)).astype(int)
    conversion = (visit & (rng.random(n) < 0.07)).astype(int)
    spend = np.where(conversion == 1, np.round(rng.gamma(2.0, 60.0, size=n), 2), 0.0)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HILLSTROM_COLUMNS)
    for i in range(n):
        writer.writerow([
            int(recency[i]), history_segment[i], f"{history[i]:.2f}", int(mens[i]),
            int(womens[i]), zip_code[i], int(newbie[i]), channel[i], segments[i],
            int(visit[i]), int(conversion[i]), f"{spend[i]:.2f}",
        ])
    from .artifacts import atomic_write_text

    atomic_write_text(path, buf.getvalue())


def _calibrate_intercept(scores: np.ndarray, target_rate: float) -> float:
    """Bisect the intercept a so that mean(sigmoid(a + scores)) == target."""
    lo, hi = -20.0, 20.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if sigmoid(mid + scores).mean() < target_rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
