"""Evaluation metrics for uplift rankers.

The central quantity is the uplift curve: rows sorted by descending
score, and at each depth k the difference between the per-arm cumulative
positive rates of the top-k.  Its normalized sum is the area under the
uplift curve (AUUC).  The same module carries the bipartite ranking risk
(pair misordering rate) and the exact decomposition

    AUUC = gamma - lambda_T * risk(treated) - lambda_C * risk(control, labels reverted)

that links uplift ranking quality to two within-arm ranking problems.
Policy risk evaluates the cost of actually treating the top fraction of
the ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataError, GroupView, UpliftDataset, group_view


@dataclass(frozen=True)
class GroupStats:
    """Per-arm outcome rates and the derived decomposition constants."""

    y_bar_t: float
    y_bar_c: float

    @property
    def lambda_t(self) -> float:
        return self.y_bar_t * (1.0 - self.y_bar_t)

    @property
    def lambda_c(self) -> float:
        return self.y_bar_c * (1.0 - self.y_bar_c)

    @property
    def gamma(self) -> float:
        return self.y_bar_t - self.y_bar_t**2 / 2.0 - self.y_bar_c**2 / 2.0

    @property
    def ate(self) -> float:
        return self.y_bar_t - self.y_bar_c


@dataclass(frozen=True)
class UpliftCurve:
    """Cumulative uplift V(k) for k = 1..n along the score ordering."""

    values: np.ndarray

    def as_csv_rows(self):
        return [(k + 1, float(v)) for k, v in enumerate(self.values)]


@dataclass(frozen=True)
class PolicyRiskPoint:
    ratio: float
    risk: float


def group_stats(ds: UpliftDataset) -> GroupStats:
    """Exact sample outcome means per arm; errors if an arm is empty."""
    t_rows = ds.treatment == 1
    if not t_rows.any() or t_rows.all():
        raise DataError("both treatment arms must be non-empty")
    return GroupStats(
        y_bar_t=float(ds.outcome[t_rows].mean()),
        y_bar_c=float(ds.outcome[~t_rows].mean()),
    )


def ranking_risk(scores_pos, scores_neg, tie_policy: str = "half") -> float:
    """Fraction of misordered positive/negative pairs.

    A pair contributes 1 when the positive scores strictly below the
    negative; ties contribute 1 under ``full`` (the conservative count
    used by the generalization bound) and 0.5 under ``half`` (the AUC
    convention, for which AUC = 1 - risk).
    """

    if tie_policy not in ("full", "half"):
        raise DataError(f"unknown tie_policy: {tie_policy!r}")
    pos = np.asarray(scores_pos, dtype=np.float64)
    neg = np.asarray(scores_neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise DataError("both score vectors must be non-empty")
    if not (np.isfinite(pos).all() and np.isfinite(neg).all()):
        raise DataError("scores must be finite")
    neg_sorted = np.sort(neg)
    lo = np.searchsorted(neg_sorted, pos, side="left")
    hi = np.searchsorted(neg_sorted, pos, side="right")
    ties = (hi - lo).sum()
    above = (neg.size - hi).sum()  # negatives strictly above the positive
    tie_value = 1.0 if tie_policy == "full" else 0.5
    return float((above + tie_value * ties) / (pos.size * neg.size))


def view_ranking_risk(scores: np.ndarray, view: GroupView, tie_policy: str = "half") -> float:
    """Ranking risk of a scored group view using its effective labels."""
    s = np.asarray(scores, dtype=np.float64)[view.row_indices]
    labels = view.effective_labels
    if labels.min() == labels.max():
        raise DataError(f"group {view.group} has a single effective class")
    return ranking_risk(s[labels == 1], s[labels == 0], tie_policy)


def _descending_order(scores: np.ndarray) -> np.ndarray:
    # stable sort on -scores == descending score, ties by ascending row index
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def uplift_curve(scorer, ds: UpliftDataset) -> UpliftCurve:
    """V(k) for k = 1..n; ties broken by ascending original row index."""
    scores = _scores_of(scorer, ds)
    order = _descending_order(scores)
    t = ds.treatment[order]
    y = ds.outcome[order]
    n_t = int(ds.treatment.sum())
    n_c = ds.n - n_t
    if n_t == 0 or n_c == 0:
        raise DataError("both treatment arms must be non-empty")
    v = np.cumsum(y * t) / n_t - np.cumsum(y * (1 - t)) / n_c
    return UpliftCurve(values=v)


def auuc(scorer, ds: UpliftDataset) -> float:
    """Area under the uplift curve: (1/n) * sum_k V(k).

    The 1/n factor normalizes the Riemann sum of the depth-fraction
    integral, so a random ranking scores ATE/2 and a perfect one
    approaches gamma.
    """

    return float(uplift_curve(scorer, ds).values.mean())


def auuc_decomposed(stats: GroupStats, risk_t: float, risk_c_reverted: float) -> float:
    """AUUC via the ranking-risk decomposition (exact in expectation)."""
    for r in (risk_t, risk_c_reverted):
        if not 0.0 <= r <= 1.0:
            raise DataError("risks must lie in [0, 1]")
    return stats.gamma - stats.lambda_t * risk_t - stats.lambda_c * risk_c_reverted


def auuc_via_risks(scorer, ds: UpliftDataset, tie_policy: str = "half") -> float:
    """Convenience: decomposition evaluated with empirical risks."""
    scores = _scores_of(scorer, ds)
    risk_t = view_ranking_risk(scores, group_view(ds, "T"), tie_policy)
    risk_c = view_ranking_risk(scores, group_view(ds, "C", revert=True), tie_policy)
    return auuc_decomposed(group_stats(ds), risk_t, risk_c)


def policy_risk(scorer, ds: UpliftDataset, treated_fraction: float) -> float:
    """Risk of treating the top ceil(rho * n) rows by score.

    1 - E[Y | T=1, treated set] * w - E[Y | T=0, untreated set] * (1 - w)
    with w = ceil(rho n)/n; an empty conditional cell contributes 0 with
    its weight.
    """

    if not 0.0 <= treated_fraction <= 1.0:
        raise DataError("treated_fraction must lie in [0, 1]")
    scores = _scores_of(scorer, ds)
    order = _descending_order(scores)
    m = int(np.ceil(treated_fraction * ds.n))
    chosen = np.zeros(ds.n, dtype=bool)
    chosen[order[:m]] = True
    w = m / ds.n
    in_cell = chosen & (ds.treatment == 1)
    out_cell = ~chosen & (ds.treatment == 0)
    term_in = float(ds.outcome[in_cell].mean()) * w if in_cell.any() else 0.0
    term_out = float(ds.outcome[out_cell].mean()) * (1.0 - w) if out_cell.any() else 0.0
    return 1.0 - term_in - term_out


def policy_risk_table(scorer, ds: UpliftDataset, ratios=None) -> list[PolicyRiskPoint]:
    if ratios is None:
        ratios = [round(0.1 * k, 1) for k in range(1, 10)]
    return [PolicyRiskPoint(r, policy_risk(scorer, ds, r)) for r in ratios]


def _scores_of(scorer, ds: UpliftDataset) -> np.ndarray:
    """Accept a scorer object, a callable, or a precomputed vector."""
    if isinstance(scorer, np.ndarray):
        scores = scorer
    elif hasattr(scorer, "score_rows"):
        scores = scorer.score_rows(ds.features)
    else:
        scores = scorer(ds.features)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (ds.n,):
        raise DataError("scores must be one value per dataset row")
    if not np.isfinite(scores).all():
        raise DataError("scores must be finite")
    return scores
