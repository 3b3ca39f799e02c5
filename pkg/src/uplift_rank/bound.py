"""Generalization lower bound on the area under the uplift curve.

For the max-norm linear class the pair-level Rademacher complexity of
each group admits a closed-form upper bound depending only on the
group's governing class count, the feature-norm radius R and the weight
cap Lambda.  Aggregating both groups (with their Bernoulli variance
weights), the complexity cross-terms and a fast tail term yields a
high-probability lower bound on the expected AUUC computable from the
training split alone.

A Monte-Carlo oracle estimates the underlying fractional pair-level
Rademacher complexity directly (cover of the bipartite pair-dependency
graph into matchings) and is used to validate the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import DataError, GroupView, UpliftDataset, group_view
from .metrics import GroupStats, group_stats, view_ranking_risk
from .models import score


@dataclass(frozen=True)
class FunctionClassSpec:
    """Linear class with ||w|| <= lambda_cap over features of norm <= radius.

    The variance of any member is at most lambda_cap^2 * radius^2 (by
    Cauchy-Schwarz plus Popoviciu), which is the ``variance_cap`` used in
    the complexity cross-terms.
    """

    lambda_cap: float
    radius: float

    def __post_init__(self):
        if self.lambda_cap <= 0 or self.radius <= 0:
            raise DataError("lambda_cap and radius must be positive")

    @property
    def variance_cap(self) -> float:
        return self.lambda_cap**2 * self.radius**2


def function_class_for(train: UpliftDataset, lambda_cap: float) -> FunctionClassSpec:
    """Measure R as the maximum feature norm over the training split."""
    radius = float(np.linalg.norm(train.features, axis=1).max())
    if radius == 0.0:
        raise DataError("training features are all-zero; radius undefined")
    return FunctionClassSpec(lambda_cap=lambda_cap, radius=radius)


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise DataError("delta must lie strictly inside (0, 1)")


def rademacher_upper(n_pos: int, radius: float, lambda_cap: float, delta: float) -> float:
    """Closed-form complexity bound sqrt(R^2 L^2 / n+) + sqrt(log(2/d)/(2 n+)).

    Holds with probability 1 - delta/2; depends only on the count of the
    group's governing class.
    """

    _check_delta(delta)
    if n_pos < 1:
        raise DataError("n_pos must be >= 1")
    return math.sqrt(radius**2 * lambda_cap**2 / n_pos) + math.sqrt(
        math.log(2.0 / delta) / (2.0 * n_pos)
    )


def c_delta(
    rad_t: float,
    rad_c: float,
    stats: GroupStats,
    spec: FunctionClassSpec,
    n_pos_t: int,
    n_neg_c: int,
    delta: float,
) -> float:
    """Aggregate complexity term of the lower bound."""
    _check_delta(delta)
    if rad_t < 0 or rad_c < 0:
        raise DataError("complexity terms must be non-negative")
    root_2r = math.sqrt(2.0 * spec.variance_cap)
    log_term = math.sqrt(math.log(2.0 / delta))
    cross = (
        stats.lambda_t * (2.5 * math.sqrt(rad_t) + 1.25 * root_2r) / math.sqrt(n_pos_t)
        + stats.lambda_c * (2.5 * math.sqrt(rad_c) + 1.25 * root_2r) / math.sqrt(n_neg_c)
    )
    return stats.lambda_t * rad_t + stats.lambda_c * rad_c + cross * log_term


@dataclass(frozen=True)
class BoundReport:
    """Every term of the lower bound, mutually consistent by construction."""

    gamma: float
    lambda_t: float
    lambda_c: float
    risk_t: float
    risk_c: float
    rad_t: float
    rad_c: float
    c_delta: float
    tail: float
    lower_bound: float
    delta: float
    n_pos_t: int
    n_neg_c: int
    lambda_cap: float
    radius: float

    def __post_init__(self):
        recomputed = (
            self.gamma
            - (self.lambda_t * self.risk_t + self.lambda_c * self.risk_c)
            - self.c_delta
            - self.tail
        )
        if abs(recomputed - self.lower_bound) > 1e-9 * max(1.0, abs(recomputed)):
            raise DataError("bound report terms are inconsistent")

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "lambda_t": self.lambda_t,
            "lambda_c": self.lambda_c,
            "risk_t": self.risk_t,
            "risk_c": self.risk_c,
            "rad_t": self.rad_t,
            "rad_c": self.rad_c,
            "c_delta": self.c_delta,
            "tail": self.tail,
            "lower_bound": self.lower_bound,
            "delta": self.delta,
            "n_pos_t": self.n_pos_t,
            "n_neg_c": self.n_neg_c,
            "lambda_cap": self.lambda_cap,
            "radius": self.radius,
        }


def auuc_lower_bound(
    scorer,
    train: UpliftDataset,
    spec: FunctionClassSpec,
    delta: float = 0.05,
) -> BoundReport:
    """Training-set lower bound on expected AUUC at confidence 1 - delta.

    Empirical risks use the conservative tie policy (ties count as full
    errors) so the subtracted risks upper-bound the misordering rate.
    The treated group is governed by its positive count, the
    reverted-control group by the count of original control negatives.
    """

    _check_delta(delta)
    from .models import LinearScorer

    if not isinstance(scorer, LinearScorer):
        raise DataError("the lower bound applies to max-norm linear scorers")
    norm = float(np.linalg.norm(scorer.weights))
    if norm > spec.lambda_cap * (1.0 + 1e-9):
        raise DataError(
            f"scorer norm {norm:.6g} exceeds the class cap {spec.lambda_cap:.6g}; "
            "the bound only covers weight vectors inside the cap"
        )
    stats = group_stats(train)
    scores = score(scorer, train)
    view_t = group_view(train, "T")
    view_c = group_view(train, "C", revert=True)
    risk_t = view_ranking_risk(scores, view_t, "full")
    risk_c = view_ranking_risk(scores, view_c, "full")
    n_pos_t = view_t.n_pos
    n_neg_c = view_c.n_pos  # positives of the reverted control set
    rad_t = rademacher_upper(n_pos_t, spec.radius, spec.lambda_cap, delta)
    rad_c = rademacher_upper(n_neg_c, spec.radius, spec.lambda_cap, delta)
    cd = c_delta(rad_t, rad_c, stats, spec, n_pos_t, n_neg_c, delta)
    tail = (25.0 / 48.0) * (
        stats.lambda_t / n_pos_t + stats.lambda_c / n_neg_c
    ) * math.log(2.0 / delta)
    lower = stats.gamma - (stats.lambda_t * risk_t + stats.lambda_c * risk_c) - cd - tail
    return BoundReport(
        gamma=stats.gamma,
        lambda_t=stats.lambda_t,
        lambda_c=stats.lambda_c,
        risk_t=risk_t,
        risk_c=risk_c,
        rad_t=rad_t,
        rad_c=rad_c,
        c_delta=cd,
        tail=tail,
        lower_bound=lower,
        delta=delta,
        n_pos_t=n_pos_t,
        n_neg_c=n_neg_c,
        lambda_cap=spec.lambda_cap,
        radius=spec.radius,
    )


MC_ORACLE_PAIR_CAP = 100_000


def rademacher_mc_oracle(
    dataset_group: GroupView,
    spec: FunctionClassSpec,
    num_sigma_draws: int = 200,
    seed: int = 0,
) -> float:
    """Monte-Carlo fractional Rademacher complexity of the linear class.

    The bipartite pair-dependency graph is covered by max(n+, n-)
    matchings of min(n+, n-) pairs each (unit cover weights); within a
    matching the pairs share no example, so for each sign draw the
    supremum over {w . x : ||w|| <= Lambda} is Lambda times the norm of
    the signed sum of pair differences.  Small scale only.
    """

    labels = dataset_group.effective_labels
    if labels.min() == labels.max():
        raise DataError("group needs at least one positive and one negative")
    x = dataset_group.features
    xp, xn = x[labels == 1], x[labels == 0]
    a, b = xp.shape[0], xn.shape[0]
    if a * b > MC_ORACLE_PAIR_CAP:
        raise DataError(f"pair count {a * b} exceeds oracle cap {MC_ORACLE_PAIR_CAP}")
    if a > b:
        xp, xn = xn, xp  # symmetric construction on the smaller side
        a, b = b, a
    # diffs[k, i] = x_pos[i] - x_neg[(i + k) mod b]: subset k is a matching
    i = np.arange(a)
    diffs = np.stack([xp - xn[(i + k) % b] for k in range(b)])
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    total = 0.0
    for _ in range(num_sigma_draws):
        sig = rng.integers(0, 2, size=(b, a)) * 2.0 - 1.0
        signed = np.einsum("ki,kid->kd", sig, diffs)
        total += spec.lambda_cap * np.linalg.norm(signed, axis=1).sum()
    return total / (num_sigma_draws * a * b)
