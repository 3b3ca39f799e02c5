"""Scorers: the max-norm linear ranker plus two classic baselines.

The baselines are built on an in-house L2-regularized logistic
regression trained with the same Adam engine as the ranker, so there is
one numerical core to validate:

* two-model: fit an outcome model per arm, score by the difference of
  predicted probabilities;
* transformed-label: fit a single model on Z = Y*T + (1-T)*(1-Y) and
  score by 2*P(Z=1|x) - 1 (equal to the individual effect under a
  balanced randomized assignment).

All scorers expose ``score_rows(features) -> scores`` and serialize to a
small JSON document (version "1").
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .artifacts import atomic_write_json, read_json
from .data import DataError, UpliftDataset, sigmoid
from .optimizer import AdamState, TrainConfig


@dataclass(frozen=True)
class LinearScorer:
    """Weights + intercept; the intercept never affects rankings but is
    meaningful for the logistic members."""

    weights: np.ndarray
    intercept: float = 0.0
    feature_names: list[str] | None = None
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or not np.isfinite(w).all() or not np.isfinite(self.intercept):
            raise DataError("weights and intercept must be finite, weights 1-D")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def score_rows(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1] != self.weights.size:
            raise DataError(
                f"feature dimension mismatch: got {x.shape[1]}, model has {self.weights.size}"
            )
        return x @ self.weights + self.intercept

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return sigmoid(self.score_rows(x))


@dataclass(frozen=True)
class TwoModelScorer:
    model_t: LinearScorer
    model_c: LinearScorer

    def __post_init__(self):
        if self.model_t.weights.size != self.model_c.weights.size:
            raise DataError("two-model members must share one feature schema")

    def score_rows(self, x: np.ndarray) -> np.ndarray:
        return self.model_t.predict_proba(x) - self.model_c.predict_proba(x)


@dataclass(frozen=True)
class CvtScorer:
    model_z: LinearScorer

    def score_rows(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * self.model_z.predict_proba(x) - 1.0


def predict_tm(m: TwoModelScorer, x: np.ndarray) -> np.ndarray:
    return m.score_rows(np.atleast_2d(x))


def predict_cvt(m: CvtScorer, x: np.ndarray) -> np.ndarray:
    return m.score_rows(np.atleast_2d(x))


def score(scorer, ds: UpliftDataset) -> np.ndarray:
    """Per-row score vector of any scorer on a dataset."""
    return np.asarray(scorer.score_rows(ds.features), dtype=np.float64)


# ---------------------------------------------------------------------------
# Logistic regression on the shared Adam engine
# ---------------------------------------------------------------------------

def fit_logistic(
    x: np.ndarray,
    y: np.ndarray,
    l2: float = 0.0,
    opt: TrainConfig | None = None,
    x_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
) -> LinearScorer:
    """Minimize mean cross-entropy + l2 * ||w||^2 / 2 with mini-batch Adam.

    The intercept is not penalized.  If validation arrays are given, the
    returned model is the best-validation-loss snapshot with early
    stopping; otherwise the final iterate is returned.
    """

    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.min() == y.max():
        raise DataError("logistic regression needs both classes present")
    cfg = opt or TrainConfig(learning_rate=5e-2, epochs=60)
    n, d = x.shape
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    theta = np.zeros(d + 1)  # weights then intercept
    adam = AdamState.zeros(d + 1)
    b = min(cfg.batch_size, n)
    steps = cfg.steps_per_epoch or max(1, int(np.ceil(n / b)))
    track_val = x_val is not None and y_val is not None
    best = (np.inf, theta.copy())
    since_best = 0
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.learning_rate * cfg.step_decay_factor ** ((epoch - 1) // cfg.step_decay_interval)
        for _ in range(steps):
            rows = rng.integers(0, n, size=b)
            xb, yb = x[rows], y[rows]
            resid = sigmoid(xb @ theta[:d] + theta[d]) - yb
            grad = np.empty(d + 1)
            grad[:d] = xb.T @ resid / b + l2 * theta[:d]
            grad[d] = resid.mean()
            theta = adam.update(theta, grad, lr)
        if track_val:
            val = _cross_entropy(x_val @ theta[:d] + theta[d], y_val) + 0.5 * l2 * theta[:d] @ theta[:d]
            if val < best[0]:
                best = (val, theta.copy())
                since_best = 0
            else:
                since_best += 1
                if since_best >= cfg.early_stop_patience:
                    break
    if track_val:
        theta = best[1]
    return LinearScorer(theta[:d], float(theta[d]), meta={"l2": l2, "train_digest": config_digest(cfg)})


def _cross_entropy(logits: np.ndarray, y: np.ndarray) -> float:
    # log(1 + exp(-margin)) with the stable split, margin = (2y-1) * logit
    margin = (2.0 * np.asarray(y) - 1.0) * logits
    return float((np.maximum(-margin, 0.0) + np.log1p(np.exp(-np.abs(margin)))).mean())


def fit_two_model(
    train: UpliftDataset,
    validation: UpliftDataset | None,
    l2: float = 0.0,
    opt: TrainConfig | None = None,
) -> TwoModelScorer:
    """Fit one outcome model per arm on disjoint row subsets."""
    members = {}
    for name, flag in (("T", 1), ("C", 0)):
        rows = train.treatment == flag
        if validation is not None:
            v_rows = validation.treatment == flag
            xv, yv = validation.features[v_rows], validation.outcome[v_rows]
        else:
            xv = yv = None
        member = fit_logistic(train.features[rows], train.outcome[rows], l2, opt, xv, yv)
        members[name] = replace(member, feature_names=list(train.feature_names))
    return TwoModelScorer(model_t=members["T"], model_c=members["C"])


def cvt_labels(ds: UpliftDataset) -> np.ndarray:
    """Z = Y*T + (1-T)*(1-Y): 1 for treated responders and control
    non-responders."""
    return ds.outcome * ds.treatment + (1 - ds.treatment) * (1 - ds.outcome)


def fit_cvt(
    train: UpliftDataset,
    validation: UpliftDataset | None,
    l2: float = 0.0,
    opt: TrainConfig | None = None,
) -> CvtScorer:
    if validation is not None:
        xv, yv = validation.features, cvt_labels(validation)
    else:
        xv = yv = None
    model = fit_logistic(train.features, cvt_labels(train), l2, opt, xv, yv)
    return CvtScorer(model_z=replace(model, feature_names=list(train.feature_names)))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def config_digest(cfg) -> str:
    return hashlib.sha256(repr(cfg).encode()).hexdigest()[:12]


def _linear_to_dict(m: LinearScorer) -> dict:
    return {
        "feature_names": m.feature_names,
        "weights": [float(v) for v in m.weights],
        "intercept": float(m.intercept),
        "lambda_cap": m.meta.get("lambda_cap"),
        "train_digest": m.meta.get("train_digest"),
    }


def _linear_from_dict(doc: dict) -> LinearScorer:
    meta = {k: doc[k] for k in ("lambda_cap", "train_digest") if doc.get(k) is not None}
    return LinearScorer(
        np.asarray(doc["weights"]), doc.get("intercept", 0.0), doc.get("feature_names"), meta
    )


def model_to_dict(scorer) -> dict:
    if isinstance(scorer, LinearScorer):
        return {"version": "1", "type": "linear", **_linear_to_dict(scorer)}
    if isinstance(scorer, TwoModelScorer):
        return {
            "version": "1",
            "type": "two_model",
            "model_t": _linear_to_dict(scorer.model_t),
            "model_c": _linear_to_dict(scorer.model_c),
        }
    if isinstance(scorer, CvtScorer):
        return {"version": "1", "type": "cvt", "model_z": _linear_to_dict(scorer.model_z)}
    raise DataError(f"cannot serialize scorer of type {type(scorer).__name__}")


def model_from_dict(doc: dict):
    if doc.get("version") != "1":
        raise DataError(f"unsupported model file version: {doc.get('version')!r}")
    kind = doc.get("type")
    if kind == "linear":
        return _linear_from_dict(doc)
    if kind == "two_model":
        return TwoModelScorer(
            _linear_from_dict(doc["model_t"]), _linear_from_dict(doc["model_c"])
        )
    if kind == "cvt":
        return CvtScorer(_linear_from_dict(doc["model_z"]))
    raise DataError(f"unknown model type: {kind!r}")


def save_model(scorer, path: str) -> None:
    atomic_write_json(path, model_to_dict(scorer))


def load_model(path: str):
    return model_from_dict(read_json(path))
