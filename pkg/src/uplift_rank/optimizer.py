"""Max-norm constrained pairwise surrogate minimization.

The training objective is the sum over both groups (treated, and control
with reverted labels) of the mean surrogate loss over every
positive x negative score pair.  Gradients never materialize the pair
grid: the kernel returns the row/column sums of the surrogate derivative
matrix and the chain rule reduces to two matrix-vector products.

Optimization is Adam with bias correction and step decay; after every
update the weight vector is projected back onto the ||w|| <= Lambda ball,
which is how the capacity constraint of the hypothesis class is enforced
in practice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import pair_surrogate_grad_sums, pair_surrogate_sum
from .data import DataError, GroupView, UpliftDataset, group_view
from .metrics import GroupStats, group_stats
from .surrogates import SurrogateSpec


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 512  # positives and negatives drawn per group per step
    epochs: int = 120
    early_stop_patience: int = 10
    lambda_cap: float = 1.0
    surrogate: SurrogateSpec = field(default_factory=SurrogateSpec)
    weighted_by_lambda: bool = False
    seed: int = 0
    step_decay_factor: float = 0.5
    step_decay_interval: int = 50
    steps_per_epoch: int | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.lambda_cap <= 0:
            raise DataError("lambda_cap must be positive")


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, dim: int) -> "AdamState":
        return cls(m=np.zeros(dim), v=np.zeros(dim))

    def update(self, w: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return w - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def project_max_norm(w: np.ndarray, lambda_cap: float) -> np.ndarray:
    """Scale w back onto the ball ||w|| <= Lambda; idempotent."""
    if lambda_cap <= 0:
        raise DataError("lambda_cap must be positive")
    norm = float(np.linalg.norm(w))
    if norm <= lambda_cap:
        return w
    return w * (lambda_cap / norm)


def _group_pos_neg(view: GroupView):
    labels = view.effective_labels
    if labels.min() == labels.max():
        raise DataError(f"group {view.group} view has a single effective class")
    x = view.features
    return x[labels == 1], x[labels == 0]


def pairwise_loss(
    w: np.ndarray,
    view_t: GroupView,
    view_c_reverted: GroupView,
    spec: SurrogateSpec,
    weighted: bool = False,
    stats: GroupStats | None = None,
) -> float:
    """Full-pair surrogate objective at w (the bound's constant term excluded)."""
    total = 0.0
    for view, lam in _group_weights(view_t, view_c_reverted, weighted, stats):
        xp, xn = _group_pos_neg(view)
        s = pair_surrogate_sum(xp @ w, xn @ w, spec.kind_code, spec.mu, spec.p)
        total += lam * s / (xp.shape[0] * xn.shape[0])
    return total


def pairwise_grad(
    w: np.ndarray,
    view_t: GroupView,
    view_c_reverted: GroupView,
    spec: SurrogateSpec,
    weighted: bool = False,
    stats: GroupStats | None = None,
) -> np.ndarray:
    """Exact gradient of :func:`pairwise_loss` with respect to w."""
    grad = np.zeros_like(np.asarray(w, dtype=np.float64))
    for view, lam in _group_weights(view_t, view_c_reverted, weighted, stats):
        xp, xn = _group_pos_neg(view)
        _, dpos, dneg = pair_surrogate_grad_sums(
            xp @ w, xn @ w, spec.kind_code, spec.mu, spec.p
        )
        grad += lam * (xp.T @ dpos - xn.T @ dneg) / (xp.shape[0] * xn.shape[0])
    return grad


def _group_weights(view_t, view_c_reverted, weighted, stats):
    if not weighted:
        return [(view_t, 1.0), (view_c_reverted, 1.0)]
    if stats is None:
        raise DataError("weighted objective needs group stats")
    return [(view_t, stats.lambda_t), (view_c_reverted, stats.lambda_c)]


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    learning_rate: float
    weight_norm: float


@dataclass(frozen=True)
class TrainingLog:
    records: list[EpochRecord]
    best_epoch: int
    best_val_loss: float

    def as_csv_rows(self):
        rows = [("epoch", "train_loss", "val_loss", "lr", "weight_norm")]
        rows += [
            (r.epoch, repr(r.train_loss), repr(r.val_loss), repr(r.learning_rate), repr(r.weight_norm))
            for r in self.records
        ]
        return rows


def train_ranker(
    train: UpliftDataset,
    validation: UpliftDataset,
    cfg: TrainConfig,
) -> tuple[np.ndarray, TrainingLog]:
    """Fit max-norm linear weights on the pairwise surrogate objective.

    Each step draws ``batch_size`` positives and ``batch_size`` negatives
    per group with replacement, forms the in-batch pair grid (an unbiased
    estimate of the full-pair mean) and takes one projected Adam step.
    The epoch-level validation loss is the full-pair objective on the
    validation set; the returned weights are the snapshot with the best
    validation loss.  Deterministic under ``cfg.seed``.
    """

    stats = group_stats(train)
    views_train = (group_view(train, "T"), group_view(train, "C", revert=True))
    views_val = (group_view(validation, "T"), group_view(validation, "C", revert=True))
    groups = [_group_pos_neg(v) for v in views_train]
    for v in views_val:
        _group_pos_neg(v)  # validate both classes present

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    d = train.d
    w = np.zeros(d)
    adam = AdamState.zeros(d)
    b = cfg.batch_size
    steps = cfg.steps_per_epoch or max(1, int(np.ceil(train.n / (4 * b))))
    lam_weights = [stats.lambda_t, stats.lambda_c] if cfg.weighted_by_lambda else [1.0, 1.0]
    spec = cfg.surrogate

    records: list[EpochRecord] = []
    best_val = np.inf
    best_w = w.copy()
    best_epoch = 0
    since_best = 0
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.learning_rate * cfg.step_decay_factor ** ((epoch - 1) // cfg.step_decay_interval)
        epoch_loss = 0.0
        for _ in range(steps):
            grad = np.zeros(d)
            loss = 0.0
            for (xp, xn), lam in zip(groups, lam_weights):
                bp = xp[rng.integers(0, xp.shape[0], size=b)]
                bn = xn[rng.integers(0, xn.shape[0], size=b)]
                s, dpos, dneg = pair_surrogate_grad_sums(
                    bp @ w, bn @ w, spec.kind_code, spec.mu, spec.p
                )
                loss += lam * s / (b * b)
                grad += lam * (bp.T @ dpos - bn.T @ dneg) / (b * b)
            if not np.isfinite(loss):
                raise DataError("training loss diverged (non-finite); lower the learning rate")
            w = project_max_norm(adam.update(w, grad, lr), cfg.lambda_cap)
            assert np.linalg.norm(w) <= cfg.lambda_cap * (1.0 + 1e-12)
            epoch_loss += loss
        val_loss = pairwise_loss(w, *views_val, spec, cfg.weighted_by_lambda, stats)
        records.append(EpochRecord(epoch, epoch_loss / steps, val_loss, lr, float(np.linalg.norm(w))))
        if val_loss < best_val:
            best_val = val_loss
            best_w = w.copy()
            best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.early_stop_patience:
                break
    return best_w, TrainingLog(records, best_epoch, float(best_val))

