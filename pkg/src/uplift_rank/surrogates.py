"""Differentiable surrogates of the pairwise misordering indicator.

Two families are supported:

* ``log``:  s(z) = ln(1 + exp(-z)) / ln 2, which upper-bounds the
  indicator 1_{z <= 0} everywhere.
* ``poly``: s(z) = (mu - z)^p for z < mu and 0 otherwise.  With
  (mu=1, p=3) it also dominates the indicator; the experiment default
  (mu=0.1, p=3) deliberately trades dominance for a sharper hinge.

Both are monotone non-increasing, so driving the surrogate down drives
positive-minus-negative score margins up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import KIND_LOG, KIND_POLY

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class SurrogateSpec:
    """Selects a surrogate family and its shape parameters.

    ``mu`` and ``p`` only apply to the ``poly`` kind; ``p`` must be a
    positive integer so the one-sided derivative at the kink is finite.
    """

    kind: str = "log"
    mu: float = 0.1
    p: int = 3

    def __post_init__(self):
        if self.kind not in ("log", "poly"):
            raise ValueError(f"unknown surrogate kind: {self.kind!r}")
        if self.kind == "poly" and (self.p < 1 or int(self.p) != self.p):
            raise ValueError("poly exponent p must be a positive integer")

    @property
    def kind_code(self) -> int:
        return KIND_LOG if self.kind == "log" else KIND_POLY


def surrogate_eval(spec: SurrogateSpec, z):
    """Evaluate the surrogate at scalar or array ``z``.

    The log branch is evaluated as softplus(-z)/ln2 split by sign, so it
    neither overflows for z ~ -700 nor loses the tail for large z.
    """

    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValueError("surrogate input must be finite")
    if spec.kind == "log":
        out = (np.maximum(-z, 0.0) + np.log1p(np.exp(-np.abs(z)))) / _LN2
    else:
        out = np.where(z < spec.mu, (spec.mu - z) ** spec.p, 0.0)
    return out if out.ndim else float(out)


def surrogate_grad(spec: SurrogateSpec, z):
    """Derivative of :func:`surrogate_eval` with respect to ``z``.

    For ``poly`` the derivative at and beyond the kink z = mu is 0 (the
    flat side), which is the subgradient used by the optimizer.
    """

    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValueError("surrogate input must be finite")
    if spec.kind == "log":
        # -sigmoid(-z)/ln2 via the non-positive exponent branch
        pos = z >= 0.0
        ez = np.exp(np.where(pos, -z, z))
        sig = np.where(pos, ez / (1.0 + ez), 1.0 / (1.0 + ez))
        out = -sig / _LN2
    else:
        out = np.where(z < spec.mu, -spec.p * (spec.mu - z) ** (spec.p - 1), 0.0)
    return out if out.ndim else float(out)
