"""Pairwise kernel backends.

The hot loop of the whole package is the evaluation of a surrogate loss
(and its derivative) over the positive x negative score grid of a group.
A Cython extension implements it without materializing the grid; a NumPy
fallback with chunked broadcasting is selected at import time when the
extension is not built.  ``UPLIFT_RANK_FORCE_NUMPY=1`` forces the fallback
(used by the benchmark and the backend-equivalence tests).

Both backends expose:

    pair_surrogate_sum(pos, neg, kind, mu, p) -> float
        Sum of s(pos_i - neg_j) over all n_pos * n_neg pairs.

    pair_surrogate_grad_sums(pos, neg, kind, mu, p)
        -> (loss_sum, dpos, dneg) where dpos[i] = sum_j s'(pos_i - neg_j)
        and dneg[j] = sum_i s'(pos_i - neg_j).

``kind`` is 0 for the logistic surrogate, 1 for the polynomial one.
"""

import os

from . import numpy_backend

KIND_LOG = 0
KIND_POLY = 1

if os.environ.get("UPLIFT_RANK_FORCE_NUMPY") == "1":
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import _pairwise_cy as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = numpy_backend
        BACKEND = "numpy"

pair_surrogate_sum = _impl.pair_surrogate_sum
pair_surrogate_grad_sums = _impl.pair_surrogate_grad_sums
