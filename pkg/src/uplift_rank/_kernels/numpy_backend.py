"""NumPy fallback for the pairwise kernels.

Broadcasts the score-difference grid in chunks of rows so memory stays
bounded (~16 MB per chunk) whatever the group sizes are.
"""

import numpy as np

_LN2 = np.log(2.0)
_CHUNK_ELEMENTS = 2_000_000


def _int_power(base, p):
    # repeated multiplication beats generic float pow for the small integer
    # exponents the polynomial surrogate uses (p >= 1 by construction)
    out = base
    for _ in range(p - 1):
        out = out * base
    return out


def _surrogate(z, kind, mu, p):
    if kind == 0:
        # softplus(-z)/ln2, split by sign for overflow safety
        out = np.where(z > 0.0, np.log1p(np.exp(-np.abs(z))), -np.minimum(z, 0.0) + np.log1p(np.exp(-np.abs(z))))
        return out / _LN2
    return np.where(z < mu, _int_power(mu - z, p), 0.0)


def _surrogate_deriv(z, kind, mu, p):
    if kind == 0:
        # -sigmoid(-z)/ln2, computed via exp of the non-positive branch
        pos = z >= 0.0
        ez = np.exp(np.where(pos, -z, z))
        sig = np.where(pos, ez / (1.0 + ez), 1.0 / (1.0 + ez))
        return -sig / _LN2
    if p == 1:
        return np.where(z < mu, -1.0, 0.0)
    return np.where(z < mu, -p * _int_power(mu - z, p - 1), 0.0)


def _chunks(n_pos, n_neg):
    rows = max(1, _CHUNK_ELEMENTS // max(1, n_neg))
    for start in range(0, n_pos, rows):
        yield start, min(start + rows, n_pos)


def pair_surrogate_sum(pos, neg, kind, mu, p):
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    total = 0.0
    for a, b in _chunks(pos.size, neg.size):
        z = pos[a:b, None] - neg[None, :]
        total += float(_surrogate(z, kind, mu, p).sum())
    return total


def pair_surrogate_grad_sums(pos, neg, kind, mu, p):
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    dpos = np.zeros(pos.size)
    dneg = np.zeros(neg.size)
    total = 0.0
    for a, b in _chunks(pos.size, neg.size):
        z = pos[a:b, None] - neg[None, :]
        total += float(_surrogate(z, kind, mu, p).sum())
        g = _surrogate_deriv(z, kind, mu, p)
        dpos[a:b] = g.sum(axis=1)
        dneg += g.sum(axis=0)
    return total, dpos, dneg
