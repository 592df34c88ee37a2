"""Temperature-scaled softmax over heads and the induced edge weights."""

from __future__ import annotations

import math

import numpy as np

from .core import ROOT, Arborescence, EdgeWeights, ScoreMatrix, ScoreValueError, ShapeError, as_temperature


def _scaled_columns(x: ScoreMatrix, t, root: int = ROOT):
    t = as_temperature(t)
    z = x.values / t.t
    finite = np.isfinite(z)
    dead = ~finite.any(axis=0)
    dead[root] = False
    if dead.any():
        bad = np.flatnonzero(dead).tolist()
        raise ScoreValueError(f"every incoming edge is masked for dependent(s) {bad}")
    # column max over finite entries; fully masked columns get 0 so they stay -inf
    m = np.where(finite, z, -np.inf).max(axis=0)
    m = np.where(np.isfinite(m), m, 0.0)
    return t, z, m


def softmax_probabilities(x: ScoreMatrix, t=1.0, root: int = ROOT) -> np.ndarray:
    """Column-wise softmax of ``x / t`` over heads.

    A fully masked column (normally only ROOT's) comes back as all zeros.
    """
    _, z, m = _scaled_columns(x, t, root)
    e = np.exp(z - m)
    s = e.sum(axis=0)
    s[s == 0] = 1.0
    return e / s


def log_softmax_weights(x: ScoreMatrix, t=1.0, root: int = ROOT) -> EdgeWeights:
    """Edge weights ``w[h, d] = x[h, d]/t - logsumexp_k(x[k, d]/t)``."""
    t, z, m = _scaled_columns(x, t, root)
    s = np.exp(z - m).sum(axis=0)
    # a fully masked column has s == 0; leave it at -inf rather than nan
    lse = m + np.log(np.where(s > 0, s, 1.0))
    return EdgeWeights(z - lse, t)


def _weight_array(w) -> np.ndarray:
    return w.w if isinstance(w, EdgeWeights) else np.asarray(w, dtype=np.float64)


def arborescence_weight(a: Arborescence, w) -> float:
    """Sum of the tree's edge weights, exactly rounded (``math.fsum``)."""
    arr = _weight_array(w)
    if arr.shape != (a.n, a.n):
        raise ShapeError(f"tree has {a.n} nodes but weights have shape {arr.shape}")
    return math.fsum(arr[h, d] for h, d in a.edges())


def weight_difference_identity(a: Arborescence, a_prime: Arborescence, x: ScoreMatrix, t=1.0):
    """Return both sides of the weight-difference identity.

    ``lhs`` subtracts the two tree weights under the log-softmax weights;
    ``rhs`` uses only the raw logits: ``(1/t) * sum_d (x[pi(d), d] - x[pi'(d), d])``.
    The per-column normalizers cancel, so the two agree for every t.
    """
    if a.root != a_prime.root:
        raise ValueError(f"trees have different roots ({a.root} vs {a_prime.root})")
    if a.n != a_prime.n or a.n != x.n:
        raise ShapeError("trees and score matrix disagree on the node count")
    t = as_temperature(t)
    w = log_softmax_weights(x, t, a.root)
    lhs = arborescence_weight(a, w) - arborescence_weight(a_prime, w)
    v = x.values
    rhs = math.fsum(
        v[a.parents[d], d] - v[a_prime.parents[d], d] for d in range(a.n) if d != a.root
    ) / t.t
    return lhs, rhs


def column_entropy(p: np.ndarray) -> np.ndarray:
    """Shannon entropy (nats) of each probability column."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log(p), 0.0)
    return terms.sum(axis=0)
