"""Temperature fitting and calibration metrics over head-attachment decisions.

Every non-root token is one classification: its softmax column is a
distribution over candidate heads and its gold head is the label.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ArboError, ShapeError, Temperature, as_temperature
from .decode import DecodeOptions, decode
from .weighting import log_softmax_weights, softmax_probabilities

T_MIN = 0.05
T_MAX = 20.0
LOG_T_TOL = 1e-4
DEFAULT_BINS = 10

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class CalibrationError(ArboError, ValueError):
    pass


def _check_instances(instances):
    instances = list(instances)
    if not instances:
        raise CalibrationError("need at least one (scores, gold tree) instance")
    for x, gold in instances:
        if gold is None:
            raise CalibrationError("instance has no gold tree")
        if gold.n != x.n:
            raise ShapeError(f"gold tree has {gold.n} nodes, scores have {x.n}")
    return instances


class _StackedNLL:
    """Negative log-likelihood of gold heads, batched by sentence length."""

    def __init__(self, instances):
        groups = defaultdict(list)
        for x, gold in instances:
            groups[x.n].append((x, gold))
        self.groups = []
        self.count = 0
        for n, items in sorted(groups.items()):
            X = np.stack([x.values for x, _ in items])
            heads = np.zeros((len(items), n), dtype=np.intp)
            keep = np.ones((len(items), n), dtype=bool)
            for i, (_, gold) in enumerate(items):
                for d, h in enumerate(gold.parents):
                    if d == gold.root:
                        keep[i, d] = False
                    else:
                        heads[i, d] = h
            gold_logit = np.take_along_axis(X, heads[:, None, :], axis=1)[:, 0, :]
            if np.isneginf(gold_logit[keep]).any():
                raise CalibrationError("a gold head points along a masked edge")
            self.groups.append((X, heads, keep))
            self.count += int(keep.sum())

    def terms(self, t: float) -> np.ndarray:
        out = []
        for X, heads, keep in self.groups:
            z = X / t
            finite = np.isfinite(z)
            m = np.where(finite, z, -np.inf).max(axis=1)
            m = np.where(np.isfinite(m), m, 0.0)
            s = np.exp(z - m[:, None, :]).sum(axis=1)
            lse = m + np.log(np.where(s > 0, s, 1.0))
            gold = np.take_along_axis(z, heads[:, None, :], axis=1)[:, 0, :]
            out.append((lse - gold)[keep])
        return np.concatenate(out)

    def __call__(self, t: float) -> float:
        return math.fsum(self.terms(t)) / self.count


def attachment_nll(instances, t=1.0) -> float:
    """Mean ``-log p(gold head | dependent)`` over all non-root tokens."""
    t = as_temperature(t)
    return _StackedNLL(_check_instances(instances))(t.t)


def fit_temperature(instances, t_min: float = T_MIN, t_max: float = T_MAX, tol: float = LOG_T_TOL) -> Temperature:
    """Minimise attachment NLL over ``t`` in ``[t_min, t_max]``.

    Golden-section search on ``log t``. The interval ends and ``t = 1``
    are also evaluated and the best of all candidates is returned, so the
    result never does worse than the uncalibrated model and a monotone
    objective lands exactly on the boundary.
    """
    nll = _StackedNLL(_check_instances(instances))
    a, b = math.log(t_min), math.log(t_max)

    def f(u):
        return nll(math.exp(u))

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    candidates = [math.exp((a + b) / 2), t_min, t_max]
    if t_min <= 1.0 <= t_max:
        candidates.append(1.0)
    best = min(candidates, key=lambda t: (nll(t), t))
    return Temperature(min(max(best, t_min), t_max))


@dataclass(frozen=True)
class ReliabilityBin:
    lo: float
    hi: float
    mean_confidence: Optional[float]
    accuracy: Optional[float]
    count: int


@dataclass
class CalibrationResult:
    ece: float
    bins: list[ReliabilityBin]
    accuracy: float
    correct: int
    total: int


def binned_ece(confidences: Sequence[float], correct: Sequence[bool], n_bins: int = DEFAULT_BINS):
    """ECE over equal-width ``(lo, hi]`` bins on ``[0, 1]``.

    Returns ``(ece, bins)``; empty bins carry ``None`` statistics.
    """
    if n_bins < 1:
        raise ValueError("need at least one bin")
    conf = np.asarray(confidences, dtype=np.float64)
    hit = np.asarray(correct, dtype=bool)
    if conf.shape != hit.shape or conf.ndim != 1:
        raise ShapeError("confidences and correctness flags must be equal-length vectors")
    total = conf.size
    if total == 0:
        raise CalibrationError("no predictions to bin")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    which = np.clip(np.searchsorted(edges, conf, side="left") - 1, 0, n_bins - 1)
    bins = []
    gaps = []
    for b in range(n_bins):
        sel = which == b
        k = int(sel.sum())
        if k == 0:
            bins.append(ReliabilityBin(float(edges[b]), float(edges[b + 1]), None, None, 0))
            continue
        mean_conf = math.fsum(conf[sel]) / k
        acc = int(hit[sel].sum()) / k
        bins.append(ReliabilityBin(float(edges[b]), float(edges[b + 1]), mean_conf, acc, k))
        gaps.append(k / total * abs(acc - mean_conf))
    return math.fsum(gaps), bins


def head_predictions(instances, t=1.0):
    """Per-token ``(confidence, correct)`` arrays from the argmax head."""
    confs, hits = [], []
    for x, gold in instances:
        p = softmax_probabilities(x, t, gold.root)
        pred = p.argmax(axis=0)
        cols = [d for d in range(x.n) if d != gold.root]
        confs.append(p[pred[cols], cols])
        hits.append(pred[cols] == np.asarray(gold.parents)[cols])
    return np.concatenate(confs), np.concatenate(hits)


def expected_calibration_error(instances, t=1.0, bins: int = DEFAULT_BINS) -> CalibrationResult:
    instances = _check_instances(instances)
    conf, hit = head_predictions(instances, as_temperature(t))
    ece, table = binned_ece(conf, hit, bins)
    correct = int(hit.sum())
    return CalibrationResult(ece, table, correct / hit.size, correct, int(hit.size))


def decoded_uas(instances, t=1.0, options: DecodeOptions | None = None):
    """Unlabeled attachment score of decoded trees: ``(uas, correct, total)``."""
    correct = total = 0
    for x, gold in _check_instances(instances):
        tree = decode(log_softmax_weights(x, t, gold.root), gold.root, options)
        for d in range(x.n):
            if d != gold.root:
                correct += tree.parents[d] == gold.parents[d]
                total += 1
    return correct / total, correct, total


@dataclass
class CalibrationReport:
    fitted_temperature: Temperature
    nll_before: float
    nll_after: float
    before: CalibrationResult
    after: CalibrationResult
    uas_before: Optional[float] = None
    uas_after: Optional[float] = None

    @property
    def ece(self) -> float:
        return self.after.ece

    @property
    def bins(self) -> list[ReliabilityBin]:
        return self.after.bins

    def to_dict(self) -> dict:
        def side(r: CalibrationResult):
            return {
                "ece": r.ece,
                "accuracy": r.accuracy,
                "correct": r.correct,
                "total": r.total,
                "bins": [vars(b) for b in r.bins],
            }

        return {
            "fitted_temperature": self.fitted_temperature.t,
            "nll_before": self.nll_before,
            "nll_after": self.nll_after,
            "before": side(self.before),
            "after": side(self.after),
            "uas_before": self.uas_before,
            "uas_after": self.uas_after,
        }


def calibration_report(instances, bins: int = DEFAULT_BINS, options: DecodeOptions | None = None,
                       with_uas: bool = True) -> CalibrationReport:
    """Fit a temperature and measure NLL, ECE and UAS before and after."""
    instances = _check_instances(instances)
    t = fit_temperature(instances)
    nll = _StackedNLL(instances)
    report = CalibrationReport(
        fitted_temperature=t,
        nll_before=nll(1.0),
        nll_after=nll(t.t),
        before=expected_calibration_error(instances, 1.0, bins),
        after=expected_calibration_error(instances, t, bins),
    )
    if with_uas:
        report.uas_before = decoded_uas(instances, 1.0, options)[0]
        report.uas_after = decoded_uas(instances, t, options)[0]
    return report
