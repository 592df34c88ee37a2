"""Deterministic synthetic score matrices with gold trees.

Randomness comes from SplitMix64 (Steele, Lea & Flood 2014), written out
here so that a seed produces the same instances in any implementation:

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)                      # all arithmetic mod 2**64

Derived draws:
    uniform      (next() >> 11) * 2**-53            in [0, 1)
    integer      lo + floor(uniform * (hi - lo + 1)) in [lo, hi]
    exponential  -log1p(-uniform)
    categorical  first index whose running sum of p exceeds uniform
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MASK, NO_PARENT, ROOT, ArboError, GoldTree, ScoreMatrix, validate_arborescence

_MASK64 = (1 << 64) - 1
MAX_ATTEMPTS = 10_000


class GenerationError(ArboError):
    pass


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next() >> 11) * 2.0**-53

    def integer(self, lo: int, hi: int) -> int:
        return lo + int(self.uniform() * (hi - lo + 1))

    def exponential(self) -> float:
        return -math.log1p(-self.uniform())

    def dirichlet_ones(self, k: int) -> list[float]:
        e = [self.exponential() for _ in range(k)]
        s = math.fsum(e)
        return [v / s for v in e]

    def categorical(self, p) -> int:
        u = self.uniform()
        acc = 0.0
        for i, q in enumerate(p):
            acc += q
            if u < acc:
                return i
        # rounding left the running sum just below u; take the last positive entry
        return max(i for i, q in enumerate(p) if q > 0)


@dataclass(frozen=True)
class GenSpec:
    """Parameters for ``generate``.

    ``sharpening`` multiplies the true log-probabilities, so a model
    generated with sharpening ``s`` is best calibrated at temperature ``s``.
    ``logit_scale`` bounds a random per-column offset added to the logits;
    softmax ignores it, but it keeps the logits unnormalized.
    """

    seed: int = 0
    n_range: tuple[int, int] = (2, 8)
    logit_scale: float = 1.0
    sharpening: float = 1.0
    count: int = 100

    def __post_init__(self):
        lo, hi = self.n_range
        if not 2 <= lo <= hi <= 64:
            raise ValueError(f"n_range must satisfy 2 <= min <= max <= 64, got {self.n_range}")
        if not (self.logit_scale > 0 and self.sharpening > 0):
            raise ValueError("logit_scale and sharpening must be positive")
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in 64 unsigned bits")


def _sentence(rng: SplitMix64, spec: GenSpec):
    n = rng.integer(*spec.n_range)
    values = np.full((n, n), MASK)
    dists = [None] * n
    for d in range(1, n):
        # self-attachment is impossible in a tree, so it gets no true mass
        others = rng.dirichlet_ones(n - 1)
        p = others[:d] + [0.0] + others[d:]
        offset = spec.logit_scale * (2.0 * rng.uniform() - 1.0)
        dists[d] = p
        for h, q in enumerate(p):
            if q > 0:
                values[h, d] = spec.sharpening * math.log(q) + offset
    for _ in range(MAX_ATTEMPTS):
        parents = [NO_PARENT] + [rng.categorical(dists[d]) for d in range(1, n)]
        if validate_arborescence(parents, ROOT) is None:
            break
    else:
        raise GenerationError(f"no valid gold tree after {MAX_ATTEMPTS} draws (n={n})")
    labels = ["ROOT"] + [f"t{i}" for i in range(1, n)]
    return ScoreMatrix(values, labels), GoldTree(tuple(parents))


def generate(spec: GenSpec) -> list[tuple[ScoreMatrix, GoldTree]]:
    """Draw ``spec.count`` sentences.

    Per dependent column a true head distribution over the other ``n - 1``
    nodes is drawn from a flat Dirichlet (the self-edge is masked). Gold
    heads are sampled from it, redrawing the sentence's whole head vector
    until it forms a tree.
    """
    rng = SplitMix64(spec.seed)
    return [_sentence(rng, spec) for _ in range(spec.count)]
