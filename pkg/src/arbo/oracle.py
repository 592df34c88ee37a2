"""Randomized cross-checks: CLE against enumeration, and the weight-difference identity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import NO_PARENT, ROOT, Arborescence, ScoreMatrix, validate_arborescence
from .decode import MAX_ENUMERATION_N, DecodeError, DecodeOptions, brute_force_decode, decode
from .weighting import arborescence_weight, log_softmax_weights, weight_difference_identity

WEIGHT_TOL = 1e-9
IDENTITY_TOL = 1e-9


def random_scores(rng: np.random.Generator, n: int, scale: float = 5.0) -> ScoreMatrix:
    """Continuous logits; ROOT's dependent column masked."""
    values = rng.uniform(-scale, scale, size=(n, n))
    values[:, ROOT] = -math.inf
    return ScoreMatrix(values)


def random_arborescence(rng: np.random.Generator, n: int, root: int = ROOT, allowed=None,
                        max_attempts: int = 100_000) -> Arborescence:
    """Random arborescence by rejection from random parent vectors.

    Uniform over all arborescences when ``allowed`` (a boolean head-by-
    dependent matrix of usable edges) is not given.
    """
    if allowed is None:
        allowed = ~np.eye(n, dtype=bool)
    heads = [np.flatnonzero(allowed[:, d] & (np.arange(n) != d)) for d in range(n)]
    if any(heads[d].size == 0 for d in range(n) if d != root):
        raise DecodeError("some node has no usable incoming edge")
    for _ in range(max_attempts):
        parents = [NO_PARENT] * n
        for d in range(n):
            if d != root:
                parents[d] = int(heads[d][rng.integers(0, heads[d].size)])
        if validate_arborescence(parents, root) is None:
            return Arborescence(tuple(parents), root)
    raise DecodeError(f"no arborescence found in {max_attempts} random draws")


def check_decoder(x: ScoreMatrix, t: float, options: DecodeOptions | None = None) -> bool:
    """CLE-based decode matches the brute-force optimum in weight."""
    w = log_softmax_weights(x, t)
    fast = arborescence_weight(decode(w, ROOT, options), w)
    slow = arborescence_weight(brute_force_decode(w, ROOT, options), w)
    return abs(fast - slow) <= WEIGHT_TOL * max(1.0, abs(slow))


def check_identity(x: ScoreMatrix, a: Arborescence, b: Arborescence, t: float) -> bool:
    lhs, rhs = weight_difference_identity(a, b, x, t)
    return abs(lhs - rhs) <= IDENTITY_TOL * max(1.0, abs(lhs))


@dataclass
class OracleResult:
    decoder_pass: int = 0
    identity_pass: int = 0
    trials: int = 0
    skipped: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.decoder_pass == self.trials and self.identity_pass == self.trials


def _trial(result, rng, x, t, options, label):
    result.trials += 1
    if check_decoder(x, t, options):
        result.decoder_pass += 1
    else:
        result.failures.append({"case": label, "check": "decoder"})
    usable = np.isfinite(x.values)
    a, b = random_arborescence(rng, x.n, allowed=usable), random_arborescence(rng, x.n, allowed=usable)
    if check_identity(x, a, b, t):
        result.identity_pass += 1
    else:
        result.failures.append({"case": label, "check": "identity"})


def run_oracle(n_max: int = 6, trials: int = 500, seed: int = 0, root_constraint: bool = False,
               instances=None) -> OracleResult:
    """Random trials with ``2 <= n <= n_max``, plus any supplied matrices.

    Temperatures are drawn log-uniformly from [0.1, 10].
    """
    if not 2 <= n_max <= MAX_ENUMERATION_N:
        raise ValueError(f"n_max must be in 2..{MAX_ENUMERATION_N}")
    rng = np.random.default_rng(seed)
    options = DecodeOptions(root_constraint=root_constraint)
    result = OracleResult()
    for i in range(trials):
        n = int(rng.integers(2, n_max + 1))
        t = float(math.exp(rng.uniform(math.log(0.1), math.log(10.0))))
        _trial(result, rng, random_scores(rng, n), t, options, f"random {i}")
    for i, x in enumerate(instances or ()):
        if x.n > MAX_ENUMERATION_N:
            result.skipped += 1
            continue
        _trial(result, rng, x, 1.0, options, f"input {i}")
    return result
