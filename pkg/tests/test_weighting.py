import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from arbo.core import Arborescence, ScoreMatrix, ScoreValueError, ShapeError
from arbo.oracle import random_arborescence
from arbo.weighting import (
    arborescence_weight,
    column_entropy,
    log_softmax_weights,
    softmax_probabilities,
    weight_difference_identity,
)

from conftest import FIG1_PARENTS

FIG1_WEIGHT = math.log(0.95) + math.log(0.88) + math.log(0.74) + math.log(0.71)


def _reference_log_softmax(values, t):
    """Naive exp / sum / log at 50 significant digits."""
    with mpmath.workdps(50):
        n = len(values)
        out = [[None] * n for _ in range(n)]
        for d in range(n):
            col = [mpmath.mpf(values[h][d]) / t for h in range(n)]
            total = mpmath.fsum(mpmath.exp(c) for c in col)
            for h in range(n):
                out[h][d] = float(mpmath.log(mpmath.exp(col[h]) / total))
    return np.array(out)


class TestSoftmax:
    def test_figure2_mary_column(self):
        p = [0.01, 0.02, 0.88, 0.07, 0.02]
        x = ScoreMatrix(np.tile(np.log(p)[:, None], (1, 5)))
        np.testing.assert_allclose(softmax_probabilities(x, 1.0)[:, 1], p, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("t", [0.1, 1.0, 7.0])
    def test_uniform(self, t):
        x = ScoreMatrix(np.full((4, 4), 2.5))
        np.testing.assert_allclose(softmax_probabilities(x, t), 0.25, atol=1e-15)

    def test_high_temperature_flattens(self):
        x = ScoreMatrix(np.tile(np.array([[1.0], [2.0], [3.0]]), (1, 3)))
        np.testing.assert_allclose(softmax_probabilities(x, 100.0)[:, 1], 1 / 3, atol=0.01)

    def test_masked_root_column_is_zero(self, fig2_scores):
        p = softmax_probabilities(fig2_scores)
        assert np.all(p[:, 0] == 0)
        np.testing.assert_allclose(p[:, 1:].sum(axis=0), 1.0, atol=1e-12)
        assert p[2, 2] == 0.0  # likes <- likes is masked in the figure

    def test_large_logits_do_not_overflow(self):
        x = ScoreMatrix(np.array([[1000.0, 1000.0], [999.0, 0.0]]))
        p = softmax_probabilities(x)
        assert np.isfinite(p).all()
        np.testing.assert_allclose(p[:, 0], [1 / (1 + math.exp(-1)), 1 / (1 + math.e)])

    def test_fully_masked_dependent_column_rejected(self):
        v = np.zeros((3, 3))
        v[:, 2] = -np.inf
        with pytest.raises(ScoreValueError):
            softmax_probabilities(ScoreMatrix(v))
        with pytest.raises(ScoreValueError):
            log_softmax_weights(ScoreMatrix(v))

    def test_nonpositive_temperature_rejected(self):
        with pytest.raises(ValueError):
            softmax_probabilities(ScoreMatrix(np.zeros((2, 2))), 0.0)


class TestLogSoftmaxWeights:
    def test_figure2_root_to_likes(self, fig2_scores):
        w = log_softmax_weights(fig2_scores, 1.0)
        assert w.w[0, 2] == pytest.approx(math.log(0.95), abs=1e-12)
        assert w.w[0, 2] == pytest.approx(-0.0513, abs=5e-5)

    def test_uniform_five(self):
        w = log_softmax_weights(ScoreMatrix(np.zeros((5, 5))), 3.0)
        np.testing.assert_allclose(w.w, math.log(1 / 5), atol=1e-15)
        assert w.w[0, 0] == pytest.approx(-1.6094, abs=1e-4)

    def test_matches_extended_precision_reference(self):
        values = np.random.default_rng(5).uniform(-10, 10, size=(5, 5))
        w = log_softmax_weights(ScoreMatrix(values), 2.0)
        ref = _reference_log_softmax(values.tolist(), 2)
        np.testing.assert_allclose(w.w, ref, rtol=1e-13, atol=1e-14)

    def test_exp_matches_softmax(self, rng):
        x = ScoreMatrix(rng.uniform(-30, 30, size=(7, 7)))
        for t in (0.05, 1.0, 20.0):
            np.testing.assert_allclose(np.exp(log_softmax_weights(x, t).w), softmax_probabilities(x, t),
                                       rtol=0, atol=1e-12)

    def test_masked_entries_stay_masked(self, fig2_scores):
        w = log_softmax_weights(fig2_scores).w
        assert np.all(np.isneginf(w[:, 0]))
        assert np.isneginf(w[2, 2])
        assert not np.isnan(w).any()

    def test_records_temperature(self):
        assert log_softmax_weights(ScoreMatrix(np.zeros((2, 2))), 4.0).temperature_used.t == 4.0


class TestArborescenceWeight:
    def test_figure1(self, fig2_scores):
        w = log_softmax_weights(fig2_scores, 1.0)
        assert arborescence_weight(Arborescence(FIG1_PARENTS), w) == pytest.approx(FIG1_WEIGHT, abs=1e-12)

    def test_single_edge(self):
        w = log_softmax_weights(ScoreMatrix(np.zeros((2, 2))))
        assert arborescence_weight(Arborescence((-1, 0)), w) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_matches_direct_loop(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 9))
            w = rng.normal(size=(n, n))
            a = random_arborescence(rng, n)
            total = 0.0
            for d in range(1, n):
                total += w[a.parents[d]][d]
            assert arborescence_weight(a, w) == pytest.approx(total, rel=1e-12, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            arborescence_weight(Arborescence((-1, 0, 0)), np.zeros((2, 2)))


class TestWeightDifferenceIdentity:
    def test_identical_trees(self, fig2_scores):
        a = Arborescence(FIG1_PARENTS)
        lhs, rhs = weight_difference_identity(a, a, fig2_scores, 1.7)
        assert lhs == 0.0 and rhs == 0.0

    def test_figure_fluffy_reattached(self, fig2_scores):
        a = Arborescence(FIG1_PARENTS)
        b = Arborescence((-1, 2, 0, 2, 2))  # fluffy <- likes
        lhs, rhs = weight_difference_identity(a, b, fig2_scores, 1.0)
        expected = math.log(0.71) - math.log(0.05)
        assert lhs == pytest.approx(expected, abs=1e-12)
        assert rhs == pytest.approx(expected, abs=1e-12)

    def test_random_instances(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 9))
            x = ScoreMatrix(rng.uniform(-20, 20, size=(n, n)))
            t = float(np.exp(rng.uniform(np.log(0.05), np.log(20))))
            a, b = random_arborescence(rng, n), random_arborescence(rng, n)
            lhs, rhs = weight_difference_identity(a, b, x, t)
            assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))

    def test_rejects_mismatch(self):
        x = ScoreMatrix(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            weight_difference_identity(Arborescence((-1, 0, 0)), Arborescence((1, 2, -1), root=2), x)
        with pytest.raises(ShapeError):
            weight_difference_identity(Arborescence((-1, 0)), Arborescence((-1, 0)), x)


finite_logits = st.integers(2, 7).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-50, 50, allow_nan=False))
)
temps = st.sampled_from([0.05, 0.5, 1.0, 5.0, 20.0])


@settings(max_examples=200, deadline=None)
@given(finite_logits, temps)
def test_columns_normalized(values, t):
    w = log_softmax_weights(ScoreMatrix(values), t).w
    np.testing.assert_allclose(np.exp(w).sum(axis=0), 1.0, atol=1e-9)
    assert (w <= 0).all()


@settings(max_examples=200, deadline=None)
@given(finite_logits, st.integers(0, 2**32 - 1), temps, temps)
def test_sign_of_weight_difference_preserved(values, seed, t, t2):
    rng = np.random.default_rng(seed)
    n = values.shape[0]
    x = ScoreMatrix(values)
    a, b = random_arborescence(rng, n), random_arborescence(rng, n)

    def sign(t):
        w = log_softmax_weights(x, t)
        diff = arborescence_weight(a, w) - arborescence_weight(b, w)
        # diff scales with 1/t; compare on the raw-logit scale to treat tiny values as ties
        scaled = diff * t
        return 0 if abs(scaled) < 1e-9 * max(1.0, np.abs(values).max()) else (1 if scaled > 0 else -1)

    assert sign(t) == sign(t2)


@settings(max_examples=200, deadline=None)
@given(finite_logits, st.floats(0.05, 20), st.floats(1.0, 10.0))
def test_entropy_grows_with_temperature(values, t, factor):
    x = ScoreMatrix(values)
    low = column_entropy(softmax_probabilities(x, t))
    high = column_entropy(softmax_probabilities(x, t * factor))
    assert (high >= low - 1e-12).all()
