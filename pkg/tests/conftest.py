import time

import numpy as np
import pytest

import acceptance_log
from arbo import FIGURE2_SCORES, DEPS_ROWS, canonicalize_scores, read_scores

# Figure 2 worked example, rows = dependents, columns = heads
FIG2_PROBS = np.array([
    [0.01, 0.02, 0.88, 0.07, 0.02],  # Mary
    [0.95, 0.01, 0.00, 0.03, 0.01],  # likes
    [0.09, 0.13, 0.05, 0.02, 0.71],  # fluffy
    [0.03, 0.10, 0.74, 0.12, 0.01],  # cats
])
FIG_TOKENS = ["ROOT", "Mary", "likes", "fluffy", "cats"]
# Figure 1: likes <- ROOT, Mary <- likes, cats <- likes, fluffy <- cats
FIG1_PARENTS = (-1, 2, 0, 4, 2)

SUITE_BUDGET_S = 120.0
_start = time.monotonic()


@pytest.fixture
def fig2_scores():
    with np.errstate(divide="ignore"):
        return canonicalize_scores(np.log(FIG2_PROBS), DEPS_ROWS, FIG_TOKENS)


@pytest.fixture
def fig2_file():
    return str(FIGURE2_SCORES)


@pytest.fixture
def fig2_from_file(fig2_file):
    [(x, gold)] = read_scores(fig2_file)
    return x, gold


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.monotonic() - _start
    ok = elapsed < SUITE_BUDGET_S
    acceptance_log.record(7, ok, f"test session wall time {elapsed:.1f} s (< {SUITE_BUDGET_S:.0f} s)", echo=False)
    if not ok and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_log.lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
