"""Domain types shared across the package.

Node 0 is always ROOT. Score matrices are stored head-major:
``values[h, d]`` is the logit for the edge ``h -> d``, and the softmax over
heads runs down each dependent column.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

ROOT = 0
NO_PARENT = -1
MASK = -np.inf

HEADS_ROWS = "heads_rows"
DEPS_ROWS = "deps_rows"
ORIENTATIONS = (HEADS_ROWS, DEPS_ROWS)


class ArboError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(ArboError, ValueError):
    pass


class ScoreValueError(ArboError, ValueError):
    pass


class TreeProblem(enum.Enum):
    CYCLE = "cycle detected"
    SELF_LOOP = "self-loop"
    UNREACHABLE = "unreachable node"
    ROOT_HAS_PARENT = "root has parent"
    HEAD_OUT_OF_RANGE = "head out of range"


class InvalidTreeError(ArboError, ValueError):
    def __init__(self, problem: TreeProblem, node: int):
        self.problem = problem
        self.node = node
        super().__init__(f"{problem.value} at node {node}")


@dataclass(frozen=True)
class Temperature:
    t: float

    def __post_init__(self):
        t = float(self.t)
        if not np.isfinite(t) or t <= 0:
            raise ValueError(f"temperature must be a positive finite number, got {self.t!r}")
        object.__setattr__(self, "t", t)

    def __float__(self):
        return self.t


def as_temperature(t) -> Temperature:
    return t if isinstance(t, Temperature) else Temperature(t)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Square head-by-dependent logit matrix; ``-inf`` marks a masked edge."""

    values: np.ndarray
    token_labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ShapeError(f"score matrix must be square, got shape {values.shape}")
        if values.shape[0] < 2:
            raise ShapeError("score matrix needs at least 2 nodes (ROOT plus one token)")
        if np.isnan(values).any() or np.isposinf(values).any():
            raise ScoreValueError("score matrix contains NaN or +inf")
        object.__setattr__(self, "values", values)
        if self.token_labels is not None:
            labels = tuple(str(s) for s in self.token_labels)
            if len(labels) != values.shape[0]:
                raise ShapeError(
                    f"expected {values.shape[0]} token labels (ROOT included), got {len(labels)}"
                )
            object.__setattr__(self, "token_labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def words(self) -> list[str]:
        """Token labels without ROOT; placeholder forms when unlabeled."""
        if self.token_labels is None:
            return [f"w{i}" for i in range(1, self.n)]
        return list(self.token_labels[1:])

    def __eq__(self, other):
        if not isinstance(other, ScoreMatrix):
            return NotImplemented
        return (
            self.token_labels == other.token_labels
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class EdgeWeights:
    """Log-probability edge weights ``w[h, d]`` produced at one temperature."""

    w: np.ndarray
    temperature_used: Temperature

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen(self.w))

    @property
    def n(self) -> int:
        return self.w.shape[0]


def validate_arborescence(parents: Sequence[int], root: int = ROOT, n: int | None = None):
    """Check a parent vector; return ``None`` if it encodes an arborescence.

    Otherwise returns ``(problem, node)`` for the first violation found.
    Problems are checked in the order root, range, self-loop, missing
    parent, cycle.
    """
    if n is None:
        n = len(parents)
    if len(parents) != n:
        raise ShapeError(f"parent vector has length {len(parents)}, expected {n}")
    if not 0 <= root < n:
        raise ShapeError(f"root {root} outside 0..{n - 1}")
    if parents[root] != NO_PARENT:
        return TreeProblem.ROOT_HAS_PARENT, root
    for d, h in enumerate(parents):
        if d == root:
            continue
        if h == NO_PARENT:
            return TreeProblem.UNREACHABLE, d
        if not 0 <= h < n:
            return TreeProblem.HEAD_OUT_OF_RANGE, d
        if h == d:
            return TreeProblem.SELF_LOOP, d
    # 0 = unvisited, 1 = on current path, 2 = known to reach root
    state = [0] * n
    state[root] = 2
    for start in range(n):
        path = []
        v = start
        while state[v] == 0:
            state[v] = 1
            path.append(v)
            v = parents[v]
        if state[v] == 1:
            return TreeProblem.CYCLE, v
        for u in path:
            state[u] = 2
    return None


@dataclass(frozen=True)
class Arborescence:
    """A rooted spanning tree stored as a parent vector.

    ``parents[root]`` is ``NO_PARENT``; every other entry is the head index.
    Construction validates the structure and raises ``InvalidTreeError``.
    """

    parents: tuple[int, ...]
    root: int = ROOT

    def __post_init__(self):
        parents = tuple(int(p) for p in self.parents)
        object.__setattr__(self, "parents", parents)
        problem = validate_arborescence(parents, self.root)
        if problem is not None:
            raise InvalidTreeError(*problem)

    @classmethod
    def _trusted(cls, parents: tuple[int, ...], root: int = ROOT):
        # skips validation; callers must guarantee a valid tree
        obj = object.__new__(cls)
        object.__setattr__(obj, "parents", parents)
        object.__setattr__(obj, "root", root)
        return obj

    @property
    def n(self) -> int:
        return len(self.parents)

    def edges(self) -> list[tuple[int, int]]:
        return [(h, d) for d, h in enumerate(self.parents) if d != self.root]

    def root_children(self) -> list[int]:
        return [d for d, h in enumerate(self.parents) if h == self.root and d != self.root]

    @classmethod
    def from_heads(cls, heads: Sequence[int]):
        """Build from CoNLL-style heads of tokens 1..n-1 (0 = ROOT)."""
        return cls((NO_PARENT, *heads), ROOT)

    def heads(self) -> list[int]:
        """Inverse of ``from_heads``; only meaningful when root is 0."""
        return list(self.parents[1:])


class GoldTree(Arborescence):
    """Reference parse used for calibration and attachment scores."""


def canonicalize_scores(raw, orientation: str = HEADS_ROWS, token_labels=None) -> ScoreMatrix:
    """Bring a raw score array into head-row, dependent-column form.

    Accepts a square ``n x n`` matrix in either orientation, or a matrix
    with the ROOT-as-dependent slice left out: ``(n-1) x n`` when rows are
    dependents, ``n x (n-1)`` when rows are heads. The missing column is
    filled with ``MASK`` since ROOT never takes a parent.

    ``ScoreMatrix`` input in canonical form is returned as is.
    """
    if isinstance(raw, ScoreMatrix):
        if orientation != HEADS_ROWS:
            raise ValueError("a ScoreMatrix is already head-major")
        return raw
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    a = np.asarray(raw, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got {a.ndim} dimensions")
    if np.isnan(a).any() or np.isposinf(a).any():
        raise ScoreValueError("scores contain NaN or +inf")
    if orientation == DEPS_ROWS:
        a = a.T
    rows, cols = a.shape
    if rows == cols:
        values = a
    elif cols == rows - 1:
        values = np.full((rows, rows), MASK)
        values[:, 1:] = a
    else:
        raise ShapeError(
            f"shape {tuple(np.shape(raw))} is neither square nor missing the ROOT dependent slice"
        )
    return ScoreMatrix(values, token_labels)
