"""Maximum spanning arborescence decoding.

Ties between optimal trees are broken toward the lexicographically smallest
parent vector, in both Chu-Liu/Edmonds and the brute-force oracle. In CLE
this is done exactly: each edge ``h -> d`` carries a secondary integer
weight ``-h * n**(n-1-d)``, so the secondary weight of a tree is minus its
parent vector read as a base-n number. Weights are compared as
``(float, int)`` pairs; CLE only needs an ordered abelian group, which
lexicographically ordered pairs are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import NO_PARENT, ROOT, ArboError, Arborescence, ScoreMatrix, ShapeError, as_temperature
from .weighting import _weight_array, arborescence_weight, log_softmax_weights

LEXICOGRAPHIC = "lexicographic"
MAX_ENUMERATION_N = 8


class DecodeError(ArboError):
    """No arborescence exists under the given mask / constraint."""


@dataclass(frozen=True)
class DecodeOptions:
    root_constraint: bool = False
    tie_break: str = LEXICOGRAPHIC

    def __post_init__(self):
        if self.tie_break != LEXICOGRAPHIC:
            raise ValueError(f"unsupported tie-break policy {self.tie_break!r}")


def _check_weights(w, root):
    arr = _weight_array(w)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"edge weights must be square, got {arr.shape}")
    n = arr.shape[0]
    if n < 2:
        raise ShapeError("need at least 2 nodes")
    if not 0 <= root < n:
        raise ShapeError(f"root {root} outside 0..{n - 1}")
    if np.isnan(arr).any():
        raise ValueError("edge weights contain NaN")
    return arr, n


def _edge_keys(arr: np.ndarray, root: int):
    n = arr.shape[0]
    rows = arr.tolist()
    keys = [[None] * n for _ in range(n)]
    for d in range(n):
        if d == root:
            continue
        place = n ** (n - 1 - d)
        for h in range(n):
            x = rows[h][d]
            if h != d and x != -math.inf:
                keys[h][d] = (x, -h * place)
    return keys


def _find_cycle(best, root):
    n = len(best)
    state = [0] * n
    state[root] = 2
    for start in range(n):
        path = []
        v = start
        while state[v] == 0:
            state[v] = 1
            path.append(v)
            v = best[v]
        if state[v] == 1:
            return path[path.index(v):]
        for u in path:
            state[u] = 2
    return None


def _cle(score, root):
    """Recursive greedy-select / contract on a dense key matrix."""
    n = len(score)
    best = [NO_PARENT] * n
    for v in range(n):
        if v == root:
            continue
        bu, bk = NO_PARENT, None
        for u in range(n):
            k = score[u][v]
            if k is not None and (bk is None or k > bk):
                bu, bk = u, k
        if bk is None:
            raise DecodeError(f"node {v} has no admissible incoming edge")
        best[v] = bu

    cycle = _find_cycle(best, root)
    if cycle is None:
        return best

    in_cycle = set(cycle)
    others = [v for v in range(n) if v not in in_cycle]
    idx = {v: i for i, v in enumerate(others)}
    c = len(others)
    new = [[None] * (c + 1) for _ in range(c + 1)]
    orig = [[None] * (c + 1) for _ in range(c + 1)]
    enter = {v: score[best[v]][v] for v in cycle}

    for u in others:
        iu = idx[u]
        row = score[u]
        for v in others:
            k = row[v]
            if k is not None:
                new[iu][idx[v]] = k
                orig[iu][idx[v]] = (u, v)
        bk = None
        for v in cycle:
            k = row[v]
            if k is not None:
                e = enter[v]
                k = (k[0] - e[0], k[1] - e[1])
                if bk is None or k > bk:
                    bk, bo = k, (u, v)
        if bk is not None:
            new[iu][c] = bk
            orig[iu][c] = bo
    for v in others:
        bk = None
        for u in cycle:
            k = score[u][v]
            if k is not None and (bk is None or k > bk):
                bk, bo = k, (u, v)
        if bk is not None:
            new[c][idx[v]] = bk
            orig[c][idx[v]] = bo

    new_root = idx[root]
    sub = _cle(new, new_root)
    parents = list(best)
    for iv in range(c + 1):
        if iv == new_root:
            continue
        u, v = orig[sub[iv]][iv]
        parents[v] = u
    return parents


def cle_decode(w, root: int = ROOT) -> Arborescence:
    """Maximum-weight arborescence by Chu-Liu/Edmonds.

    ``w`` is an ``EdgeWeights`` or a square array. Edges into the root,
    self-edges and ``-inf`` entries are never used.
    """
    arr, n = _check_weights(w, root)
    parents = _cle(_edge_keys(arr, root), root)
    parents[root] = NO_PARENT
    return Arborescence(tuple(parents), root)


def _tree_key(a: Arborescence, arr):
    # larger is better; ties go to the lexicographically smaller parent vector
    return arborescence_weight(a, arr), tuple(-p for p in a.parents)


def root_constrained_decode(w, root: int = ROOT) -> Arborescence:
    """Best arborescence with exactly one child of the root.

    Runs CLE once per candidate root child with every other edge out of the
    root removed, and keeps the best result.
    """
    arr, n = _check_weights(w, root)
    keys = _edge_keys(arr, root)
    root_row = keys[root]
    best = None
    for c in range(n):
        if root_row[c] is None:
            continue
        forced = list(keys)
        forced[root] = [k if d == c else None for d, k in enumerate(root_row)]
        try:
            parents = _cle(forced, root)
        except DecodeError:
            continue
        parents[root] = NO_PARENT
        tree = Arborescence(tuple(parents), root)
        key = _tree_key(tree, arr)
        if best is None or key > best[0]:
            best = key, tree
    if best is None:
        raise DecodeError("no arborescence with a single root child exists")
    return best[1]


def decode(w, root: int = ROOT, options: DecodeOptions | None = None) -> Arborescence:
    options = options or DecodeOptions()
    if options.root_constraint:
        return root_constrained_decode(w, root)
    return cle_decode(w, root)


def enumerate_arborescences(n: int, root: int = ROOT):
    """Yield every arborescence on ``n`` nodes, in lexicographic parent order.

    Depth-first over parent vectors, pruning an assignment as soon as it
    closes a cycle. There are ``n**(n-2)`` of them.
    """
    if not 2 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"enumeration supports 2 <= n <= {MAX_ENUMERATION_N}, got {n}")
    if not 0 <= root < n:
        raise ShapeError(f"root {root} outside 0..{n - 1}")
    order = [d for d in range(n) if d != root]
    parents = [NO_PARENT] * n

    def extend(i):
        if i == len(order):
            yield Arborescence._trusted(tuple(parents), root)
            return
        d = order[i]
        for h in range(n):
            if h == d:
                continue
            v = h
            while v != d and v != root and parents[v] != NO_PARENT:
                v = parents[v]
            if v == d:
                continue
            parents[d] = h
            yield from extend(i + 1)
        parents[d] = NO_PARENT

    yield from extend(0)


def brute_force_decode(w, root: int = ROOT, options: DecodeOptions | None = None) -> Arborescence:
    """Exhaustive maximum over all arborescences (n <= 8)."""
    options = options or DecodeOptions()
    arr, n = _check_weights(w, root)
    best, best_weight = None, -math.inf
    for a in enumerate_arborescences(n, root):
        if options.root_constraint and len(a.root_children()) != 1:
            continue
        weight = arborescence_weight(a, arr)
        # strict '>' keeps the first (lexicographically smallest) maximiser
        if weight > best_weight:
            best, best_weight = a, weight
    if best is None:
        raise DecodeError("no arborescence with finite weight exists")
    return best


def runner_up_weight(w, tree: Arborescence, options: DecodeOptions | None = None) -> float:
    """Weight of the best arborescence different from ``tree``.

    Any other tree misses at least one of ``tree``'s edges, so forbidding
    each edge in turn and decoding covers all of them. Returns ``-inf``
    when ``tree`` is the only feasible arborescence.
    """
    arr, n = _check_weights(w, tree.root)
    best = -math.inf
    for h, d in tree.edges():
        masked = arr.copy()
        masked[h, d] = -math.inf
        try:
            alt = decode(masked, tree.root, options)
        except DecodeError:
            continue
        best = max(best, arborescence_weight(alt, arr))
    return best


def _close(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@dataclass
class InvarianceReport:
    temperatures: list[float]
    trees: list[Arborescence]
    identical: bool
    cross_optimal: bool
    gaps: list[float] = field(default_factory=list)
    gap_signs_preserved: bool = True

    @property
    def tie_free(self) -> bool:
        return bool(self.gaps) and all(g > 0 for g in self.gaps)

    @property
    def ok(self) -> bool:
        # the decoded set is what is guaranteed; exact trees only without ties
        if not (self.cross_optimal and self.gap_signs_preserved):
            return False
        return self.identical or not self.tie_free

    def to_dict(self) -> dict:
        return {
            "temperatures": self.temperatures,
            "trees": [list(t.parents) for t in self.trees],
            "identical": self.identical,
            "cross_optimal": self.cross_optimal,
            "gaps": [g if math.isfinite(g) else None for g in self.gaps],
            "gap_signs_preserved": self.gap_signs_preserved,
            "ok": self.ok,
        }


def verify_invariance(
    x: ScoreMatrix,
    temperatures,
    root: int = ROOT,
    options: DecodeOptions | None = None,
    gaps: bool = True,
) -> InvarianceReport:
    """Decode ``x`` at every temperature and compare the results.

    Besides exact tree identity, checks that each decoded tree is still
    optimal under every other temperature's weights (which holds even with
    ties), and, when ``gaps`` is set, that the gap to the runner-up tree
    is zero at all temperatures or positive at all of them.
    """
    temps = [as_temperature(t) for t in temperatures]
    if len(temps) < 2:
        raise ValueError("need at least two temperatures")
    weights = [log_softmax_weights(x, t, root) for t in temps]
    trees = [decode(w, root, options) for w in weights]
    identical = all(t.parents == trees[0].parents for t in trees)
    optimum = [arborescence_weight(tr, w) for tr, w in zip(trees, weights)]
    cross = all(
        arborescence_weight(tr, w) >= opt or _close(arborescence_weight(tr, w), opt)
        for tr in trees
        for w, opt in zip(weights, optimum)
    )
    report = InvarianceReport([t.t for t in temps], trees, identical, cross)
    if gaps:
        report.gaps = [
            opt - runner_up_weight(w, tr, options) for tr, w, opt in zip(trees, weights, optimum)
        ]
        positive = [g > 0 and not _close(g, 0.0, 1e-12) for g in report.gaps]
        report.gaps = [g if p else 0.0 for g, p in zip(report.gaps, positive)]
        report.gap_signs_preserved = len(set(positive)) == 1
    return report
