"""Score files (JSON) and CoNLL-U trees.

Score file layout::

    {"version": 1,
     "sentences": [
       {"tokens": ["ROOT", "Mary", ...],          # optional, n labels
        "orientation": "heads_rows" | "deps_rows",
        "shape": [rows, cols],
        "logits": [...],                          # row-major; null = masked edge
        "gold_heads": [...]}                      # optional; 0 = ROOT
     ]}

Floats are written with Python's shortest round-trip repr, so reading back
a written file reproduces every value bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .core import (
    HEADS_ROWS,
    ORIENTATIONS,
    ROOT,
    ArboError,
    Arborescence,
    GoldTree,
    InvalidTreeError,
    ScoreMatrix,
    ShapeError,
    canonicalize_scores,
)

FORMAT_VERSION = 1
CONLLU_COLUMNS = 10
_ID, _FORM, _HEAD = 0, 1, 6


class SchemaError(ArboError, ValueError):
    pass


class GoldTreeError(ArboError, ValueError):
    def __init__(self, message, problem=None):
        super().__init__(message)
        self.problem = problem


class ConlluError(ArboError, ValueError):
    pass


def _reject_constant(name):
    raise SchemaError(f"non-finite number {name} is not allowed (use null for a masked edge)")


def _field(record, key, kind, where, required=True):
    if key not in record:
        if required:
            raise SchemaError(f"{where}: missing field {key!r}")
        return None
    value = record[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise SchemaError(f"{where}: field {key!r} has type {type(value).__name__}")
    return value


def _parse_sentence(record, i):
    where = f"sentence {i}"
    if not isinstance(record, dict):
        raise SchemaError(f"{where}: expected an object")
    orientation = _field(record, "orientation", str, where)
    if orientation not in ORIENTATIONS:
        raise SchemaError(f"{where}: orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    shape = _field(record, "shape", list, where)
    if len(shape) != 2 or not all(isinstance(s, int) and not isinstance(s, bool) and s > 0 for s in shape):
        raise SchemaError(f"{where}: shape must be two positive integers, got {shape!r}")
    logits = _field(record, "logits", list, where)
    for j, v in enumerate(logits):
        if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
            raise SchemaError(f"{where}: logits[{j}] is not a number or null")
    rows, cols = shape
    if len(logits) != rows * cols:
        raise ShapeError(f"{where}: shape {shape} needs {rows * cols} logits, got {len(logits)}")
    raw = np.array([-math.inf if v is None else float(v) for v in logits], dtype=np.float64)
    raw = raw.reshape(rows, cols)

    tokens = _field(record, "tokens", list, where, required=False)
    if tokens is not None and not all(isinstance(t, str) for t in tokens):
        raise SchemaError(f"{where}: tokens must be strings")
    try:
        x = canonicalize_scores(raw, orientation, tokens)
    except ShapeError as e:
        raise ShapeError(f"{where}: {e}") from None

    heads = _field(record, "gold_heads", list, where, required=False)
    gold = None
    if heads is not None:
        if not all(isinstance(h, int) and not isinstance(h, bool) for h in heads):
            raise SchemaError(f"{where}: gold_heads must be integers")
        if len(heads) != x.n - 1:
            raise GoldTreeError(f"{where}: {len(heads)} gold heads for {x.n - 1} tokens")
        try:
            gold = GoldTree.from_heads(heads)
        except InvalidTreeError as e:
            raise GoldTreeError(f"{where}: invalid gold tree: {e}", e.problem) from None
    return x, gold


def parse_scores(text: str):
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise SchemaError(f"unsupported version {version!r} (expected {FORMAT_VERSION})")
    sentences = _field(doc, "sentences", list, "file")
    return [_parse_sentence(rec, i) for i, rec in enumerate(sentences)]


def read_scores(path) -> list[tuple[ScoreMatrix, GoldTree | None]]:
    """Read a score file; matrices come back canonical (head rows)."""
    return parse_scores(Path(path).read_text(encoding="utf-8"))


def _record(x: ScoreMatrix, gold: Arborescence | None):
    rec = {}
    if x.token_labels is not None:
        rec["tokens"] = list(x.token_labels)
    rec["orientation"] = HEADS_ROWS
    rec["shape"] = [x.n, x.n]
    rec["logits"] = [None if v == -math.inf else v for v in x.values.ravel().tolist()]
    if gold is not None:
        if gold.n != x.n or gold.root != ROOT:
            raise ShapeError("gold tree does not match the score matrix")
        rec["gold_heads"] = gold.heads()
    return rec


def format_scores(sentences) -> str:
    body = ",\n".join(
        json.dumps(_record(x, gold), ensure_ascii=False, separators=(",", ":"), allow_nan=False)
        for x, gold in sentences
    )
    if body:
        body = "\n" + body + "\n"
    return '{"version":%d,"sentences":[%s]}\n' % (FORMAT_VERSION, body)


def write_scores(path, sentences) -> None:
    """Write ``(ScoreMatrix, gold-or-None)`` pairs, one sentence per line."""
    Path(path).write_text(format_scores(sentences), encoding="utf-8")


def format_conllu(words, tree: Arborescence) -> str:
    if tree.root != ROOT:
        raise ShapeError("CoNLL-U needs ROOT at index 0")
    if len(words) != tree.n - 1:
        raise ShapeError(f"{len(words)} words for a tree with {tree.n - 1} tokens")
    lines = []
    for i, (form, head) in enumerate(zip(words, tree.heads()), start=1):
        if not form or any(c in form for c in "\t\n\r"):
            raise ValueError(f"token {i} has an empty form or contains tab/newline")
        cols = ["_"] * CONLLU_COLUMNS
        cols[_ID], cols[_FORM], cols[_HEAD] = str(i), form, str(head)
        lines.append("\t".join(cols))
    return "\n".join(lines) + "\n\n"


def write_tree_conllu(path, sentences) -> None:
    """Write ``(words, tree)`` pairs; only ID, FORM and HEAD are filled."""
    Path(path).write_text("".join(format_conllu(w, t) for w, t in sentences), encoding="utf-8")


def _conllu_sentence(rows):
    words, heads = [], []
    for lineno, cols in rows:
        expected = len(words) + 1
        try:
            token_id = int(cols[_ID])
        except ValueError:
            raise ConlluError(f"line {lineno}: bad ID {cols[_ID]!r}") from None
        if token_id != expected:
            raise ConlluError(f"line {lineno}: ID {token_id}, expected {expected}")
        try:
            head = int(cols[_HEAD])
        except ValueError:
            raise ConlluError(f"line {lineno}: bad HEAD {cols[_HEAD]!r}") from None
        words.append(cols[_FORM])
        heads.append((lineno, head))
    n = len(words)
    for lineno, head in heads:
        if not 0 <= head <= n:
            raise ConlluError(f"line {lineno}: HEAD {head} outside 0..{n}")
    try:
        tree = GoldTree.from_heads([h for _, h in heads])
    except InvalidTreeError as e:
        raise GoldTreeError(f"sentence ending line {rows[-1][0]}: {e}", e.problem) from None
    return words, tree


def parse_conllu(text: str):
    sentences, rows = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            if rows:
                sentences.append(_conllu_sentence(rows))
                rows = []
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < _HEAD + 1:
            raise ConlluError(f"line {lineno}: expected {CONLLU_COLUMNS} tab-separated columns")
        if "-" in cols[_ID] or "." in cols[_ID]:
            continue
        rows.append((lineno, cols))
    if rows:
        sentences.append(_conllu_sentence(rows))
    return sentences


def read_tree_conllu(path) -> list[tuple[list[str], GoldTree]]:
    """Read ``(words, tree)`` pairs, skipping comments, ranges and empty nodes."""
    return parse_conllu(Path(path).read_text(encoding="utf-8"))
