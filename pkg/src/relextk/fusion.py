"""Entity-marker text export and representation fusion.

Model-ready text gets a leading ``[CLS]`` token, ``$`` tokens flanking
the first entity, and ``#`` tokens flanking the second.

The fusion half combines per-token embedding rows (for the
marker-inserted sequence, CLS fixed at row 0) into one vector:

* simple -- concat(CLS, mean(e1 rows), mean(e2 rows)), length 3h;
* v1     -- elementwise mean of those three vectors, length h;
* v2     -- concat(CLS, every e1 row, every e2 row) in order,
            length (1 + |e1| + |e2|) * h;
* v3     -- like simple but pooling each entity with its first or last
            row instead of the mean, length 3h.

Everything here is pure double-precision arithmetic over an abstract
embedding matrix; no encoder is involved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .corpus import Corpus, TaggedSentence

CLS_TOKEN = "[CLS]"
E1_MARKER = "$"
E2_MARKER = "#"

Span = tuple[int, int]


class FusionStrategy(Enum):
    SIMPLE = "simple"
    V1 = "v1"
    V2 = "v2"
    V3 = "v3"


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Per-token embedding rows (n x h, float64); CLS is row 0."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError(f"embedding matrix must be 2-D, got shape {rows.shape}")
        if rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError(f"embedding matrix must be at least 1x1, got {rows.shape}")
        object.__setattr__(self, "rows", rows)

    @property
    def token_count(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def cls_row(self) -> np.ndarray:
        return self.rows[0]

    def scaled(self, alpha: float) -> "EmbeddingMatrix":
        return EmbeddingMatrix(self.rows * alpha)


@dataclass(frozen=True)
class FusedRepresentation:
    vector: np.ndarray
    strategy: FusionStrategy

    def __len__(self) -> int:
        return self.vector.shape[0]


def _check_span(m: EmbeddingMatrix, span: Span, name: str) -> None:
    start, end = span
    if not (0 <= start <= end < m.token_count):
        raise ValueError(f"{name} span [{start}..{end}] out of range for "
                         f"{m.token_count} rows")


def pool_span(m: EmbeddingMatrix, span: Span, mode: str = "average") -> np.ndarray:
    """Pool the rows of an inclusive span into a single h-vector."""
    _check_span(m, span, "pooled")
    start, end = span
    if mode == "average":
        return m.rows[start : end + 1].mean(axis=0)
    if mode == "first":
        return m.rows[start].copy()
    if mode == "last":
        return m.rows[end].copy()
    raise ValueError(f"unknown pooling mode {mode!r}")


def fuse(m: EmbeddingMatrix, e1: Span, e2: Span,
         strategy: FusionStrategy, v3_token: str = "last") -> FusedRepresentation:
    """Combine CLS and entity-span rows per the chosen strategy."""
    _check_span(m, e1, "e1")
    _check_span(m, e2, "e2")
    if not (e1[1] < e2[0] or e2[1] < e1[0]):
        raise ValueError(f"entity spans {e1} and {e2} overlap")
    for name, span in (("e1", e1), ("e2", e2)):
        if span[0] == 0:
            raise ValueError(f"{name} span includes the CLS row")
    if v3_token not in ("first", "last"):
        raise ValueError(f"v3_token must be first or last, got {v3_token!r}")

    cls = m.cls_row
    if strategy == FusionStrategy.SIMPLE:
        vec = np.concatenate([cls, pool_span(m, e1), pool_span(m, e2)])
    elif strategy == FusionStrategy.V1:
        vec = (cls + pool_span(m, e1) + pool_span(m, e2)) / 3.0
    elif strategy == FusionStrategy.V2:
        vec = np.concatenate([cls,
                              m.rows[e1[0] : e1[1] + 1].ravel(),
                              m.rows[e2[0] : e2[1] + 1].ravel()])
    elif strategy == FusionStrategy.V3:
        vec = np.concatenate([cls, pool_span(m, e1, v3_token),
                              pool_span(m, e2, v3_token)])
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return FusedRepresentation(vector=vec, strategy=strategy)


def marked_tokens(s: TaggedSentence) -> tuple[list[str], int]:
    """Marker-inserted token list and the index of the last closing marker."""
    out = [CLS_TOKEN]
    last_close = 0
    for i, tok in enumerate(s.tokens):
        if i == s.e1.start:
            out.append(E1_MARKER)
        if i == s.e2.start:
            out.append(E2_MARKER)
        out.append(tok)
        if i == s.e1.end:
            out.append(E1_MARKER)
            last_close = len(out) - 1
        if i == s.e2.end:
            out.append(E2_MARKER)
            last_close = len(out) - 1
    return out, last_close


def insert_markers(s: TaggedSentence) -> str:
    """``[CLS]`` plus the sentence tokens with ``$``/``#`` marker tokens
    flanking e1/e2, single-space joined."""
    tokens, _ = marked_tokens(s)
    return " ".join(tokens)


def export_markers(corpus: Corpus, max_tokens: int | None = None
                   ) -> tuple[list[dict], list[dict]]:
    """Marker-inserted {id, text, label} records for an external trainer.

    With max_tokens set, text is truncated to that many tokens after
    marker insertion.  A marked entity is never split: sentences whose
    entities would be cut go to the reject list instead.
    """
    records, rejects = [], []
    for s in corpus:
        tokens, last_close = marked_tokens(s)
        if max_tokens is not None and len(tokens) > max_tokens:
            if last_close >= max_tokens:
                rejects.append({"id": s.id, "text": " ".join(tokens),
                                "label": str(s.label),
                                "reason": f"entity beyond max_tokens={max_tokens}"})
                continue
            tokens = tokens[:max_tokens]
        records.append({"id": s.id, "text": " ".join(tokens),
                        "label": str(s.label)})
    return records, rejects


def load_embedding_fixtures(path: str | Path
                            ) -> list[tuple[EmbeddingMatrix, Span, Span]]:
    """JSONL fixture rows: {rows: [[...]], e1: {start,end}, e2: {start,end}}."""
    fixtures = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                m = EmbeddingMatrix(np.asarray(rec["rows"], dtype=np.float64))
                e1 = (rec["e1"]["start"], rec["e1"]["end"])
                e2 = (rec["e2"]["start"], rec["e2"]["end"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad fixture ({exc})") from exc
            fixtures.append((m, e1, e2))
    return fixtures
