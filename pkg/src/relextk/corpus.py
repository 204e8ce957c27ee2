"""Data model and I/O for entity-tagged relation-extraction corpora.

Sentences carry two inline-tagged entities and a relation label.  The
source text format is one record per sentence:

    7\t"The <e1>company</e1> fabricates plastic <e2>chairs</e2>."
    Product-Producer(e2,e1)
    Comment: optional free text

Records are separated by blank lines; the Comment line is optional.
Labels are one of nine relation types with a direction, ``Type(e1,e2)``
or ``Type(e2,e1)``, or the literal ``Other`` (19 canonical strings in
total).

Parsed sentences are whitespace-tokenized with the tag literals acting
as extra token boundaries, so ``<e1>company</e1>`` yields the token
``company``.  Entity spans are inclusive token-index ranges.  A JSONL
interchange format (one object per line: id, tokens, e1/e2 spans,
label) round-trips losslessly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, Sequence, Union

E1_OPEN = "<e1>"
E1_CLOSE = "</e1>"
E2_OPEN = "<e2>"
E2_CLOSE = "</e2>"
TAG_LITERALS = (E1_OPEN, E1_CLOSE, E2_OPEN, E2_CLOSE)

# <e2> (or <e1>) directly before the *other* pair's close tag, possibly
# with whitespace in between: the repairable tag-swap pattern.
_SWAPPED_CLOSE_RE = re.compile(r"<e2>\s*</e1>|<e1>\s*</e2>")


class CorpusError(Exception):
    """Base class for corpus-level failures."""


class FormatError(CorpusError):
    """A source or interchange file violates its format contract."""


class LabelError(CorpusError):
    """A relation-label string is not one of the 19 canonical forms."""


class RelationType(Enum):
    """The nine relation types of the task's label inventory."""

    CAUSE_EFFECT = "Cause-Effect"
    COMPONENT_WHOLE = "Component-Whole"
    CONTENT_CONTAINER = "Content-Container"
    ENTITY_DESTINATION = "Entity-Destination"
    ENTITY_ORIGIN = "Entity-Origin"
    INSTRUMENT_AGENCY = "Instrument-Agency"
    MEMBER_COLLECTION = "Member-Collection"
    MESSAGE_TOPIC = "Message-Topic"
    PRODUCT_PRODUCER = "Product-Producer"


class Direction(Enum):
    E1_TO_E2 = "(e1,e2)"
    E2_TO_E1 = "(e2,e1)"


_LABEL_RE = re.compile(r"(?P<type>[A-Za-z-]+)\((?P<dir>e1,e2|e2,e1)\)")
_TYPES_BY_NAME = {t.value: t for t in RelationType}


@dataclass(frozen=True)
class RelationLabel:
    """A directed relation type, or Other (both fields None)."""

    rtype: RelationType | None = None
    direction: Direction | None = None

    def __post_init__(self):
        if (self.rtype is None) != (self.direction is None):
            raise LabelError("directed labels need both a type and a direction")

    @property
    def is_other(self) -> bool:
        return self.rtype is None

    @classmethod
    def other(cls) -> "RelationLabel":
        return cls()

    @classmethod
    def parse(cls, text: str) -> "RelationLabel":
        if text == "Other":
            return cls()
        m = _LABEL_RE.fullmatch(text)
        if m is None or m.group("type") not in _TYPES_BY_NAME:
            raise LabelError(f"not a canonical relation label: {text!r}")
        direction = Direction.E1_TO_E2 if m.group("dir") == "e1,e2" else Direction.E2_TO_E1
        return cls(_TYPES_BY_NAME[m.group("type")], direction)

    def __str__(self) -> str:
        if self.is_other:
            return "Other"
        return f"{self.rtype.value}{self.direction.value}"


def all_label_strings() -> list[str]:
    """The 19 canonical label strings (9 types x 2 directions + Other)."""
    labels = [f"{t.value}{d.value}" for t in RelationType for d in Direction]
    labels.append("Other")
    return labels


class FaultCode(Enum):
    """Closed set of reasons a raw sentence fails tag validation."""

    MULTIPLE_TAGS = "MultipleTags"
    ADJACENT_SWAPPED_CLOSE = "AdjacentSwappedClose"
    MISSING_TAG = "MissingTag"
    INTERLEAVED_SPANS = "InterleavedSpans"
    UNKNOWN_LABEL = "UnknownLabel"


@dataclass(frozen=True)
class Fault:
    code: FaultCode
    sentence_id: int
    tag: str | None = None
    detail: str = ""

    def __str__(self) -> str:
        parts = [self.code.value]
        if self.tag:
            parts.append(self.tag)
        if self.detail:
            parts.append(self.detail)
        return f"sentence {self.sentence_id}: " + " ".join(parts)


class TagFaultError(CorpusError):
    """Raised when a raw sentence cannot be bound to a tagged sentence."""

    def __init__(self, sentence_id: int, faults: Sequence[Fault]):
        self.sentence_id = sentence_id
        self.faults = list(faults)
        super().__init__("; ".join(str(f) for f in self.faults))


@dataclass(frozen=True)
class EntitySpan:
    """Inclusive token-index range plus the tokens it covers."""

    start: int
    end: int
    surface: tuple[str, ...]

    def __post_init__(self):
        if self.start < 0 or self.start > self.end:
            raise ValueError(f"bad span bounds [{self.start}..{self.end}]")
        if len(self.surface) != self.end - self.start + 1:
            raise ValueError("span surface does not match its bounds")

    def __len__(self) -> int:
        return self.end - self.start + 1

    def overlaps(self, other: "EntitySpan") -> bool:
        return not (self.end < other.start or other.end < self.start)


@dataclass(frozen=True)
class RawSentence:
    """Pre-validation input: text may contain tags in any arrangement."""

    id: int
    text: str
    label: str
    comment: str | None = None


@dataclass(frozen=True)
class TaggedSentence:
    id: int
    tokens: tuple[str, ...]
    e1: EntitySpan
    e2: EntitySpan
    label: RelationLabel
    comment: str | None = None
    provenance: str | None = None

    def __post_init__(self):
        n = len(self.tokens)
        for name, span in (("e1", self.e1), ("e2", self.e2)):
            if span.end >= n:
                raise ValueError(f"{name} span [{span.start}..{span.end}] exceeds {n} tokens")
            if span.surface != self.tokens[span.start : span.end + 1]:
                raise ValueError(f"{name} surface does not match sentence tokens")
        if self.e1.overlaps(self.e2):
            raise ValueError("e1 and e2 spans overlap")
        for tok in self.tokens:
            if tok in TAG_LITERALS:
                raise ValueError(f"tag literal {tok!r} left in token list")


Sentence = Union[RawSentence, TaggedSentence]


@dataclass(frozen=True)
class Corpus:
    """An ordered, id-unique collection of sentences plus provenance."""

    sentences: tuple[Sentence, ...]
    source: str | None = None
    stage: str = "raw"

    def __post_init__(self):
        seen, dupes = set(), []
        for s in self.sentences:
            if s.id in seen:
                dupes.append(s.id)
            seen.add(s.id)
        if dupes:
            raise CorpusError(f"duplicate sentence ids: {sorted(set(dupes))}")

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __getitem__(self, idx):
        return self.sentences[idx]

    def ids(self) -> list[int]:
        return [s.id for s in self.sentences]


def scan_tag_faults(raw: RawSentence) -> list[Fault]:
    """Every reason ``tokenize_and_bind`` would reject this sentence.

    The empty list is returned exactly when binding would succeed; the
    repair stage builds its validator on top of this single scan.
    """
    sid = raw.id
    text = raw.text
    faults: list[Fault] = []
    counts = {t: text.count(t) for t in TAG_LITERALS}
    for t in TAG_LITERALS:
        if counts[t] >= 2:
            faults.append(Fault(FaultCode.MULTIPLE_TAGS, sid, tag=t,
                                detail=f"{counts[t]} occurrences"))
    for t in TAG_LITERALS:
        if counts[t] == 0:
            faults.append(Fault(FaultCode.MISSING_TAG, sid, tag=t))

    swapped = _SWAPPED_CLOSE_RE.search(text) is not None
    if swapped:
        faults.append(Fault(FaultCode.ADJACENT_SWAPPED_CLOSE, sid,
                            detail="open tag directly before the other pair's close tag"))

    if all(counts[t] == 1 for t in TAG_LITERALS):
        p1o, p1c = text.index(E1_OPEN), text.index(E1_CLOSE)
        p2o, p2c = text.index(E2_OPEN), text.index(E2_CLOSE)
        structural = None
        if p1o > p1c or p2o > p2c:
            structural = "close tag precedes its open tag"
        elif not (p1c < p2o or p2c < p1o):
            structural = "e1 and e2 tag pairs interleave"
        elif not text[p1o + len(E1_OPEN) : p1c].strip():
            structural = "e1 span contains no tokens"
        elif not text[p2o + len(E2_OPEN) : p2c].strip():
            structural = "e2 span contains no tokens"
        # The adjacent-swap pattern already explains an interleaving and
        # names the applicable repair, so it is not double-reported.
        if structural and not swapped:
            faults.append(Fault(FaultCode.INTERLEAVED_SPANS, sid, detail=structural))

    try:
        RelationLabel.parse(raw.label)
    except LabelError:
        faults.append(Fault(FaultCode.UNKNOWN_LABEL, sid, detail=repr(raw.label)))
    return faults


def tokenize_and_bind(raw: RawSentence) -> TaggedSentence:
    """Strip tags, whitespace-tokenize, and bind entity spans.

    Tag literals act as token boundaries even when glued to a word.
    Raises TagFaultError carrying the full fault list when the raw text
    or label violates the one-pair-each, non-interleaved tag grammar.
    """
    faults = scan_tag_faults(raw)
    if faults:
        raise TagFaultError(raw.id, faults)

    text = raw.text
    for t in TAG_LITERALS:
        text = text.replace(t, f" {t} ")
    tokens: list[str] = []
    bounds: dict[str, int] = {}
    for part in text.split():
        if part == E1_OPEN:
            bounds["e1_start"] = len(tokens)
        elif part == E1_CLOSE:
            bounds["e1_end"] = len(tokens) - 1
        elif part == E2_OPEN:
            bounds["e2_start"] = len(tokens)
        elif part == E2_CLOSE:
            bounds["e2_end"] = len(tokens) - 1
        else:
            tokens.append(part)

    toks = tuple(tokens)
    e1 = EntitySpan(bounds["e1_start"], bounds["e1_end"],
                    toks[bounds["e1_start"] : bounds["e1_end"] + 1])
    e2 = EntitySpan(bounds["e2_start"], bounds["e2_end"],
                    toks[bounds["e2_start"] : bounds["e2_end"] + 1])
    return TaggedSentence(id=raw.id, tokens=toks, e1=e1, e2=e2,
                          label=RelationLabel.parse(raw.label), comment=raw.comment)


def render_tagged(s: TaggedSentence) -> str:
    """Inverse of tokenize_and_bind: single-space joined tokens with tags
    glued back around the entity spans."""
    out = list(s.tokens)
    out[s.e1.start] = E1_OPEN + out[s.e1.start]
    out[s.e1.end] = out[s.e1.end] + E1_CLOSE
    out[s.e2.start] = E2_OPEN + out[s.e2.start]
    out[s.e2.end] = out[s.e2.end] + E2_CLOSE
    return " ".join(out)


def to_raw(s: TaggedSentence) -> RawSentence:
    """Re-render a tagged sentence as raw input (used for idempotence checks)."""
    return RawSentence(id=s.id, text=render_tagged(s), label=str(s.label),
                       comment=s.comment)


_COMMENT_PREFIX = "Comment:"


def parse_semeval_file(text: str, source: str | None = None) -> Corpus:
    """Parse the blank-line separated source text format into raw sentences.

    Each record is ``<id>\\t"<sentence>"`` followed by the label line and
    an optional ``Comment:`` line.  Raw text is preserved verbatim, tags
    untouched.  Malformed records raise FormatError naming the 1-based
    record number; duplicate ids raise FormatError listing them.
    """
    lines = text.replace("\r\n", "\n").split("\n")
    blocks: list[list[str]] = []
    current: list[str] = []
    for line in lines:
        if line.strip():
            current.append(line)
        elif current:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)

    sentences = []
    for recno, block in enumerate(blocks, start=1):
        head = block[0]
        if "\t" not in head:
            raise FormatError(f"record {recno}: missing id (no tab on first line)")
        id_str, sent = head.split("\t", 1)
        if not id_str.strip().isdigit():
            raise FormatError(f"record {recno}: missing or non-numeric id {id_str!r}")
        sent = sent.strip()
        if sent.startswith('"'):
            if len(sent) < 2 or not sent.endswith('"'):
                raise FormatError(f"record {recno}: unclosed quote around sentence")
            sent = sent[1:-1]
        if len(block) < 2:
            raise FormatError(f"record {recno}: missing relation label line")
        label = block[1].strip()
        comment = None
        if len(block) >= 3:
            if not block[2].startswith(_COMMENT_PREFIX):
                raise FormatError(f"record {recno}: unexpected line {block[2]!r}")
            comment = block[2][len(_COMMENT_PREFIX):].strip()
            if len(block) > 3:
                raise FormatError(f"record {recno}: {len(block) - 3} trailing line(s)")
        sentences.append(RawSentence(id=int(id_str), text=sent, label=label,
                                     comment=comment))

    seen, dupes = set(), []
    for s in sentences:
        if s.id in seen:
            dupes.append(s.id)
        seen.add(s.id)
    if dupes:
        raise FormatError(f"duplicate sentence ids: {sorted(set(dupes))}")
    return Corpus(tuple(sentences), source=source, stage="raw")


def sentence_to_record(s: TaggedSentence) -> dict:
    rec = {
        "id": s.id,
        "tokens": list(s.tokens),
        "e1": {"start": s.e1.start, "end": s.e1.end},
        "e2": {"start": s.e2.start, "end": s.e2.end},
        "label": str(s.label),
    }
    if s.comment is not None:
        rec["comment"] = s.comment
    if s.provenance is not None:
        rec["provenance"] = s.provenance
    return rec


def record_to_sentence(rec: dict) -> TaggedSentence:
    for key in ("id", "tokens", "e1", "e2", "label"):
        if key not in rec:
            raise KeyError(key)
    tokens = tuple(rec["tokens"])

    def span(obj) -> EntitySpan:
        return EntitySpan(obj["start"], obj["end"],
                          tokens[obj["start"] : obj["end"] + 1])

    return TaggedSentence(
        id=int(rec["id"]),
        tokens=tokens,
        e1=span(rec["e1"]),
        e2=span(rec["e2"]),
        label=RelationLabel.parse(rec["label"]),
        comment=rec.get("comment"),
        provenance=rec.get("provenance"),
    )


def write_jsonl(corpus: Corpus, path: str | Path) -> None:
    """One JSON object per sentence; write then read is the identity."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in corpus:
            fh.write(json.dumps(sentence_to_record(s), ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path, stage: str = "repaired") -> Corpus:
    sentences = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sentences.append(record_to_sentence(rec))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError,
                    LabelError) as exc:
                raise FormatError(f"{path}:{lineno}: bad record ({exc})") from exc
    return Corpus(tuple(sentences), source=str(path), stage=stage)
