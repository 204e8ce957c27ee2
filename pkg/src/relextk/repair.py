"""Deterministic validate-and-repair pipeline for raw corpora.

Three passes, in this order:

1. curated replacements -- sentences named in a replacement list get
   their raw text substituted (a human fix must never be discarded by
   the automatic rules that follow);
2. tag-swap repair -- ``<e2></e1>`` (or ``<e1></e2>``, whitespace
   between the tags allowed) is rewritten to close the first pair
   before opening the second;
3. filtering -- sentences with any remaining fault (duplicate tags,
   missing tags, interleaved spans, unknown labels) are removed.

Every input sentence is accounted for in the RepairReport: its fate is
kept, repaired, replaced, or removed (with the deciding fault).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .corpus import (
    Corpus,
    CorpusError,
    Fault,
    FaultCode,
    RawSentence,
    TaggedSentence,
    scan_tag_faults,
    tokenize_and_bind,
)

# Re-exported so the validation surface lives here as well.
__all__ = [
    "Fault",
    "FaultCode",
    "Fate",
    "SentenceFate",
    "RepairReport",
    "ReplacementError",
    "validate",
    "repair_swap",
    "run_repair",
    "load_replacements",
]

_SWAP_E2_BEFORE_CLOSE1 = re.compile(r"<e2>(\s*)</e1>")
_SWAP_E1_BEFORE_CLOSE2 = re.compile(r"<e1>(\s*)</e2>")

# Removal is attributed to the most specific fault present, in this order.
_REMOVAL_PRIORITY = (
    FaultCode.MULTIPLE_TAGS,
    FaultCode.MISSING_TAG,
    FaultCode.UNKNOWN_LABEL,
    FaultCode.INTERLEAVED_SPANS,
    FaultCode.ADJACENT_SWAPPED_CLOSE,
)


class ReplacementError(CorpusError):
    """A curated replacement text failed validation (it must be correct)."""


class Fate(Enum):
    KEPT = "kept"
    REPAIRED = "repaired"
    REMOVED = "removed"
    REPLACED = "replaced"


@dataclass(frozen=True)
class SentenceFate:
    sentence_id: int
    fate: Fate
    fixes: tuple[str, ...] = ()
    fault: Fault | None = None


@dataclass
class RepairReport:
    """Per-sentence fates plus aggregate counters; fates partition the input."""

    fates: list[SentenceFate] = field(default_factory=list)

    def count(self, fate: Fate) -> int:
        return sum(1 for f in self.fates if f.fate == fate)

    def count_removed(self, code: FaultCode) -> int:
        return sum(1 for f in self.fates
                   if f.fate == Fate.REMOVED and f.fault is not None
                   and f.fault.code == code)

    def fault_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for f in self.fates:
            if f.fault is not None:
                key = f.fault.code.value
                counts[key] = counts.get(key, 0) + 1
        return counts

    def to_dict(self) -> dict:
        return {
            "totals": {fate.value: self.count(fate) for fate in Fate},
            "removed_by_fault": {
                code.value: self.count_removed(code)
                for code in FaultCode
                if self.count_removed(code)
            },
            "sentences": [
                {
                    "id": f.sentence_id,
                    "fate": f.fate.value,
                    **({"fixes": list(f.fixes)} if f.fixes else {}),
                    **({"fault": str(f.fault)} if f.fault else {}),
                }
                for f in self.fates
            ],
        }

    def summary(self) -> str:
        totals = ", ".join(f"{fate.value}={self.count(fate)}" for fate in Fate)
        lines = [f"{len(self.fates)} sentences: {totals}"]
        for code in FaultCode:
            n = self.count_removed(code)
            if n:
                lines.append(f"  removed[{code.value}] = {n}")
        return "\n".join(lines)


def validate(raw: RawSentence) -> list[Fault]:
    """All faults that keep this sentence from binding; [] means clean."""
    return scan_tag_faults(raw)


def repair_swap(raw: RawSentence) -> RawSentence:
    """Rewrite adjacent swapped close tags; identity when the pattern is absent.

    Only the two tag substrings trade places; any whitespace between
    them and all non-tag characters stay untouched, so applying the
    rewrite twice equals applying it once.
    """
    text = _SWAP_E2_BEFORE_CLOSE1.sub(r"</e1>\1<e2>", raw.text)
    text = _SWAP_E1_BEFORE_CLOSE2.sub(r"</e2>\1<e1>", text)
    if text == raw.text:
        return raw
    return RawSentence(id=raw.id, text=text, label=raw.label, comment=raw.comment)


def load_replacements(path: str | Path) -> dict[int, str]:
    """Replacement-list file: JSONL of {id, text} with tagged raw text."""
    replacements: dict[int, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                replacements[int(rec["id"])] = rec["text"]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad replacement record ({exc})") from exc
    return replacements


def _removal_fault(faults: list[Fault]) -> Fault:
    for code in _REMOVAL_PRIORITY:
        for f in faults:
            if f.code == code:
                return f
    return faults[0]


def run_repair(corpus: Corpus,
               replacements: dict[int, str] | None = None) -> tuple[Corpus, RepairReport]:
    """Run replacements, swap repair, and filtering over a raw corpus.

    Returns the surviving sentences as validated TaggedSentence values
    (input order preserved) and a report whose fates partition the
    input.  A replacement that itself fails validation is a hard error:
    curated fixes must be correct.
    """
    replacements = replacements or {}
    report = RepairReport()
    kept: list[TaggedSentence] = []

    for sent in corpus:
        if isinstance(sent, TaggedSentence):
            # Already-bound sentences are valid by construction.
            kept.append(sent)
            report.fates.append(SentenceFate(sent.id, Fate.KEPT))
            continue

        raw = sent
        replaced = False
        if raw.id in replacements:
            raw = RawSentence(id=raw.id, text=replacements[raw.id],
                              label=raw.label, comment=raw.comment)
            faults = validate(raw)
            if faults:
                raise ReplacementError(
                    f"replacement for sentence {raw.id} fails validation: "
                    + "; ".join(str(f) for f in faults))
            replaced = True

        faults = validate(raw)
        fixes: list[str] = []
        if any(f.code == FaultCode.ADJACENT_SWAPPED_CLOSE for f in faults) and \
                not any(f.code == FaultCode.MULTIPLE_TAGS for f in faults):
            raw = repair_swap(raw)
            faults = validate(raw)
            fixes.append("swap-adjacent-close-tags")

        if faults:
            report.fates.append(SentenceFate(raw.id, Fate.REMOVED,
                                             fault=_removal_fault(faults)))
            continue

        kept.append(tokenize_and_bind(raw))
        if replaced:
            report.fates.append(SentenceFate(raw.id, Fate.REPLACED))
        elif fixes:
            report.fates.append(SentenceFate(raw.id, Fate.REPAIRED, fixes=tuple(fixes)))
        else:
            report.fates.append(SentenceFate(raw.id, Fate.KEPT))

    out = Corpus(tuple(kept), source=corpus.source, stage="repaired")
    return out, report
