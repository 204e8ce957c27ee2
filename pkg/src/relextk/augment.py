"""Tag-preserving data augmentation.

Three variant generators over a repaired corpus, all deterministic
under a seed:

* random token deletion (entity tokens are protected);
* random token-pair swap (entity tokens are protected);
* back-translation through a pivot language, with entity spans
  projected through the round trip as opaque sentinel tokens
  (``ENTX1Q`` / ``ENTX2Q``) and re-expanded afterwards.  If a sentinel
  does not come back exactly once, the variant is dropped rather than
  re-aligned by guesswork.

Per-sentence randomness is derived from (seed, sentence id, operation),
so results do not depend on processing order.  Augmentation only
appends: originals pass through verbatim and every variant gets a
fresh id and a provenance tag (del / swap / bt).
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace

from .corpus import Corpus, EntitySpan, TaggedSentence
from .translate import BackendError, TranslationBackend, TranslationRequest

SENTINEL_E1 = "ENTX1Q"
SENTINEL_E2 = "ENTX2Q"

# Provenance tags on generated variants.
PROV_DELETE = "del"
PROV_SWAP = "swap"
PROV_BACKTRANSLATE = "bt"


@dataclass(frozen=True)
class AugmentConfig:
    seed: int = 0
    deletions_per_sentence: int = 1
    swaps_per_sentence: int = 1
    backtranslate: bool = False
    keep_unchanged_backtranslations: bool = True
    pivot_language: str = "en"
    source_language: str = "fa"

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.deletions_per_sentence < 0 or self.swaps_per_sentence < 0:
            raise ValueError("augmentation counts must be >= 0")
        if not self.pivot_language or not self.source_language:
            raise ValueError("language codes must be non-empty")
        if self.pivot_language == self.source_language:
            raise ValueError("pivot and source languages must differ")


def protected_mask(s: TaggedSentence) -> tuple[bool, ...]:
    """Per-token flag, True for every token inside e1 or e2."""
    mask = [False] * len(s.tokens)
    for span in (s.e1, s.e2):
        for i in range(span.start, span.end + 1):
            mask[i] = True
    return tuple(mask)


def subseed_rng(seed: int, sentence_id: int, op: str) -> random.Random:
    """Per-sentence, per-operation generator; the derivation is part of
    the determinism contract (blake2b of "seed:id:op")."""
    digest = hashlib.blake2b(f"{seed}:{sentence_id}:{op}".encode(),
                             digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def _shift_span(span: EntitySpan, deleted_index: int) -> EntitySpan:
    if deleted_index < span.start:
        return EntitySpan(span.start - 1, span.end - 1, span.surface)
    return span


def random_delete(s: TaggedSentence, rng: random.Random) -> TaggedSentence:
    """Remove one uniformly chosen unprotected token, rebinding spans.

    Sentences with fewer than 3 unprotected tokens are returned
    unchanged (deleting from very short contexts destroys them).
    """
    unprotected = [i for i, flag in enumerate(protected_mask(s)) if not flag]
    if len(unprotected) < 3:
        return s
    victim = unprotected[rng.randrange(len(unprotected))]
    tokens = s.tokens[:victim] + s.tokens[victim + 1:]
    return replace(s, tokens=tokens,
                   e1=_shift_span(s.e1, victim), e2=_shift_span(s.e2, victim))


def random_swap(s: TaggedSentence, rng: random.Random) -> TaggedSentence:
    """Exchange the tokens at two distinct unprotected positions.

    Span index ranges are untouched (both positions lie outside the
    spans).  Fewer than 2 unprotected tokens: returned unchanged.
    """
    unprotected = [i for i, flag in enumerate(protected_mask(s)) if not flag]
    if len(unprotected) < 2:
        return s
    i, j = rng.sample(unprotected, 2)
    tokens = list(s.tokens)
    tokens[i], tokens[j] = tokens[j], tokens[i]
    return replace(s, tokens=tuple(tokens))


def _project_sentinels(s: TaggedSentence) -> str:
    """Replace each entity span by its sentinel token."""
    out: list[str] = []
    i = 0
    while i < len(s.tokens):
        if i == s.e1.start:
            out.append(SENTINEL_E1)
            i = s.e1.end + 1
        elif i == s.e2.start:
            out.append(SENTINEL_E2)
            i = s.e2.end + 1
        else:
            out.append(s.tokens[i])
            i += 1
    return " ".join(out)


def _expand_sentinels(text: str, s: TaggedSentence) -> TaggedSentence | None:
    """Re-expand sentinels in round-tripped text to the original entity
    surfaces; None when a sentinel is missing or duplicated."""
    for sentinel in (SENTINEL_E1, SENTINEL_E2):
        if text.count(sentinel) != 1:
            return None

    tokens: list[str] = []
    spans: dict[str, tuple[int, int]] = {}
    for tok in text.split():
        hit = SENTINEL_E1 if SENTINEL_E1 in tok else (
            SENTINEL_E2 if SENTINEL_E2 in tok else None)
        if hit is None:
            tokens.append(tok)
            continue
        # Translators may glue punctuation onto the placeholder; peel it
        # off as separate tokens so the entity surface stays exact.
        prefix, _, suffix = tok.partition(hit)
        if prefix:
            tokens.append(prefix)
        surface = s.e1.surface if hit == SENTINEL_E1 else s.e2.surface
        spans[hit] = (len(tokens), len(tokens) + len(surface) - 1)
        tokens.extend(surface)
        if suffix:
            tokens.append(suffix)

    toks = tuple(tokens)
    e1_start, e1_end = spans[SENTINEL_E1]
    e2_start, e2_end = spans[SENTINEL_E2]
    try:
        return replace(
            s, tokens=toks,
            e1=EntitySpan(e1_start, e1_end, s.e1.surface),
            e2=EntitySpan(e2_start, e2_end, s.e2.surface))
    except ValueError:
        # Translated context reintroduced a tag literal or the like.
        return None


def _backtranslate(s: TaggedSentence, backend: TranslationBackend,
                   source_lang: str, pivot_lang: str
                   ) -> tuple[TaggedSentence | None, str | None]:
    masked = _project_sentinels(s)
    try:
        pivot = backend.translate(
            TranslationRequest(masked, source_lang, pivot_lang))
        back = backend.translate(
            TranslationRequest(pivot, pivot_lang, source_lang))
    except BackendError as exc:
        raise type(exc)(f"sentence {s.id}: {exc}") from exc
    result = _expand_sentinels(back, s)
    if result is None:
        return None, "sentinel_lost"
    return result, None


def backtranslate(s: TaggedSentence, backend: TranslationBackend,
                  source_lang: str = "fa",
                  pivot_lang: str = "en") -> TaggedSentence | None:
    """Round-trip a sentence source -> pivot -> source with entity spans
    protected by sentinels.  Returns None (drop the variant, keep the
    original) when sentinel recovery fails; backend transport errors
    propagate annotated with the sentence id."""
    result, _ = _backtranslate(s, backend, source_lang, pivot_lang)
    return result


@dataclass
class AugmentReport:
    counts: dict = field(default_factory=dict)
    drops: dict = field(default_factory=dict)
    backend_stats: dict = field(default_factory=dict)

    def bump(self, table: dict, key: str) -> None:
        table[key] = table.get(key, 0) + 1

    def to_dict(self) -> dict:
        return {"counts": dict(self.counts), "drops": dict(self.drops),
                "backend": dict(self.backend_stats)}

    def summary(self) -> str:
        counts = ", ".join(f"{k}={v}" for k, v in sorted(self.counts.items()))
        lines = [f"variants: {counts}" if counts else "variants: none"]
        for reason, n in sorted(self.drops.items()):
            lines.append(f"  dropped[{reason}] = {n}")
        return "\n".join(lines)


def augment_corpus(corpus: Corpus, config: AugmentConfig,
                   backend: TranslationBackend | None = None
                   ) -> tuple[Corpus, AugmentReport]:
    """Append deletion, swap, and back-translation variants to a corpus.

    Output order is originals, then all deletion variants, swap
    variants, and back-translation variants, each block in corpus
    order.  Fresh ids continue from max(existing id) + 1.  Variants
    that a degenerate guard left identical to their original are not
    emitted (counted in the report instead).
    """
    if config.backtranslate and backend is None:
        raise ValueError("back-translation requires a translation backend")

    report = AugmentReport()
    originals = list(corpus)
    report.counts["orig"] = len(originals)
    next_id = max((s.id for s in originals), default=-1) + 1

    deletions: list[TaggedSentence] = []
    swaps: list[TaggedSentence] = []
    translations: list[TaggedSentence] = []

    def fresh(variant: TaggedSentence, provenance: str) -> TaggedSentence:
        nonlocal next_id
        out = replace(variant, id=next_id, provenance=provenance)
        next_id += 1
        return out

    if config.deletions_per_sentence > 0:
        for s in originals:
            rng = subseed_rng(config.seed, s.id, "del")
            variant = s
            for _ in range(config.deletions_per_sentence):
                variant = random_delete(variant, rng)
            if variant is s:
                report.bump(report.drops, "delete_degenerate")
                continue
            deletions.append(fresh(variant, PROV_DELETE))
            report.bump(report.counts, PROV_DELETE)

    if config.swaps_per_sentence > 0:
        for s in originals:
            rng = subseed_rng(config.seed, s.id, "swap")
            variant = s
            for _ in range(config.swaps_per_sentence):
                variant = random_swap(variant, rng)
            if variant is s:
                report.bump(report.drops, "swap_degenerate")
                continue
            swaps.append(fresh(variant, PROV_SWAP))
            report.bump(report.counts, PROV_SWAP)

    if config.backtranslate:
        requests_made = 0
        for s in originals:
            result, reason = _backtranslate(s, backend,
                                            config.source_language,
                                            config.pivot_language)
            requests_made += 2
            if result is None:
                report.bump(report.drops, reason)
                continue
            if (not config.keep_unchanged_backtranslations
                    and result.tokens == s.tokens):
                report.bump(report.drops, "unchanged_dropped")
                continue
            translations.append(fresh(result, PROV_BACKTRANSLATE))
            report.bump(report.counts, PROV_BACKTRANSLATE)
        report.backend_stats["translate_requests"] = requests_made
        if hasattr(backend, "stats"):
            report.backend_stats.update(backend.stats)

    out = Corpus(tuple(originals) + tuple(deletions) + tuple(swaps)
                 + tuple(translations),
                 source=corpus.source, stage="augmented")
    return out, report
