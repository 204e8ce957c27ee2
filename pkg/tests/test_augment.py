"""Augmentation invariants: entities and labels always survive."""

import random
from collections import Counter

import pytest

from relextk.augment import (
    SENTINEL_E1,
    SENTINEL_E2,
    AugmentConfig,
    augment_corpus,
    backtranslate,
    protected_mask,
    random_delete,
    random_swap,
    subseed_rng,
)
from relextk.corpus import Corpus, RawSentence, tokenize_and_bind, write_jsonl
from relextk.translate import (
    IdentityBackend,
    ReplayMissError,
    SentinelDroppingBackend,
    TranslationBackend,
    WordReversingBackend,
)

from conftest import make_corpus, make_sentence


def spam_sentence():
    raw = RawSentence(1, "He has just sent <e1>spam</e1> to the <e2>clients</e2>.",
                      "Entity-Destination(e1,e2)")
    return tokenize_and_bind(raw)


def minimal_sentence():
    return tokenize_and_bind(RawSentence(0, "<e1>a</e1> <e2>b</e2>", "Other"))


class TestProtectedMask:
    def test_flags_exactly_the_span_tokens(self):
        s = spam_sentence()
        mask = protected_mask(s)
        assert len(mask) == len(s.tokens)
        assert [i for i, flag in enumerate(mask) if flag] == [4, 7]

    def test_all_protected_when_everything_is_entity(self):
        assert protected_mask(minimal_sentence()) == (True, True)


class TestRandomDelete:
    def test_seed_42_golden(self):
        # frozen from a seeded run: the generator removes "the" (index 6)
        out = random_delete(spam_sentence(), random.Random(42))
        assert out.tokens == ("He", "has", "just", "sent", "spam", "to",
                              "clients", ".")
        assert (out.e1.start, out.e1.end) == (4, 4)
        assert (out.e2.start, out.e2.end) == (6, 6)
        assert out.e1.surface == ("spam",)
        assert out.e2.surface == ("clients",)
        assert out.label == spam_sentence().label

    def test_degenerate_guard(self):
        s = minimal_sentence()
        assert random_delete(s, random.Random(0)) is s

    def test_guard_below_three_unprotected(self):
        s = tokenize_and_bind(RawSentence(0, "<e1>a</e1> x y <e2>b</e2>", "Other"))
        assert random_delete(s, random.Random(0)) is s

    def test_property_500_random(self):
        rng = random.Random(9)
        for sid in range(500):
            s = make_sentence(rng, sid)
            unprotected = sum(1 for flag in protected_mask(s) if not flag)
            out = random_delete(s, random.Random(sid))
            if unprotected < 3:
                assert out is s
                continue
            assert len(out.tokens) == len(s.tokens) - 1
            removed = Counter(s.tokens) - Counter(out.tokens)
            assert sum(removed.values()) == 1
            assert out.e1.surface == s.e1.surface
            assert out.e2.surface == s.e2.surface
            assert out.label == s.label
            assert out.tokens[out.e1.start : out.e1.end + 1] == s.e1.surface
            assert out.tokens[out.e2.start : out.e2.end + 1] == s.e2.surface


class TestRandomSwap:
    def test_seed_42_golden(self):
        out = random_swap(spam_sentence(), random.Random(42))
        assert out.tokens == ("the", "has", "just", "sent", "spam", "to",
                              "He", "clients", ".")
        assert out.e1 == spam_sentence().e1
        assert out.e2 == spam_sentence().e2

    def test_single_unprotected_unchanged(self):
        s = tokenize_and_bind(RawSentence(0, "<e1>a</e1> x <e2>b</e2>", "Other"))
        assert random_swap(s, random.Random(0)) is s

    def test_same_seed_same_output(self):
        s = spam_sentence()
        a = random_swap(s, random.Random(123))
        b = random_swap(s, random.Random(123))
        assert a.tokens == b.tokens

    def test_property_500_random(self):
        rng = random.Random(10)
        for sid in range(500):
            s = make_sentence(rng, sid)
            out = random_swap(s, random.Random(sid))
            assert Counter(out.tokens) == Counter(s.tokens)
            assert out.e1 == s.e1
            assert out.e2 == s.e2
            assert out.label == s.label
            assert out.tokens[out.e1.start : out.e1.end + 1] == s.e1.surface
            assert out.tokens[out.e2.start : out.e2.end + 1] == s.e2.surface


class GluingBackend(TranslationBackend):
    """Round trip that glues punctuation onto the sentinels."""

    name = "gluing"

    def translate(self, req):
        out = []
        for tok in req.text.split():
            if tok == SENTINEL_E1:
                out.append(tok + ",")
            elif tok == SENTINEL_E2:
                out.append("(" + tok)
            else:
                out.append(tok)
        return " ".join(out)


class DuplicatingBackend(TranslationBackend):
    name = "duplicating"

    def translate(self, req):
        return req.text + " " + SENTINEL_E1


class TestBacktranslate:
    def test_identity_backend_reproduces_sentence(self):
        s = spam_sentence()
        out = backtranslate(s, IdentityBackend())
        assert out.tokens == s.tokens
        assert out.e1 == s.e1
        assert out.e2 == s.e2
        assert out.label == s.label

    def test_word_reversing_backend(self):
        s = spam_sentence()
        out = backtranslate(s, WordReversingBackend())
        assert out is not None
        assert out.label == s.label
        assert out.e1.surface == s.e1.surface
        assert out.e2.surface == s.e2.surface
        # each surface is bound exactly once
        assert out.tokens[out.e1.start : out.e1.end + 1] == s.e1.surface
        assert out.tokens[out.e2.start : out.e2.end + 1] == s.e2.surface
        assert Counter(out.tokens) == Counter(s.tokens)

    def test_sentinel_dropping_gives_none(self):
        assert backtranslate(spam_sentence(), SentinelDroppingBackend()) is None

    def test_duplicated_sentinel_gives_none(self):
        assert backtranslate(spam_sentence(), DuplicatingBackend()) is None

    def test_glued_punctuation_split_off(self):
        s = spam_sentence()
        out = backtranslate(s, GluingBackend())
        assert out is not None
        assert out.e1.surface == ("spam",)
        assert out.e2.surface == ("clients",)
        assert "," in out.tokens
        assert "(" in out.tokens

    def test_multi_token_entities(self):
        s = tokenize_and_bind(RawSentence(
            3, "the <e1>old stone bridge</e1> spans the <e2>wide river</e2> now",
            "Component-Whole(e1,e2)"))
        out = backtranslate(s, WordReversingBackend())
        assert out.e1.surface == ("old", "stone", "bridge")
        assert out.e2.surface == ("wide", "river")


class TestAugmentCorpus:
    def test_all_off_is_identity(self):
        corpus = make_corpus(random.Random(1), 10)
        cfg = AugmentConfig(seed=5, deletions_per_sentence=0,
                            swaps_per_sentence=0, backtranslate=False)
        out, report = augment_corpus(corpus, cfg)
        assert out.sentences == corpus.sentences
        assert report.counts == {"orig": 10}

    def test_delete_swap_fixture_counts(self):
        rng = random.Random(2)
        # long sentences so no degenerate guard fires
        sentences = []
        for sid in range(10):
            s = make_sentence(rng, sid)
            while sum(1 for f in protected_mask(s) if not f) < 3:
                s = make_sentence(rng, sid)
            sentences.append(s)
        corpus = Corpus(tuple(sentences), stage="repaired")
        cfg = AugmentConfig(seed=5)
        out, report = augment_corpus(corpus, cfg)
        assert len(out) == 30
        assert report.counts == {"orig": 10, "del": 10, "swap": 10}

    def test_doubling_with_lossless_backend(self):
        corpus = make_corpus(random.Random(3), 100)
        cfg = AugmentConfig(seed=1, deletions_per_sentence=0,
                            swaps_per_sentence=0, backtranslate=True)
        out, report = augment_corpus(corpus, cfg, IdentityBackend())
        assert len(out) == 200
        assert report.counts["bt"] == 100
        assert report.backend_stats["translate_requests"] == 200

    def test_sentinel_loss_keeps_original(self):
        corpus = make_corpus(random.Random(4), 8)
        cfg = AugmentConfig(seed=1, deletions_per_sentence=0,
                            swaps_per_sentence=0, backtranslate=True)
        out, report = augment_corpus(corpus, cfg, SentinelDroppingBackend())
        assert len(out) == 8
        assert out.sentences[:8] == corpus.sentences
        assert report.drops == {"sentinel_lost": 8}

    def test_drop_unchanged_backtranslations(self):
        corpus = make_corpus(random.Random(5), 6)
        cfg = AugmentConfig(seed=1, deletions_per_sentence=0,
                            swaps_per_sentence=0, backtranslate=True,
                            keep_unchanged_backtranslations=False)
        out, report = augment_corpus(corpus, cfg, IdentityBackend())
        assert len(out) == 6
        assert report.drops.get("unchanged_dropped") == 6

    def test_fresh_ids_and_provenance(self):
        corpus = make_corpus(random.Random(6), 5)
        cfg = AugmentConfig(seed=2, backtranslate=True)
        out, _ = augment_corpus(corpus, cfg, IdentityBackend())
        max_orig = max(corpus.ids())
        variants = [s for s in out if s.provenance in ("del", "swap", "bt")]
        assert all(s.id > max_orig for s in variants)
        assert len(set(out.ids())) == len(out)
        assert out.stage == "augmented"

    def test_originals_never_mutated(self):
        corpus = make_corpus(random.Random(7), 5)
        before = tuple(corpus.sentences)
        cfg = AugmentConfig(seed=2, backtranslate=True)
        out, _ = augment_corpus(corpus, cfg, WordReversingBackend())
        assert corpus.sentences == before
        assert out.sentences[: len(before)] == before

    def test_byte_identical_under_same_seed(self, tmp_path):
        corpus = make_corpus(random.Random(8), 40)
        cfg = AugmentConfig(seed=99, backtranslate=True)
        paths = []
        for run in ("a", "b"):
            out, _ = augment_corpus(corpus, cfg, WordReversingBackend())
            path = tmp_path / f"{run}.jsonl"
            write_jsonl(out, path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_different_seed_changes_output(self):
        corpus = make_corpus(random.Random(8), 20)
        out1, _ = augment_corpus(corpus, AugmentConfig(seed=1))
        out2, _ = augment_corpus(corpus, AugmentConfig(seed=2))
        assert [s.tokens for s in out1] != [s.tokens for s in out2]

    def test_backend_error_carries_sentence_id(self):
        corpus = make_corpus(random.Random(9), 3)
        cfg = AugmentConfig(seed=1, deletions_per_sentence=0,
                            swaps_per_sentence=0, backtranslate=True)
        from relextk.translate import Transcript, ReplayBackend
        empty_replay = ReplayBackend(Transcript())
        with pytest.raises(ReplayMissError, match="sentence 0"):
            augment_corpus(corpus, cfg, empty_replay)

    def test_backtranslate_requires_backend(self):
        corpus = make_corpus(random.Random(9), 2)
        with pytest.raises(ValueError, match="backend"):
            augment_corpus(corpus, AugmentConfig(backtranslate=True))

    def test_report_counts_degenerates(self):
        short = Corpus((minimal_sentence(),), stage="repaired")
        out, report = augment_corpus(short, AugmentConfig(seed=1))
        assert len(out) == 1
        assert report.drops == {"delete_degenerate": 1, "swap_degenerate": 1}


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            AugmentConfig(seed=-1)
        with pytest.raises(ValueError):
            AugmentConfig(deletions_per_sentence=-1)
        with pytest.raises(ValueError):
            AugmentConfig(pivot_language="")
        with pytest.raises(ValueError):
            AugmentConfig(pivot_language="fa", source_language="fa")

    def test_subseed_is_stable(self):
        a = subseed_rng(7, 3, "del").randrange(10 ** 9)
        b = subseed_rng(7, 3, "del").randrange(10 ** 9)
        c = subseed_rng(7, 3, "swap").randrange(10 ** 9)
        assert a == b
        assert a != c
