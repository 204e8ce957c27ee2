"""Shared fixtures: seeded random sentence generation and fault fixtures."""

import random

import pytest

from relextk.corpus import (
    Corpus,
    EntitySpan,
    RawSentence,
    RelationLabel,
    TaggedSentence,
    all_label_strings,
)

WORDS = [
    "the", "a", "old", "river", "stone", "bridge", "carries", "light",
    "wind", "over", "into", "from", "city", "market", "sound", "slowly",
    "کتاب", "شهر", "باد", "carried", "will", "often", "near", "deep",
    "word.", "then,", "(once)", "again", "house", "door",
]

LABELS = all_label_strings()


def make_sentence(rng: random.Random, sid: int) -> TaggedSentence:
    """A random valid tagged sentence: 2..14 tokens, two non-overlapping
    entity spans of 1..3 tokens each, any of the 19 labels."""
    e1_len = rng.randint(1, 3)
    e2_len = rng.randint(1, 3)
    n = rng.randint(e1_len + e2_len, max(e1_len + e2_len, 14))
    tokens = tuple(rng.choice(WORDS) for _ in range(n))

    first_start = rng.randint(0, n - e1_len - e2_len)
    second_start = rng.randint(first_start + e1_len, n - e2_len)
    spans = [(first_start, first_start + e1_len - 1),
             (second_start, second_start + e2_len - 1)]
    rng.shuffle(spans)
    (e1s, e1e), (e2s, e2e) = spans
    # shuffle decided which entity sits first; lengths follow the slots
    e1 = EntitySpan(e1s, e1e, tokens[e1s:e1e + 1])
    e2 = EntitySpan(e2s, e2e, tokens[e2s:e2e + 1])

    label = RelationLabel.parse(rng.choice(LABELS))
    comment = rng.choice([None, "checked", "uncertain translation"])
    return TaggedSentence(id=sid, tokens=tokens, e1=e1, e2=e2,
                          label=label, comment=comment)


def make_corpus(rng: random.Random, size: int, stage: str = "repaired") -> Corpus:
    return Corpus(tuple(make_sentence(rng, sid) for sid in range(size)),
                  stage=stage)


# 2 multi-tag, 1 adjacent-swapped-close, 7 clean: the repair accounting fixture.
FAULT_FIXTURE_ROWS = [
    (0, "The <e1>company</e1> fabricates plastic <e2>chairs</e2>.",
     "Product-Producer(e2,e1)"),
    (1, "He has just sent <e1>spam</e1> to the <e2>clients</e2>.",
     "Entity-Destination(e1,e2)"),
    (2, "I read the <e1>report</e1> on the <e2>agreement</e2> that has "
        "<e2>been</e2> welcomed.", "Message-Topic(e1,e2)"),
    (3, "The <e1>box</e1> was full of <e2>apples</e2>.",
     "Content-Container(e2,e1)"),
    (4, "A <e1>storm <e2></e1> front </e2> moved in.", "Cause-Effect(e1,e2)"),
    (5, "The <e1>wheel</e1> of the <e2>cart</e2> broke.",
     "Component-Whole(e1,e2)"),
    (6, "The <e1>author</e1> described the <e2>journey</e2> <e1>here</e1>.",
     "Message-Topic(e1,e2)"),
    (7, "<e1>Oil</e1> comes from <e2>seeds</e2>.", "Entity-Origin(e1,e2)"),
    (8, "The <e1>choir</e1> of <e2>singers</e2> performed.",
     "Member-Collection(e2,e1)"),
    (9, "He cut the <e1>rope</e1> with a <e2>knife</e2>.",
     "Instrument-Agency(e2,e1)"),
]


@pytest.fixture
def fault_corpus() -> Corpus:
    return Corpus(tuple(RawSentence(i, text, label)
                        for i, text, label in FAULT_FIXTURE_ROWS))


@pytest.fixture
def fault_file(tmp_path):
    lines = []
    for i, text, label in FAULT_FIXTURE_ROWS:
        lines.append(f'{i}\t"{text}"')
        lines.append(label)
        lines.append("")
    path = tmp_path / "faulty.txt"
    path.write_text("\n".join(lines), encoding="utf-8")
    return path
