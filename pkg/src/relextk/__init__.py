"""Corpus engineering toolkit for entity-tagged relation-extraction data.

Parse and validate tagged sentences, repair or filter tag faults,
augment with tag-preserving transforms (deletion, swap,
back-translation), export entity-marker text for model training,
pool per-token embeddings into fused representations, and score
predictions under three evaluation regimes.
"""

from .corpus import (
    Corpus,
    CorpusError,
    Direction,
    EntitySpan,
    Fault,
    FaultCode,
    FormatError,
    LabelError,
    RawSentence,
    RelationLabel,
    RelationType,
    TagFaultError,
    TaggedSentence,
    all_label_strings,
    parse_semeval_file,
    read_jsonl,
    render_tagged,
    tokenize_and_bind,
    write_jsonl,
)

__version__ = "0.1.0"
