"""Synthetic corpora, vocabularies, token mappings, and dataset handling."""

from .datasets import (
    LabeledDataset,
    load_dataset,
    save_dataset,
    segment_sequence,
    split_dataset,
    vote,
    wrap_sequence,
)
from .generate import (
    CorpusSpec,
    corpus_vocab,
    gen_motif_task,
    gen_parens,
    gen_uniform,
    load_corpus,
    save_corpus,
)
from .mapping import (
    Mapping,
    apply_to_dataset,
    apply_to_lines,
    compose,
    inject_tokens,
    load_mapping,
    make_random_mapping,
    make_shift_mapping,
    save_mapping,
)
from .vocab import Vocab

__all__ = [
    "LabeledDataset", "load_dataset", "save_dataset", "segment_sequence",
    "split_dataset", "vote", "wrap_sequence",
    "CorpusSpec", "corpus_vocab", "gen_motif_task", "gen_parens", "gen_uniform",
    "load_corpus", "save_corpus",
    "Mapping", "apply_to_dataset", "apply_to_lines", "compose", "inject_tokens",
    "load_mapping", "make_random_mapping", "make_shift_mapping", "save_mapping",
    "Vocab",
]
