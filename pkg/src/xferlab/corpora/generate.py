"""Synthetic corpus and task generators.

Three pretraining corpora (token strings, one sequence per line):

- uniform: tokens drawn i.i.d. from the content vocabulary.
- nesting: hierarchically matched bracket sequences (Dyck words over k
  typed bracket pairs), grown by a stack process.
- flat: the same process with nesting depth capped at 1, i.e. a
  concatenation of matched pairs.

Plus a motif-detection task: balanced binary classification where positives
contain a planted contiguous motif and negatives are rejection-sampled to
exclude it -- a desk-scale stand-in for real sequence-classification data.

Everything is seed-deterministic per line/example, so regenerating any spec
reproduces files byte for byte.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import CorpusSpecError
from ..model.config import FIRST_CONTENT_ID
from ..numerics import Rng
from .datasets import LabeledDataset, wrap_sequence
from .vocab import Vocab

_REJECTION_LIMIT = 1000


@dataclass(frozen=True)
class CorpusSpec:
    kind: str                 # uniform | flat | nesting | motif
    vocab_size: int = 64
    min_len: int = 10
    max_len: int = 16
    num_lines: int = 1000
    bracket_types: int = 10   # k, parenthesis kinds only
    close_prob: float = 0.4   # q, parenthesis kinds only
    motif: str = ""           # motif kind only, space-separated tokens
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("uniform", "flat", "nesting", "motif"):
            raise CorpusSpecError(f"unknown corpus kind {self.kind!r}")
        if not (1 <= self.min_len <= self.max_len):
            raise CorpusSpecError("need 1 <= min_len <= max_len")
        if self.num_lines < 1:
            raise CorpusSpecError("num_lines must be positive")
        if self.kind in ("flat", "nesting"):
            if self.min_len % 2 or self.max_len % 2:
                raise CorpusSpecError("bracket corpora need even target lengths")
            if self.bracket_types < 1:
                raise CorpusSpecError("need at least one bracket type")
            if not (0.0 < self.close_prob <= 1.0):
                raise CorpusSpecError("close_prob must be in (0, 1]")


def _content_names(n: int) -> list:
    """Generic content token names w5, w6, ... (ids double as names)."""
    return [f"w{FIRST_CONTENT_ID + i}" for i in range(n)]


def _letter_names(n: int) -> list:
    """Letter alphabet for motif tasks: a..z, then a1, b1, ..."""
    letters = list(string.ascii_lowercase)
    out = []
    for i in range(n):
        out.append(letters[i] if i < 26 else f"{letters[i % 26]}{i // 26}")
    return out


def corpus_vocab(spec: CorpusSpec) -> Vocab:
    """The vocabulary a spec generates over, padded to vocab_size with [unusedN]."""
    if spec.kind == "uniform":
        n_content = spec.vocab_size - FIRST_CONTENT_ID
        if n_content < 1:
            raise CorpusSpecError("vocab_size leaves no room for content tokens")
        return Vocab.build(_content_names(n_content))
    if spec.kind in ("flat", "nesting"):
        brackets = []
        for t in range(spec.bracket_types):
            brackets += [f"({t}", f"){t}"]
        if FIRST_CONTENT_ID + len(brackets) > spec.vocab_size:
            raise CorpusSpecError(
                f"vocab_size {spec.vocab_size} too small for "
                f"{spec.bracket_types} bracket types")
        return Vocab.build(brackets, total_size=spec.vocab_size)
    # motif task: letter alphabet, no unused fill
    n_content = spec.vocab_size - FIRST_CONTENT_ID
    if n_content < 4:
        raise CorpusSpecError("motif tasks need a content alphabet of at least 4")
    return Vocab.build(_letter_names(n_content))


def gen_uniform(spec: CorpusSpec):
    """(vocab, lines): each line i.i.d. uniform over non-unused content tokens."""
    if spec.kind != "uniform":
        raise CorpusSpecError("spec.kind must be 'uniform'")
    vocab = corpus_vocab(spec)
    pool = vocab.eligible_ids()
    root = Rng(spec.seed)
    lines = []
    for i in range(spec.num_lines):
        rng = root.split("line", i)
        n = spec.min_len + rng.integers(spec.max_len - spec.min_len + 1)
        ids = pool[rng.integers(len(pool), (n,))]
        lines.append([vocab.token_of(int(t)) for t in ids])
    return vocab, lines


def gen_parens(spec: CorpusSpec):
    """(vocab, lines) of bracket sequences; nesting is unbounded, flat caps depth at 1.

    Stack process per line: if the stack is empty, open; if the remaining
    budget equals the stack depth, close (forced); otherwise close with
    probability q, else open a uniformly chosen bracket type.
    """
    if spec.kind not in ("flat", "nesting"):
        raise CorpusSpecError("spec.kind must be 'flat' or 'nesting'")
    vocab = corpus_vocab(spec)
    depth_cap = 1 if spec.kind == "flat" else None
    k = spec.bracket_types
    n_lengths = (spec.max_len - spec.min_len) // 2 + 1
    root = Rng(spec.seed)
    lines = []
    for i in range(spec.num_lines):
        rng = root.split("line", i)
        n = spec.min_len + 2 * rng.integers(n_lengths)
        out, stack = [], []
        while len(out) < n:
            remaining = n - len(out)
            if not stack:
                do_close = False
            elif remaining == len(stack):
                do_close = True
            elif depth_cap is not None and len(stack) >= depth_cap:
                do_close = True
            else:
                do_close = rng.uniform() < spec.close_prob
            if do_close:
                out.append(f"){stack.pop()}")
            else:
                t = rng.integers(k)
                stack.append(t)
                out.append(f"({t}")
        lines.append(out)
    return vocab, lines


def gen_motif_task(spec: CorpusSpec) -> LabeledDataset:
    """Balanced binary motif detection over a letter alphabet.

    Even example indices are negatives (motif absent, rejection-sampled),
    odd indices positives (motif planted at a random position), so class
    counts are exactly floor(n/2) positives / ceil(n/2) negatives.
    """
    if spec.kind != "motif":
        raise CorpusSpecError("spec.kind must be 'motif'")
    vocab = corpus_vocab(spec)
    motif_tokens = spec.motif.split()
    if not motif_tokens:
        raise CorpusSpecError("motif task needs a motif string")
    motif = np.array([vocab.id_of(t) for t in motif_tokens], dtype=np.int64)
    if (motif < FIRST_CONTENT_ID).any():
        raise CorpusSpecError(f"motif tokens {motif_tokens} not all in the alphabet")
    m = len(motif)
    if m >= spec.min_len:
        raise CorpusSpecError("motif must be shorter than the minimum sequence length")
    pool = vocab.eligible_ids()

    def contains(seq):
        if len(seq) < m:
            return False
        windows = np.lib.stride_tricks.sliding_window_view(seq, m)
        return bool((windows == motif).all(axis=1).any())

    root = Rng(spec.seed)
    sequences, labels = [], np.empty(spec.num_lines, dtype=np.int64)
    for i in range(spec.num_lines):
        rng = root.split("ex", i)
        n = spec.min_len + rng.integers(spec.max_len - spec.min_len + 1)
        positive = i % 2 == 1
        if positive:
            ids = pool[rng.integers(len(pool), (n,))]
            at = rng.integers(n - m + 1)
            ids[at:at + m] = motif
        else:
            for attempt in range(_REJECTION_LIMIT):
                ids = pool[rng.integers(len(pool), (n,))]
                if not contains(ids):
                    break
            else:
                raise CorpusSpecError(
                    "could not sample a motif-free sequence; the motif is too "
                    "short for this alphabet/length combination")
        sequences.append(wrap_sequence(ids))
        labels[i] = int(positive)
    return LabeledDataset(sequences=sequences, labels=labels, label_kind="class",
                          vocab=vocab, num_classes=2)


def save_corpus(lines, path):
    with open(path, "w", encoding="utf-8") as f:
        for toks in lines:
            f.write(" ".join(toks) + "\n")


def load_corpus(path) -> list:
    lines = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        toks = raw.split()
        if toks:
            lines.append(toks)
    return lines
