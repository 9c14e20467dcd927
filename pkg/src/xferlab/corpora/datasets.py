"""Labeled token-sequence datasets: TSV I/O, splitting, segment-and-vote.

Wire format is one example per line: ``label<TAB>tok tok tok ...``.
In memory every sequence is already wrapped as [CLS] ... [SEP]; saving
strips the wrapper, loading restores it.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import CorpusSpecError, DataError
from ..model.config import CLS_ID, FIRST_CONTENT_ID, SEP_ID, UNK_ID
from ..numerics import Rng
from .vocab import Vocab

log = logging.getLogger(__name__)


@dataclass
class LabeledDataset:
    """sequences[i] is an int64 id array [CLS, ..., SEP]; labels align by index."""
    sequences: list
    labels: np.ndarray
    label_kind: str            # "class" | "scalar"
    vocab: Vocab
    num_classes: int = 0
    n_unknown: int = 0

    def __post_init__(self):
        if len(self.sequences) != len(self.labels):
            raise DataError("sequence/label count mismatch")
        if self.label_kind not in ("class", "scalar"):
            raise DataError(f"unknown label kind {self.label_kind!r}")

    def __len__(self):
        return len(self.sequences)

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices)
        return LabeledDataset(
            sequences=[self.sequences[i] for i in idx],
            labels=self.labels[idx],
            label_kind=self.label_kind,
            vocab=self.vocab,
            num_classes=self.num_classes,
        )


def wrap_sequence(ids) -> np.ndarray:
    return np.concatenate([[CLS_ID], np.asarray(ids, dtype=np.int64), [SEP_ID]])


def load_dataset(path, vocab: Vocab, max_len: int = 512) -> LabeledDataset:
    """Parse a TSV dataset; truncate to max_len-2 tokens, wrap as CLS...SEP.

    Unknown tokens map to UNK and are counted (one warning per file).
    """
    sequences, raw_labels = [], []
    n_unknown = 0
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'label<TAB>tokens'")
            label, toks = parts
            tokens = toks.split()
            if not tokens:
                raise DataError(f"{path}:{lineno}: empty token sequence")
            ids = vocab.ids_of(tokens[: max_len - 2])
            n_unknown += int((ids == UNK_ID).sum())
            sequences.append(wrap_sequence(ids))
            raw_labels.append((lineno, label))
    if not sequences:
        raise DataError(f"{path}: no examples")
    if n_unknown:
        log.warning("%s: %d unknown tokens mapped to [UNK]", path, n_unknown)

    labels, kind = _parse_labels(raw_labels, path)
    num_classes = int(labels.max()) + 1 if kind == "class" else 0
    return LabeledDataset(sequences=sequences, labels=labels, label_kind=kind,
                          vocab=vocab, num_classes=num_classes,
                          n_unknown=n_unknown)


def _parse_labels(raw, path):
    try:
        values = np.array([int(lbl) for _, lbl in raw], dtype=np.int64)
        if values.min() < 0:
            raise DataError(f"{path}: negative class label")
        return values, "class"
    except ValueError:
        pass
    out = np.empty(len(raw), dtype=np.float64)
    for k, (lineno, lbl) in enumerate(raw):
        try:
            out[k] = float(lbl)
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric label {lbl!r}") from None
    return out, "scalar"


def save_dataset(dataset: LabeledDataset, path):
    """Inverse of load_dataset: strip CLS/SEP, write label<TAB>tokens lines."""
    with open(path, "w", encoding="utf-8") as f:
        for seq, label in zip(dataset.sequences, dataset.labels):
            core = seq[1:-1]
            toks = " ".join(dataset.vocab.token_of(int(i)) for i in core)
            lbl = str(int(label)) if dataset.label_kind == "class" else repr(float(label))
            f.write(f"{lbl}\t{toks}\n")


def split_dataset(dataset: LabeledDataset, fractions=(0.9, 0.05, 0.05), seed: int = 0):
    """Disjoint exhaustive (train, valid, test) split, remainder to train."""
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9:
        raise CorpusSpecError(f"split fractions must sum to 1, got {fractions}")
    n = len(dataset)
    n_valid = int(np.floor(n * fractions[1]))
    n_test = int(np.floor(n * fractions[2]))
    n_train = n - n_valid - n_test
    perm = Rng(seed).split("split").permutation(n)
    return (dataset.subset(perm[:n_train]),
            dataset.subset(perm[n_train:n_train + n_valid]),
            dataset.subset(perm[n_train + n_valid:]))


def segment_sequence(sequence, segment_len: int = 128) -> list:
    """Consecutive non-overlapping chunks; the last chunk may be short."""
    seq = np.asarray(sequence)
    if seq.size == 0:
        raise DataError("cannot segment an empty sequence")
    if segment_len < 1:
        raise DataError("segment_len must be >= 1")
    return [seq[i:i + segment_len] for i in range(0, len(seq), segment_len)]


def vote(predictions) -> int:
    """Majority class over per-segment predictions; ties go to the lowest id."""
    preds = [int(p) for p in predictions]
    if not preds:
        raise DataError("vote needs at least one prediction")
    counts = Counter(preds)
    best = max(counts.values())
    return min(c for c, k in counts.items() if k == best)
