"""Deterministic token-id maps: content-cycle shifts, random bijections,
file-defined tables, and injections into a larger model vocabulary.

Bijective kinds permute content ids and fix reserved ids, preserving the
token-relationship structure of a corpus while changing every token's
surface identity.  Injections place a small source alphabet inside a model
vocabulary, by default avoiding both reserved ids and ids the model never
saw in pretraining (its declared-unused set).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import MappingError
from ..model.config import FIRST_CONTENT_ID
from ..numerics import Rng
from .datasets import LabeledDataset
from .vocab import Vocab

_RESERVED = list(range(FIRST_CONTENT_ID))


@dataclass(frozen=True)
class Mapping:
    kind: str          # shift | random | file | inject
    table: dict        # src id -> dst id
    _lut: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.table.values())) != len(self.table):
            raise MappingError("mapping table is not injective")
        size = max(self.table) + 1
        lut = np.full(size, -1, dtype=np.int64)
        for s, d in self.table.items():
            if s < 0 or d < 0:
                raise MappingError("mapping ids must be non-negative")
            lut[s] = d
        object.__setattr__(self, "_lut", lut)

    @property
    def domain_size(self) -> int:
        return len(self.table)

    def image(self) -> set:
        return set(self.table.values())

    def apply_id(self, i: int) -> int:
        if i >= len(self._lut) or self._lut[i] < 0:
            raise MappingError(f"id {i} outside mapping domain")
        return int(self._lut[i])

    def apply_ids(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= len(self._lut)):
            raise MappingError("id outside mapping domain")
        out = self._lut[ids]
        if (out < 0).any():
            bad = int(ids[out < 0].reshape(-1)[0])
            raise MappingError(f"id {bad} outside mapping domain")
        return out

    def inverse(self) -> "Mapping":
        return Mapping(kind=self.kind, table={d: s for s, d in self.table.items()})


def compose(outer: Mapping, inner: Mapping) -> Mapping:
    """Mapping equivalent to applying inner first, then outer."""
    return Mapping(kind="file",
                   table={s: outer.apply_id(d) for s, d in inner.table.items()})


def make_shift_mapping(vocab: Vocab, offset: int) -> Mapping:
    """Cyclic shift by offset along the ascending content ids; reserved ids fixed.

    For a contiguous content range this is (i + offset) mod D restricted to
    content ids, the classic synthetic-permutation construction.
    """
    content = list(range(FIRST_CONTENT_ID, vocab.size))
    m = len(content)
    table = {i: i for i in _RESERVED}
    for j, src in enumerate(content):
        table[src] = content[(j + offset) % m]
    return Mapping(kind="shift", table=table)


def make_random_mapping(vocab: Vocab, seed: int) -> Mapping:
    """Uniformly random bijection over content ids; reserved ids fixed."""
    content = np.arange(FIRST_CONTENT_ID, vocab.size)
    perm = Rng(seed).split("mapping", "random").permutation(len(content))
    table = {i: i for i in _RESERVED}
    table.update({int(s): int(content[p]) for s, p in zip(content, perm)})
    return Mapping(kind="random", table=table)


def inject_tokens(source_vocab: Vocab, model_vocab: Vocab, seed: int,
                  avoid_unused: bool = True) -> Mapping:
    """Random injection of source content ids into model content ids.

    Reserved ids map to themselves.  Targets exclude reserved ids always and
    the model's declared-unused ids unless avoid_unused=False (which allows
    probing how mapping into never-pretrained embeddings degrades transfer).
    """
    sources = list(range(FIRST_CONTENT_ID, source_vocab.size))
    eligible = model_vocab.eligible_ids() if avoid_unused else model_vocab.content_ids()
    if len(sources) > len(eligible):
        raise MappingError(
            f"cannot inject {len(sources)} source tokens into "
            f"{len(eligible)} eligible model ids")
    pick = Rng(seed).split("mapping", "inject").choice(len(eligible), len(sources))
    table = {i: i for i in _RESERVED}
    table.update({s: int(eligible[p]) for s, p in zip(sources, pick)})
    return Mapping(kind="inject", table=table)


def save_mapping(mapping: Mapping, path):
    """One 'src_id<TAB>dst_id' line per entry, ascending by source id."""
    with open(path, "w", encoding="utf-8") as f:
        for s in sorted(mapping.table):
            f.write(f"{s}\t{mapping.table[s]}\n")


def load_mapping(path, kind: str = "file") -> Mapping:
    """Parse a mapping file.  kind='file' additionally requires a permutation
    (source and destination id sets equal); kind='inject' only injectivity."""
    table = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MappingError(f"{path}:{lineno}: expected 'src_id<TAB>dst_id'")
        try:
            s, d = int(parts[0]), int(parts[1])
        except ValueError:
            raise MappingError(f"{path}:{lineno}: non-integer id") from None
        if s in table:
            raise MappingError(f"{path}:{lineno}: duplicate source id {s}")
        table[s] = d
    if not table:
        raise MappingError(f"{path}: empty mapping")
    mapping = Mapping(kind=kind, table=table)
    if kind != "inject" and set(table) != set(table.values()):
        raise MappingError(f"{path}: table is not a permutation of its ids")
    return mapping


def apply_to_dataset(dataset: LabeledDataset, mapping: Mapping,
                     target_vocab: Vocab | None = None) -> LabeledDataset:
    """Remap every token id; labels and sequence shapes untouched."""
    return LabeledDataset(
        sequences=[mapping.apply_ids(seq) for seq in dataset.sequences],
        labels=dataset.labels.copy(),
        label_kind=dataset.label_kind,
        vocab=target_vocab if target_vocab is not None else dataset.vocab,
        num_classes=dataset.num_classes,
    )


def apply_to_lines(lines, mapping: Mapping, source_vocab: Vocab,
                   target_vocab: Vocab | None = None) -> list:
    """Remap corpus token strings; unknown source tokens are an error."""
    tv = target_vocab if target_vocab is not None else source_vocab
    out = []
    for toks in lines:
        ids = source_vocab.ids_of(toks)
        out.append([tv.token_of(int(i)) for i in mapping.apply_ids(ids)])
    return out
