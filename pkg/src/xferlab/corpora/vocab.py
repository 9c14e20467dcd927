"""Token vocabularies: reserved ids, content ids, declared-unused tails.

File format: one token string per line, line number = id.  Tokens named
``[unusedN]`` are recognized as declared-unused on load, mirroring how
pretrained-model vocabularies ship filler ids that no corpus ever emits.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..model.config import FIRST_CONTENT_ID, RESERVED_TOKENS, UNK_ID

_UNUSED_RE = re.compile(r"^\[unused\d+\]$")


@dataclass(frozen=True)
class Vocab:
    tokens: tuple
    unused_ids: frozenset = frozenset()
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.tokens) < FIRST_CONTENT_ID + 1:
            raise DataError("vocabulary needs the 5 reserved tokens plus content")
        if tuple(self.tokens[:FIRST_CONTENT_ID]) != RESERVED_TOKENS:
            raise DataError(f"vocabulary must start with {RESERVED_TOKENS}")
        if len(set(self.tokens)) != len(self.tokens):
            raise DataError("vocabulary tokens must be unique")
        for t in self.tokens:
            if not t or any(c.isspace() for c in t):
                raise DataError(f"token {t!r} is empty or contains whitespace")
        if any(i < FIRST_CONTENT_ID or i >= len(self.tokens) for i in self.unused_ids):
            raise DataError("unused ids must be content ids")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    @property
    def size(self) -> int:
        return len(self.tokens)

    def content_ids(self) -> np.ndarray:
        return np.arange(FIRST_CONTENT_ID, self.size)

    def eligible_ids(self) -> np.ndarray:
        """Content ids minus the declared-unused set."""
        if not self.unused_ids:
            return self.content_ids()
        return np.array([i for i in range(FIRST_CONTENT_ID, self.size)
                         if i not in self.unused_ids])

    def id_of(self, token: str) -> int:
        """Token id, UNK for unknown tokens."""
        return self._index.get(token, UNK_ID)

    def ids_of(self, tokens) -> np.ndarray:
        return np.array([self.id_of(t) for t in tokens], dtype=np.int64)

    def token_of(self, i: int) -> str:
        return self.tokens[i]

    def save(self, path) -> str:
        """Write the vocab file; returns its sha256 hex digest."""
        blob = ("\n".join(self.tokens) + "\n").encode("utf-8")
        Path(path).write_bytes(blob)
        return hashlib.sha256(blob).hexdigest()

    def sha256(self) -> str:
        blob = ("\n".join(self.tokens) + "\n").encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def load(cls, path) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        tokens = tuple(lines)
        unused = frozenset(i for i, t in enumerate(tokens)
                           if i >= FIRST_CONTENT_ID and _UNUSED_RE.match(t))
        return cls(tokens=tokens, unused_ids=unused)

    @classmethod
    def build(cls, content_tokens, total_size: int | None = None) -> "Vocab":
        """Reserved tokens + content tokens, padded to total_size with [unusedN]."""
        tokens = list(RESERVED_TOKENS) + list(content_tokens)
        unused = []
        if total_size is not None:
            if total_size < len(tokens):
                raise DataError(
                    f"total_size {total_size} too small for {len(tokens)} tokens")
            j = 0
            while len(tokens) < total_size:
                tokens.append(f"[unused{j}]")
                unused.append(len(tokens) - 1)
                j += 1
        return cls(tokens=tuple(tokens), unused_ids=frozenset(unused))
