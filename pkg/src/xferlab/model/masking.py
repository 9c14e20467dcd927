"""BERT-style token masking for MLM pretraining (80/10/10)."""

from __future__ import annotations

import numpy as np

from ..numerics import Rng
from .config import FIRST_CONTENT_ID, MASK_ID
from .transformer import Batch


def mask_tokens(batch: Batch, ratio: float, rng: Rng,
                random_pool: np.ndarray | None = None,
                vocab_size: int | None = None) -> Batch:
    """Select non-special positions independently with probability ratio.

    Of the selected positions: 80% become MASK, 10% a uniform random token
    from random_pool, 10% stay unchanged.  Targets hold the original id at
    selected positions and -1 elsewhere.  Special ids (PAD/UNK/CLS/SEP/MASK)
    are never selected.

    random_pool defaults to all content ids of the vocabulary; pass the
    non-unused content ids to keep declared-unused tokens out of pretraining.
    """
    if not (0.0 <= ratio <= 1.0):
        raise ValueError("mask ratio must be in [0, 1]")
    ids = batch.ids.copy()
    if random_pool is None:
        if vocab_size is None:
            vocab_size = int(ids.max()) + 1
        random_pool = np.arange(FIRST_CONTENT_ID, vocab_size)
    random_pool = np.asarray(random_pool)

    maskable = ids >= FIRST_CONTENT_ID
    # fixed draw counts regardless of outcome keep the stream aligned
    u_select = rng.uniform(ids.shape)
    u_action = rng.uniform(ids.shape)
    pool_pick = rng.integers(len(random_pool), ids.shape)

    selected = maskable & (u_select < ratio)
    targets = np.where(selected, ids, -1)
    ids[selected & (u_action < 0.8)] = MASK_ID
    randomize = selected & (u_action >= 0.8) & (u_action < 0.9)
    ids[randomize] = random_pool[pool_pick[randomize]]
    return Batch(ids=ids, attn_mask=batch.attn_mask, labels=batch.labels,
                 mlm_targets=targets)
