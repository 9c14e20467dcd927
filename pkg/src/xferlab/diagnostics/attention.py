"""Attention-map similarity between two models via minimum-cost head matching.

For each input and layer, heads of model A are matched one-to-one to heads
of model B by minimizing the mean absolute difference of their attention
maps over valid (non-PAD) query/key positions; the matched mean distance,
averaged over inputs, summarizes how alike the two models attend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpora.datasets import LabeledDataset
from ..errors import ContractError
from ..model.config import ModelConfig
from ..model.transformer import Parameters, forward
from ..numerics import hungarian
from ..training.loop import pad_batch


@dataclass
class AttnDistanceReport:
    """mean_l1[layer] = matched mean L1 distance averaged over inputs;
    match_counts[layer][a][b] = how often head a of A matched head b of B."""
    mean_l1: np.ndarray
    n_inputs: int
    match_counts: np.ndarray


def _head_cost_matrix(maps_a, maps_b, valid):
    """H x H mean absolute differences over valid query/key pairs."""
    H = maps_a.shape[0]
    sel_a = maps_a[:, valid][:, :, valid]
    sel_b = maps_b[:, valid][:, :, valid]
    cost = np.empty((H, H))
    for a in range(H):
        cost[a] = np.abs(sel_a[a][None, :, :] - sel_b).mean(axis=(1, 2))
    return cost


def attention_match(params_a: Parameters, config_a: ModelConfig,
                    params_b: Parameters, config_b: ModelConfig,
                    dataset: LabeledDataset, n_inputs: int,
                    batch_size: int = 32) -> AttnDistanceReport:
    """Per-layer matched attention distance between two models.

    Uses the first n_inputs dataset examples; both models see identical
    batches.  Swapping the two models leaves every distance unchanged.
    """
    if (config_a.num_layers != config_b.num_layers
            or config_a.num_heads != config_b.num_heads):
        raise ContractError("models must share num_layers and num_heads")
    if n_inputs < 1 or n_inputs > len(dataset):
        raise ContractError(f"n_inputs must be in [1, {len(dataset)}]")
    n_layers, H = config_a.num_layers, config_a.num_heads

    sums = np.zeros(n_layers)
    counts = np.zeros((n_layers, H, H), dtype=np.int64)
    for lo in range(0, n_inputs, batch_size):
        seqs = dataset.sequences[lo:min(lo + batch_size, n_inputs)]
        batch = pad_batch(seqs)
        out_a = forward(params_a, config_a, batch, mode="mlm", record_attention=True)
        out_b = forward(params_b, config_b, batch, mode="mlm", record_attention=True)
        for i in range(len(seqs)):
            valid = batch.attn_mask[i].astype(bool)
            for layer in range(n_layers):
                cost = _head_cost_matrix(out_a.attention[layer][i],
                                         out_b.attention[layer][i], valid)
                match = hungarian(cost)
                sums[layer] += match.total_cost / H
                for a, b in enumerate(match.perm):
                    counts[layer, a, b] += 1
    return AttnDistanceReport(mean_l1=sums / n_inputs, n_inputs=n_inputs,
                              match_counts=counts)
