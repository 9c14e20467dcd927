"""Sampling hidden-state representation matrices from a model on a dataset."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpora.datasets import LabeledDataset
from ..errors import ContractError
from ..model.config import ModelConfig
from ..model.transformer import Parameters, forward
from ..numerics import Rng
from ..training.loop import pad_batch


@dataclass
class ReprMatrix:
    """rows = sampled non-PAD token positions, cols = hidden features, n > d.

    positions[(k)] = (example index, token position) of row k, so matrices
    collected from different checkpoints with the same (dataset, seed) are
    row-aligned.
    """
    matrix: np.ndarray
    layer: int
    positions: list
    checkpoint_id: str = ""


def sample_positions(dataset: LabeledDataset, n_points: int, seed: int) -> list:
    """n_points (example, position) pairs drawn uniformly without replacement."""
    all_pos = [(i, t) for i, seq in enumerate(dataset.sequences)
               for t in range(len(seq))]
    if n_points > len(all_pos):
        raise ContractError(
            f"requested {n_points} positions but the dataset has {len(all_pos)}")
    pick = Rng(seed).split("repr").choice(len(all_pos), n_points)
    return [all_pos[k] for k in sorted(pick)]


def collect_representations(params: Parameters, config: ModelConfig,
                            dataset: LabeledDataset, layer: int, n_points: int,
                            seed: int, batch_size: int = 32,
                            checkpoint_id: str = "") -> ReprMatrix:
    """Eval-mode hidden vectors of sampled token positions at one layer.

    layer is 1-based over encoder layers (layer 0 would be the embedding
    output, which is excluded by contract).
    """
    if not (1 <= layer <= config.num_layers):
        raise ContractError(f"layer must be in [1, {config.num_layers}], got {layer}")
    if n_points <= config.hidden_dim:
        raise ContractError(
            f"n_points must exceed hidden_dim ({config.hidden_dim}) for a "
            f"usable representation matrix")
    positions = sample_positions(dataset, n_points, seed)

    wanted = {}
    for row, (ex, t) in enumerate(positions):
        wanted.setdefault(ex, []).append((row, t))
    matrix = np.empty((n_points, config.hidden_dim))
    for lo in range(0, len(dataset), batch_size):
        examples = range(lo, min(lo + batch_size, len(dataset)))
        if not any(ex in wanted for ex in examples):
            continue
        batch = pad_batch(dataset.sequences[lo:lo + batch_size])
        out = forward(params, config, batch, mode="mlm")
        hs = out.hidden[layer].data
        for ex in examples:
            for row, t in wanted.get(ex, ()):
                matrix[row] = hs[ex - lo, t]
    return ReprMatrix(matrix=matrix, layer=layer, positions=positions,
                      checkpoint_id=checkpoint_id)
