"""Gradient confusion: pairwise cosine similarity of per-example gradients.

Negatively correlated gradients from different training examples slow
convergence; this measures the full-parameter gradient of the fine-tuning
loss on single examples and reports the pairwise cosine distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpora.datasets import LabeledDataset
from ..errors import ContractError
from ..model.config import ModelConfig
from ..model.transformer import Parameters, forward
from ..numerics import Rng, cross_entropy, gradients
from ..training.loop import pad_batch


@dataclass
class GradConfusionStats:
    """Pairwise cosines (one per sampled pair), summary stats, exclusions."""
    cosines: np.ndarray
    pairs: list
    n_excluded: int

    @property
    def mean(self) -> float:
        return float(self.cosines.mean())

    @property
    def median(self) -> float:
        return float(np.median(self.cosines))

    @property
    def min(self) -> float:
        return float(self.cosines.min())


def example_gradient(params: Parameters, config: ModelConfig,
                     dataset: LabeledDataset, index: int) -> np.ndarray:
    """Flattened full-parameter gradient of the task loss on one example."""
    batch = pad_batch([dataset.sequences[index]])
    out = forward(params, config, batch, mode="cls")
    if config.regression:
        diff = out.logits.reshape(1) - dataset.labels[index:index + 1]
        loss = (diff * diff).mean()
    else:
        loss = cross_entropy(out.logits, dataset.labels[index:index + 1])
    return np.concatenate([g.reshape(-1)
                           for g in gradients(loss, params.values())])


def gradient_confusion(params: Parameters, config: ModelConfig,
                       dataset: LabeledDataset, n_pairs: int,
                       seed: int) -> GradConfusionStats:
    """Cosine similarities of gradients for n_pairs random example pairs.

    Pairs sample distinct indices; zero-norm gradients make the cosine
    undefined and are excluded with a count.
    """
    n = len(dataset)
    if n < 2:
        raise ContractError("gradient confusion needs at least 2 examples")
    rng = Rng(seed).split("confusion")
    pairs = []
    for _ in range(n_pairs):
        i = rng.integers(n)
        j = rng.integers(n - 1)
        if j >= i:
            j += 1
        pairs.append((int(i), int(j)))

    cache = {}

    def grad(i):
        if i not in cache:
            cache[i] = example_gradient(params, config, dataset, i)
        return cache[i]

    cosines, kept_pairs, excluded = [], [], 0
    for i, j in pairs:
        gi, gj = grad(i), grad(j)
        ni, nj = np.linalg.norm(gi), np.linalg.norm(gj)
        if ni == 0.0 or nj == 0.0:
            excluded += 1
            continue
        cosines.append(float(np.clip(np.dot(gi, gj) / (ni * nj), -1.0, 1.0)))
        kept_pairs.append((i, j))
    if not cosines:
        raise ContractError("every sampled pair had a zero-norm gradient")
    return GradConfusionStats(cosines=np.array(cosines), pairs=kept_pairs,
                              n_excluded=excluded)
