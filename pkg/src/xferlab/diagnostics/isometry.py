"""Singular-value spectrum of the output-input Jacobian of the encoder.

The Jacobian is d(last-layer representation) / d(input word embeddings) for
one sequence, assembled exactly, one reverse-mode pass per output
coordinate.  A spectrum concentrated near 1 is the dynamical-isometry
regime; transformer spectra at standard init are far from it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from ..model.config import ModelConfig
from ..model.transformer import Batch, Parameters, forward
from ..numerics import Tensor, svd, toposort

JACOBIAN_BUDGET = 4096  # max L*d: the dense Jacobian is (L*d)^2 floats


@dataclass
class SingularSpectrum:
    """Jacobian singular values sorted descending, all >= 0."""
    values: np.ndarray
    seq_len: int
    hidden_dim: int


def input_jacobian(params: Parameters, config: ModelConfig,
                   sequence) -> np.ndarray:
    """Dense (L*d) x (L*d) Jacobian of the last hidden layer w.r.t. the
    sequence's input embeddings (row r = output coordinate r)."""
    seq = np.asarray(sequence, dtype=np.int64).reshape(1, -1)
    L = seq.shape[1]
    d = config.hidden_dim
    n = L * d
    if n > JACOBIAN_BUDGET:
        raise ContractError(
            f"L*d = {n} exceeds the dense-Jacobian budget {JACOBIAN_BUDGET}")
    batch = Batch(ids=seq, attn_mask=np.ones_like(seq))
    embeds = Tensor(params["tok_emb"].data[seq[0]][None, :, :], requires_grad=True)
    out = forward(params, config, batch, mode="mlm", input_embeds=embeds)
    root = out.hidden[-1]

    order = toposort(root)
    jac = np.empty((n, n))
    seed = np.zeros((1, L, d))
    flat_seed = seed.reshape(-1)
    for r in range(n):
        for node in order:
            node.grad = None
        embeds.grad = None
        flat_seed[r] = 1.0
        root.accumulate(seed.copy())
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
        jac[r] = embeds.grad.reshape(-1)
        flat_seed[r] = 0.0
    return jac


def jacobian_singular_values(params: Parameters, config: ModelConfig,
                             sequence) -> SingularSpectrum:
    """Spectrum of the output-input Jacobian for one token sequence."""
    jac = input_jacobian(params, config, sequence)
    values = svd(jac).s
    seq = np.asarray(sequence)
    return SingularSpectrum(values=values, seq_len=int(seq.size),
                            hidden_dim=config.hidden_dim)
