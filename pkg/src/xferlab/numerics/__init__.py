"""Tensor arithmetic, autodiff, SVD, assignment, and seeded randomness."""

from .assignment import Assignment, hungarian
from .linalg import SvdResult, singular_values, svd
from .rng import Rng
from .tensor import (
    Tensor,
    assert_finite,
    cosine,
    cross_entropy,
    dropout,
    embedding,
    gelu,
    gradients,
    layer_norm,
    masked_softmax,
    matmul,
    tensor,
    toposort,
)

__all__ = [
    "Assignment",
    "hungarian",
    "SvdResult",
    "singular_values",
    "svd",
    "Rng",
    "Tensor",
    "assert_finite",
    "cosine",
    "cross_entropy",
    "dropout",
    "embedding",
    "gelu",
    "gradients",
    "layer_norm",
    "masked_softmax",
    "matmul",
    "tensor",
    "toposort",
]
