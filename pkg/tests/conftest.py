import numpy as np
import pytest

from xferlab.model import Batch, ModelConfig, init_params
from xferlab.numerics import Rng


@pytest.fixture
def small_config():
    return ModelConfig(num_layers=2, hidden_dim=16, num_heads=2, ffn_dim=32,
                       vocab_size=12, max_len=10, dropout_prob=0.0)


@pytest.fixture
def small_params(small_config):
    return init_params(small_config, seed=1)


@pytest.fixture
def small_batch(small_config):
    rng = Rng(99)
    B, L = 3, 7
    ids = np.concatenate([
        np.full((B, 1), 2),
        rng.integers(small_config.vocab_size - 5, (B, L - 2)) + 5,
        np.full((B, 1), 3),
    ], axis=1)
    mask = np.ones((B, L), dtype=np.int64)
    ids[2, 5:] = 0
    mask[2, 5:] = 0
    return Batch(ids=ids, attn_mask=mask)


def finite_difference(f, x, eps=1e-5):
    """Central-difference gradient of scalar f at flat array x."""
    g = np.zeros_like(x)
    for i in range(x.size):
        old = x.flat[i]
        x.flat[i] = old + eps
        hi = f()
        x.flat[i] = old - eps
        lo = f()
        x.flat[i] = old
        g.flat[i] = (hi - lo) / (2 * eps)
    return g
