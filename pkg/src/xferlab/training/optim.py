"""Adam with bias correction and linear learning-rate decay to zero.

No warmup, no gradient clipping: the effective rate for the (t+1)-th update
is lr * (1 - t / total_steps) where t counts completed steps, so the first
update runs at the full rate and the rate hits exactly zero after
total_steps updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, TrainingDivergedError
from ..model.transformer import Parameters


@dataclass
class TrainConfig:
    total_steps: int
    lr: float = 1e-5
    batch_size: int = 32
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    subset_fraction: float = 1.0
    init_mode: str = "scratch"            # scratch | checkpoint | re-emb
    checkpoint_selection: str = "final"   # final | best-valid
    mask_ratio: float = 0.15
    log_every: int = 50
    eval_every: int = 0                   # 0 -> total_steps // 10

    def __post_init__(self):
        if self.lr <= 0:
            raise ContractError("lr must be positive")
        if self.total_steps < 1:
            raise ContractError("total_steps must be >= 1")
        if not (0.0 < self.subset_fraction <= 1.0):
            raise ContractError("subset_fraction must be in (0, 1]")
        if self.init_mode not in ("scratch", "checkpoint", "re-emb"):
            raise ContractError(f"unknown init_mode {self.init_mode!r}")
        if self.checkpoint_selection not in ("final", "best-valid"):
            raise ContractError(
                f"unknown checkpoint_selection {self.checkpoint_selection!r}")
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["betas"] = list(self.betas)
        return d


def lr_at(config: TrainConfig, t: int) -> float:
    """Effective learning rate after t completed steps: lr * (1 - t/total)."""
    return config.lr * max(0.0, 1.0 - t / config.total_steps)


class OptimState:
    """First/second moment estimates per parameter plus the step counter."""

    def __init__(self, params: Parameters):
        self.m = {n: np.zeros_like(t.data) for n, t in params}
        self.v = {n: np.zeros_like(t.data) for n, t in params}
        self.t = 0


def adam_step(params: Parameters, grads: dict, state: OptimState,
              config: TrainConfig) -> None:
    """One in-place Adam update.  grads maps parameter name -> ndarray."""
    b1, b2 = config.betas
    lr = lr_at(config, state.t)
    state.t += 1
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, tensor in params:
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(
                f"non-finite gradient for {name} at step {state.t}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        if lr != 0.0:
            tensor.data -= lr * (m / c1) / (np.sqrt(v / c2) + config.eps)
