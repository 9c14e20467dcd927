"""Post-LN transformer encoder with MLM and CLS-classification heads.

Weights live in a Parameters container (ordered name -> Tensor).  The forward
pass builds an autodiff graph; in eval mode (train=False) it is a pure
function of (params, batch) and consumes no randomness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, ShapeError
from ..numerics import Rng, Tensor, dropout, embedding, gelu, layer_norm, masked_softmax
from .config import CLS_ID, ModelConfig

INIT_STD = 0.02  # weight matrices ~ N(0, INIT_STD^2), i.e. variance 4e-4


@dataclass
class Batch:
    """Token ids plus masks and targets. ids/mask are (B, L); PAD id is 0."""
    ids: np.ndarray
    attn_mask: np.ndarray
    labels: np.ndarray | None = None
    mlm_targets: np.ndarray | None = None  # -1 marks positions without a target


@dataclass
class ForwardOutput:
    """hidden[0] is the embedding output, hidden[i] the i-th encoder layer."""
    hidden: list
    logits: Tensor
    attention: list | None = None


class Parameters:
    """Ordered named weight tensors of one model."""

    def __init__(self, tensors: dict):
        self.tensors = dict(tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors.items())

    def names(self) -> list:
        return list(self.tensors.keys())

    def values(self) -> list:
        return list(self.tensors.values())

    def num_params(self) -> int:
        return sum(t.data.size for t in self.tensors.values())

    def copy(self) -> "Parameters":
        return Parameters({n: Tensor(t.data.copy(), requires_grad=True)
                           for n, t in self.tensors.items()})

    def flat(self) -> np.ndarray:
        """All weights concatenated in manifest order."""
        return np.concatenate([t.data.reshape(-1) for t in self.tensors.values()])


def parameter_shapes(config: ModelConfig) -> dict:
    """Name -> shape manifest, in serialization order."""
    d, ffn, D = config.hidden_dim, config.ffn_dim, config.vocab_size
    shapes = {
        "tok_emb": (D, d),
        "pos_emb": (config.max_len, d),
    }
    for i in range(config.num_layers):
        p = f"enc{i}"
        for proj in ("wq", "wk", "wv", "wo"):
            shapes[f"{p}.attn.{proj}"] = (d, d)
        for b in ("bq", "bk", "bv", "bo"):
            shapes[f"{p}.attn.{b}"] = (d,)
        shapes[f"{p}.ln1.g"] = (d,)
        shapes[f"{p}.ln1.b"] = (d,)
        shapes[f"{p}.ffn.w1"] = (d, ffn)
        shapes[f"{p}.ffn.b1"] = (ffn,)
        shapes[f"{p}.ffn.w2"] = (ffn, d)
        shapes[f"{p}.ffn.b2"] = (d,)
        shapes[f"{p}.ln2.g"] = (d,)
        shapes[f"{p}.ln2.b"] = (d,)
    shapes["mlm.w"] = (d, D)
    shapes["mlm.b"] = (D,)
    shapes["cls.w"] = (d, config.num_outputs)
    shapes["cls.b"] = (config.num_outputs,)
    return shapes


def init_params(config: ModelConfig, seed: int) -> Parameters:
    """Fresh weights: matrices N(0, 0.02^2), layer-norm gains 1, biases 0.

    Each tensor draws from its own seed-split stream, so values do not
    depend on initialization order.
    """
    root = Rng(seed)
    tensors = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith(".g"):
            data = np.ones(shape)
        elif len(shape) == 1:
            data = np.zeros(shape)
        else:
            data = root.split("init", name).normal(shape, std=INIT_STD)
        tensors[name] = Tensor(data, requires_grad=True)
    return Parameters(tensors)


def re_embed(params: Parameters, seed: int, include_positional: bool = False) -> Parameters:
    """Re-sample the token embedding matrix, keep everything else bitwise.

    include_positional also resets the positional embeddings (off by default:
    the narrow reading of re-initializing the word embedding layer).
    """
    out = params.copy()
    rng = Rng(seed)
    tok = out.tensors["tok_emb"]
    tok.data = rng.split("re_embed", "tok_emb").normal(tok.data.shape, std=INIT_STD)
    if include_positional:
        pos = out.tensors["pos_emb"]
        pos.data = rng.split("re_embed", "pos_emb").normal(pos.data.shape, std=INIT_STD)
    return out


def _validate_batch(config: ModelConfig, batch: Batch, mode: str):
    ids = batch.ids
    if ids.ndim != 2:
        raise ShapeError(f"batch ids must be (B, L), got {ids.shape}")
    if ids.shape[1] > config.max_len:
        raise ShapeError(
            f"sequence length {ids.shape[1]} exceeds max_len {config.max_len}")
    if ids.shape != batch.attn_mask.shape:
        raise ShapeError("attention mask shape must match ids")
    if ids.min() < 0 or ids.max() >= config.vocab_size:
        raise ShapeError("token id outside vocabulary")
    if mode == "cls" and not np.all(ids[:, 0] == CLS_ID):
        raise ContractError("cls mode requires the CLS token at position 0")
    if mode not in ("mlm", "cls"):
        raise ContractError(f"unknown forward mode {mode!r}")


def forward(params: Parameters, config: ModelConfig, batch: Batch, mode: str = "mlm",
            record_attention: bool = False, train: bool = False,
            rng: Rng | None = None, input_embeds: Tensor | None = None) -> ForwardOutput:
    """Run the encoder.

    train=True applies dropout (needs rng); eval mode is deterministic.
    Attention rows are probability distributions over non-PAD key positions;
    PAD keys get weight exactly 0.  input_embeds (B, L, d) replaces the token
    embedding lookup, exposing the word-embedding input as a differentiable
    leaf (batch.ids still defines masking and specials).
    """
    _validate_batch(config, batch, mode)
    if train and config.dropout_prob > 0.0 and rng is None:
        raise ContractError("training forward with dropout needs an rng")
    p = params.tensors
    B, L = batch.ids.shape
    H, dh, d = config.num_heads, config.head_dim, config.hidden_dim
    scale = 1.0 / np.sqrt(dh)
    drop = config.dropout_prob if train else 0.0

    if input_embeds is not None:
        if input_embeds.shape != (B, L, d):
            raise ShapeError(f"input_embeds must be {(B, L, d)}, "
                             f"got {input_embeds.shape}")
        emb = input_embeds + p["pos_emb"][:L]
    else:
        emb = embedding(p["tok_emb"], batch.ids) + p["pos_emb"][:L]
    # the stack runs on flat (B*L, d) activations; only attention needs 4-D
    h = emb.reshape(B * L, d)
    if drop > 0.0:
        h = dropout(h, drop, rng.split("drop", "emb"))

    # (B, 1, 1, L) key mask: which positions may receive attention
    keymask = batch.attn_mask.astype(bool).reshape(B, 1, 1, L)
    hidden = [h.reshape(B, L, d)]
    attention = [] if record_attention else None

    for i in range(config.num_layers):
        pre = f"enc{i}"

        def heads(t):
            return t.reshape(B, L, H, dh).transpose(0, 2, 1, 3)

        q = heads(h @ p[f"{pre}.attn.wq"] + p[f"{pre}.attn.bq"])
        k = heads(h @ p[f"{pre}.attn.wk"] + p[f"{pre}.attn.bk"])
        v = heads(h @ p[f"{pre}.attn.wv"] + p[f"{pre}.attn.bv"])
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        probs = masked_softmax(scores, keymask)
        if record_attention:
            attention.append(probs.data.copy())
        if drop > 0.0:
            probs = dropout(probs, drop, rng.split("drop", f"attnp{i}"))
        ctx = (probs @ v).transpose(0, 2, 1, 3).reshape(B * L, d)
        attn_out = ctx @ p[f"{pre}.attn.wo"] + p[f"{pre}.attn.bo"]
        if drop > 0.0:
            attn_out = dropout(attn_out, drop, rng.split("drop", f"attno{i}"))
        h = layer_norm(h + attn_out, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])

        ff = gelu(h @ p[f"{pre}.ffn.w1"] + p[f"{pre}.ffn.b1"]) @ p[f"{pre}.ffn.w2"] \
            + p[f"{pre}.ffn.b2"]
        if drop > 0.0:
            ff = dropout(ff, drop, rng.split("drop", f"ffn{i}"))
        h = layer_norm(h + ff, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
        hidden.append(h.reshape(B, L, d))

    if mode == "mlm":
        logits = (h @ p["mlm.w"] + p["mlm.b"]).reshape(B, L, config.vocab_size)
    else:
        cls_rows = h[np.arange(B) * L]
        logits = cls_rows @ p["cls.w"] + p["cls.b"]
    return ForwardOutput(hidden=hidden, logits=logits, attention=attention)
