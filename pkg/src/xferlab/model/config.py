"""Encoder architecture configuration and the reserved vocabulary contract."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..errors import ContractError

# Reserved token ids every vocabulary starts with; ids >= FIRST_CONTENT_ID are
# content tokens.  A vocabulary may additionally declare a tail range of
# content ids "unused" (never emitted by its corpus).
PAD_ID = 0
UNK_ID = 1
CLS_ID = 2
SEP_ID = 3
MASK_ID = 4
FIRST_CONTENT_ID = 5

RESERVED_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")


@dataclass(frozen=True)
class ModelConfig:
    """Shape of the transformer encoder and its heads."""
    num_layers: int = 4
    hidden_dim: int = 128
    num_heads: int = 4
    ffn_dim: int = 512
    vocab_size: int = 64
    max_len: int = 64
    dropout_prob: float = 0.1
    num_classes: int = 2
    regression: bool = False

    def __post_init__(self):
        if self.hidden_dim % self.num_heads != 0:
            raise ContractError(
                f"hidden_dim {self.hidden_dim} not divisible by num_heads {self.num_heads}")
        if self.vocab_size < FIRST_CONTENT_ID + 1:
            raise ContractError(
                f"vocab_size must be >= {FIRST_CONTENT_ID + 1} "
                f"(5 reserved ids + at least one content token)")
        if self.max_len < 2:
            raise ContractError("max_len must be >= 2")
        if not (0.0 <= self.dropout_prob < 1.0):
            raise ContractError("dropout_prob must be in [0, 1)")
        if self.num_layers < 1 or self.ffn_dim < 1:
            raise ContractError("num_layers and ffn_dim must be positive")
        if not self.regression and self.num_classes < 2:
            raise ContractError("classification needs num_classes >= 2")

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.num_heads

    @property
    def num_outputs(self) -> int:
        return 1 if self.regression else self.num_classes

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)
