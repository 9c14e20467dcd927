"""Transformer MLM/classifier: config, weights, forward, masking, checkpoints."""

from .checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    adapt_to_config,
    check_compatible,
    load_checkpoint,
    save_checkpoint,
)
from .config import (
    CLS_ID,
    FIRST_CONTENT_ID,
    MASK_ID,
    PAD_ID,
    RESERVED_TOKENS,
    SEP_ID,
    UNK_ID,
    ModelConfig,
)
from .masking import mask_tokens
from .transformer import (
    INIT_STD,
    Batch,
    ForwardOutput,
    Parameters,
    forward,
    init_params,
    parameter_shapes,
    re_embed,
)

__all__ = [
    "FORMAT_VERSION", "MAGIC", "adapt_to_config", "check_compatible",
    "load_checkpoint", "save_checkpoint",
    "CLS_ID", "FIRST_CONTENT_ID", "MASK_ID", "PAD_ID", "RESERVED_TOKENS",
    "SEP_ID", "UNK_ID", "ModelConfig",
    "mask_tokens",
    "INIT_STD", "Batch", "ForwardOutput", "Parameters", "forward",
    "init_params", "parameter_shapes", "re_embed",
]
