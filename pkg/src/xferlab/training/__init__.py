"""Adam optimization, training loops, and evaluation metrics."""

from .loop import (
    FinetuneResult,
    LossCurve,
    default_metric,
    finetune,
    pad_batch,
    predict,
    pretrain_mlm,
    subset_indices,
)
from .metrics import (
    METRICS,
    MetricReport,
    accuracy,
    average_ranks,
    evaluate,
    f1_binary,
    mcc_binary,
    spearman,
)
from .optim import OptimState, TrainConfig, adam_step, lr_at

__all__ = [
    "FinetuneResult", "LossCurve", "default_metric", "finetune", "pad_batch",
    "predict", "pretrain_mlm", "subset_indices",
    "METRICS", "MetricReport", "accuracy", "average_ranks", "evaluate",
    "f1_binary", "mcc_binary", "spearman",
    "OptimState", "TrainConfig", "adam_step", "lr_at",
]
