"""MLM pretraining and classification/regression fine-tuning loops.

Both loops are fully deterministic given (config, seeds, data): batch order,
masking, dropout, and evaluation all draw from labeled splits of one root
seed stream.  Logged training loss is the mean over each log window, so a
curve point at step s covers steps (s - log_every, s].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpora.datasets import LabeledDataset
from ..corpora.vocab import Vocab
from ..errors import ContractError, DataError, TrainingDivergedError
from ..model.checkpoint import adapt_to_config
from ..model.config import PAD_ID, ModelConfig
from ..model.masking import mask_tokens
from ..model.transformer import Batch, Parameters, forward, init_params, re_embed
from ..numerics import Rng, cross_entropy, gradients
from .metrics import MetricReport, evaluate
from .optim import OptimState, TrainConfig, adam_step


@dataclass
class LossCurve:
    """(step, training loss) points plus optional (step, validation score)."""
    train: list = field(default_factory=list)
    valid: list = field(default_factory=list)

    def loss_at(self, step: int) -> float:
        for s, v in self.train:
            if s == step:
                return v
        raise KeyError(f"no curve point at step {step}")

    def final_loss(self) -> float:
        return self.train[-1][1]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write("step,loss\n")
            for s, v in self.train:
                f.write(f"{s},{v!r}\n")

    def save_valid(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write("step,value\n")
            for s, v in self.valid:
                f.write(f"{s},{v!r}\n")


@dataclass
class FinetuneResult:
    report: MetricReport
    curve: LossCurve
    params: Parameters
    selected_step: int


def pad_batch(sequences, labels=None, mlm_targets=None) -> Batch:
    """Pad ragged id sequences with PAD to the batch maximum length."""
    B = len(sequences)
    L = max(len(s) for s in sequences)
    ids = np.full((B, L), PAD_ID, dtype=np.int64)
    mask = np.zeros((B, L), dtype=np.int64)
    for i, s in enumerate(sequences):
        ids[i, :len(s)] = s
        mask[i, :len(s)] = 1
    return Batch(ids=ids, attn_mask=mask, labels=labels, mlm_targets=mlm_targets)


def _epoch_batches(n: int, batch_size: int, rng: Rng, step0: int, total: int):
    """Yield index arrays: seeded shuffle each epoch, ragged final batch kept."""
    step = step0
    epoch = 0
    while step < total:
        order = rng.split("order", epoch).permutation(n)
        for lo in range(0, n, batch_size):
            if step >= total:
                return
            yield step, order[lo:lo + batch_size]
            step += 1
        epoch += 1


def _log_point(curve, window, step):
    curve.train.append((step, float(np.mean(window))))
    window.clear()


def pretrain_mlm(lines_ids, vocab: Vocab, model_config: ModelConfig,
                 train_config: TrainConfig):
    """Train an MLM on wrapped id sequences; returns (params, curve).

    lines_ids: list of int64 arrays, already wrapped [CLS]...[SEP].
    Random-replacement tokens come from the vocabulary's non-unused content
    ids, so declared-unused embeddings stay untouched by pretraining.
    """
    if not lines_ids:
        raise DataError("empty corpus")
    root = Rng(train_config.seed)
    params = init_params(model_config, train_config.seed)
    state = OptimState(params)
    pool = vocab.eligible_ids()
    names = params.names()
    tensors = params.values()
    curve = LossCurve()
    window = []

    gen = _epoch_batches(len(lines_ids), train_config.batch_size, root,
                         0, train_config.total_steps)
    for step, idx in gen:
        batch = pad_batch([lines_ids[i] for i in idx])
        batch = mask_tokens(batch, train_config.mask_ratio,
                            root.split("mask", step), random_pool=pool)
        out = forward(params, model_config, batch, mode="mlm", train=True,
                      rng=root.split("fwd", step))
        D = model_config.vocab_size
        loss = cross_entropy(out.logits.reshape(-1, D),
                             batch.mlm_targets.reshape(-1))
        value = loss.item()
        if not np.isfinite(value):
            raise TrainingDivergedError(f"non-finite MLM loss at step {step + 1}")
        window.append(value)
        grads = dict(zip(names, gradients(loss, tensors)))
        adam_step(params, grads, state, train_config)
        done = step + 1
        if done % train_config.log_every == 0 or done == train_config.total_steps:
            _log_point(curve, window, done)
    return params, curve


def predict(params: Parameters, config: ModelConfig, dataset: LabeledDataset,
            batch_size: int = 32) -> np.ndarray:
    """Eval-mode predictions: argmax class ids, or the raw scalar output."""
    preds = []
    for lo in range(0, len(dataset), batch_size):
        batch = pad_batch(dataset.sequences[lo:lo + batch_size])
        out = forward(params, config, batch, mode="cls")
        if config.regression:
            preds.append(out.logits.data.reshape(-1))
        else:
            preds.append(np.argmax(out.logits.data, axis=-1))
    return np.concatenate(preds)


def subset_indices(dataset: LabeledDataset, fraction: float, rng: Rng) -> np.ndarray:
    """floor(n * fraction) training indices (at least 1), class-stratified.

    Class quotas use the largest-remainder method so the total is exact and
    small subsets keep every class represented proportionally.
    """
    n = len(dataset)
    total = max(1, int(np.floor(n * fraction)))
    if dataset.label_kind != "class":
        return np.sort(rng.split("subset").permutation(n)[:total])
    labels = dataset.labels
    classes = sorted(int(c) for c in np.unique(labels))
    quota = {c: int(np.floor((labels == c).sum() * fraction)) for c in classes}
    leftover = total - sum(quota.values())
    remainders = sorted(
        classes,
        key=lambda c: (-(float((labels == c).sum() * fraction) - quota[c]), c))
    for c in remainders[:leftover]:
        quota[c] += 1
    chosen = []
    for c in classes:
        members = np.nonzero(labels == c)[0]
        pick = rng.split("subset", c).permutation(len(members))[:quota[c]]
        chosen.append(members[pick])
    return np.sort(np.concatenate(chosen))


def default_metric(dataset: LabeledDataset) -> str:
    return "accuracy" if dataset.label_kind == "class" else "spearman"


def finetune(splits, model_config: ModelConfig, train_config: TrainConfig,
             checkpoint=None, metric: str | None = None) -> FinetuneResult:
    """Fine-tune on (train, valid, test) splits.

    init_mode scratch ignores any checkpoint; checkpoint loads it as-is;
    re-emb loads it and re-samples the token embeddings.  The classifier
    head is freshly initialized in every mode.  The reported score is the
    test metric of the final or best-valid parameters per
    train_config.checkpoint_selection.
    """
    train_ds, valid_ds, test_ds = splits
    cfg = train_config
    metric = metric or default_metric(train_ds)

    if cfg.init_mode == "scratch":
        params = init_params(model_config, cfg.seed)
    else:
        if checkpoint is None:
            raise ContractError(f"init_mode={cfg.init_mode} requires a checkpoint")
        ck_params, manifest = checkpoint
        params = adapt_to_config(ck_params, manifest, model_config,
                                 head_seed=cfg.seed)
        if cfg.init_mode == "re-emb":
            params = re_embed(params, cfg.seed)

    root = Rng(cfg.seed)
    if cfg.subset_fraction < 1.0:
        train_ds = train_ds.subset(subset_indices(train_ds, cfg.subset_fraction, root))
    state = OptimState(params)
    names = params.names()
    curve = LossCurve()
    window = []
    eval_every = cfg.eval_every or max(1, cfg.total_steps // 10)
    best_value, best_params, best_step = -np.inf, None, 0
    regression = model_config.regression

    def run_eval(step, current):
        nonlocal best_value, best_params, best_step
        preds = predict(current, model_config, valid_ds, cfg.batch_size)
        value = evaluate(preds, valid_ds.labels, metric).value
        curve.valid.append((step, value))
        if cfg.checkpoint_selection == "best-valid" and value > best_value:
            best_value, best_params, best_step = value, current.copy(), step

    gen = _epoch_batches(len(train_ds), cfg.batch_size, root, 0, cfg.total_steps)
    for step, idx in gen:
        batch = pad_batch([train_ds.sequences[i] for i in idx])
        out = forward(params, model_config, batch, mode="cls", train=True,
                      rng=root.split("fwd", step))
        if regression:
            diff = out.logits.reshape(len(idx)) - train_ds.labels[idx]
            loss = (diff * diff).mean()
        else:
            loss = cross_entropy(out.logits, train_ds.labels[idx])
        value = loss.item()
        if not np.isfinite(value):
            raise TrainingDivergedError(f"non-finite loss at step {step + 1}")
        window.append(value)
        grads = dict(zip(names, gradients(loss, params.values())))
        adam_step(params, grads, state, cfg)
        done = step + 1
        if done % cfg.log_every == 0 or done == cfg.total_steps:
            _log_point(curve, window, done)
        if done % eval_every == 0 or done == cfg.total_steps:
            run_eval(done, params)

    if cfg.checkpoint_selection == "best-valid" and best_params is not None:
        selected, selected_step = best_params, best_step
    else:
        selected, selected_step = params, cfg.total_steps
    preds = predict(selected, model_config, test_ds, cfg.batch_size)
    report = evaluate(preds, test_ds.labels, metric, seed=cfg.seed,
                      init_mode=cfg.init_mode)
    return FinetuneResult(report=report, curve=curve, params=selected,
                          selected_step=selected_step)
