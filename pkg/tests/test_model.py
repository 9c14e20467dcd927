import numpy as np
import pytest

from xferlab.errors import ContractError, ShapeError
from xferlab.model import (
    CLS_ID,
    FIRST_CONTENT_ID,
    MASK_ID,
    Batch,
    INIT_STD,
    ModelConfig,
    forward,
    init_params,
    mask_tokens,
    parameter_shapes,
    re_embed,
)
from xferlab.numerics import Rng, cross_entropy, gradients

from conftest import finite_difference


# ---------------------------------------------------------------- config

def test_config_validation():
    with pytest.raises(ContractError):
        ModelConfig(hidden_dim=10, num_heads=3)
    with pytest.raises(ContractError):
        ModelConfig(vocab_size=5)
    with pytest.raises(ContractError):
        ModelConfig(max_len=1)
    cfg = ModelConfig()
    assert cfg.head_dim == 32
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg


# ---------------------------------------------------------------- init

def test_init_layer_norm_gains_ones_biases_zero(small_config):
    params = init_params(small_config, 3)
    for name, t in params:
        if name.endswith(".g"):
            assert np.array_equal(t.data, np.ones_like(t.data)), name
        elif t.data.ndim == 1:
            assert np.array_equal(t.data, np.zeros_like(t.data)), name


def test_init_weight_statistics():
    cfg = ModelConfig(num_layers=1, hidden_dim=256, num_heads=4, ffn_dim=256,
                      vocab_size=260, max_len=8)
    params = init_params(cfg, 0)
    w = params["tok_emb"].data  # 260*256 = 66k samples
    assert w.size >= 65_000
    assert abs(w.mean()) < 0.005
    assert abs(w.std() - INIT_STD) < 0.002


def test_init_deterministic_and_order_free(small_config):
    a = init_params(small_config, 7)
    b = init_params(small_config, 7)
    for name in a.names():
        assert np.array_equal(a[name].data, b[name].data)


# ---------------------------------------------------------------- forward

def test_attention_rows_sum_to_one(small_config, small_params, small_batch):
    out = forward(small_params, small_config, small_batch, mode="mlm",
                  record_attention=True)
    for maps in out.attention:
        assert np.abs(maps.sum(-1) - 1.0).max() < 1e-9


def test_padded_positions_get_zero_attention(small_config, small_params, small_batch):
    out = forward(small_params, small_config, small_batch, mode="mlm",
                  record_attention=True)
    pad_cols = small_batch.attn_mask[2] == 0
    for maps in out.attention:
        assert maps[2][:, :, pad_cols].max() == 0.0


def test_mlm_logits_shape(small_config, small_params, small_batch):
    out = forward(small_params, small_config, small_batch, mode="mlm")
    B, L = small_batch.ids.shape
    assert out.logits.data.shape == (B, L, small_config.vocab_size)
    assert len(out.hidden) == small_config.num_layers + 1


def test_cls_mode_requires_cls_token(small_config, small_params, small_batch):
    bad = Batch(ids=small_batch.ids.copy(), attn_mask=small_batch.attn_mask)
    bad.ids[:, 0] = FIRST_CONTENT_ID
    with pytest.raises(ContractError):
        forward(small_params, small_config, bad, mode="cls")
    out = forward(small_params, small_config, small_batch, mode="cls")
    assert out.logits.data.shape == (3, small_config.num_classes)


def test_forward_rejects_long_and_bad_ids(small_config, small_params):
    L = small_config.max_len + 1
    ids = np.full((1, L), CLS_ID)
    with pytest.raises(ShapeError):
        forward(small_params, small_config,
                Batch(ids=ids, attn_mask=np.ones_like(ids)))
    ids = np.array([[CLS_ID, small_config.vocab_size]])
    with pytest.raises(ShapeError):
        forward(small_params, small_config,
                Batch(ids=ids, attn_mask=np.ones_like(ids)))


def test_eval_forward_is_pure(small_config, small_params, small_batch):
    a = forward(small_params, small_config, small_batch, mode="mlm")
    b = forward(small_params, small_config, small_batch, mode="mlm")
    assert np.array_equal(a.logits.data, b.logits.data)


def test_train_forward_dropout_seeded(small_batch):
    cfg = ModelConfig(num_layers=2, hidden_dim=16, num_heads=2, ffn_dim=32,
                      vocab_size=12, max_len=10, dropout_prob=0.3)
    params = init_params(cfg, 1)
    a = forward(params, cfg, small_batch, train=True, rng=Rng(5))
    b = forward(params, cfg, small_batch, train=True, rng=Rng(5))
    c = forward(params, cfg, small_batch, train=True, rng=Rng(6))
    assert np.array_equal(a.logits.data, b.logits.data)
    assert not np.array_equal(a.logits.data, c.logits.data)
    with pytest.raises(ContractError):
        forward(params, cfg, small_batch, train=True)


# ---------------------------------------------------------------- MLM grad

def test_mlm_gradient_matches_finite_differences(small_config, small_params,
                                                 small_batch):
    masked = mask_tokens(small_batch, 0.4, Rng(5),
                         vocab_size=small_config.vocab_size)
    D = small_config.vocab_size

    def loss_tensor():
        out = forward(small_params, small_config, masked, mode="mlm")
        return cross_entropy(out.logits.reshape(-1, D),
                             masked.mlm_targets.reshape(-1))

    grads = gradients(loss_tensor(), small_params.values())
    r = Rng(123)
    checked = 0
    for (name, t), g in zip(small_params, grads):
        flat, gflat = t.data.reshape(-1), g.reshape(-1)
        for i in r.choice(flat.size, min(4, flat.size)):
            fd = finite_difference_at(loss_tensor, flat, int(i))
            denom = max(abs(fd), abs(gflat[i]), 1e-6)
            assert abs(fd - gflat[i]) / denom < 1e-4, (name, i)
            checked += 1
    assert checked > 100


def finite_difference_at(loss_fn, flat, i, eps=1e-5):
    old = flat[i]
    flat[i] = old + eps
    hi = loss_fn().item()
    flat[i] = old - eps
    lo = loss_fn().item()
    flat[i] = old
    return (hi - lo) / (2 * eps)


# ---------------------------------------------------------------- masking

def test_mask_ratio_zero_is_identity(small_batch):
    out = mask_tokens(small_batch, 0.0, Rng(1), vocab_size=12)
    assert np.array_equal(out.ids, small_batch.ids)
    assert np.all(out.mlm_targets == -1)


def test_specials_never_selected(small_batch):
    out = mask_tokens(small_batch, 1.0, Rng(2), vocab_size=12)
    specials = small_batch.ids < FIRST_CONTENT_ID
    assert np.all(out.mlm_targets[specials] == -1)
    assert np.all(out.ids[specials] == small_batch.ids[specials])
    # all content positions selected at ratio 1
    assert np.all(out.mlm_targets[~specials] >= 0)


def test_mask_selection_fraction_and_actions():
    rng = Rng(77)
    B, L = 100, 1002
    ids = np.full((B, L), CLS_ID)
    ids[:, 1:-1] = rng.integers(20, (B, L - 2)) + FIRST_CONTENT_ID
    batch = Batch(ids=ids, attn_mask=np.ones_like(ids))
    out = mask_tokens(batch, 0.15, Rng(8), vocab_size=25)
    content = ids >= FIRST_CONTENT_ID
    selected = out.mlm_targets >= 0
    frac = selected.sum() / content.sum()
    assert abs(frac - 0.15) < 0.005  # 100k positions
    # of selected: ~80% MASK, ~10% unchanged, ~10% random
    masked = (out.ids == MASK_ID) & selected
    unchanged = (out.ids == ids) & selected
    assert abs(masked.sum() / selected.sum() - 0.8) < 0.02
    assert 0.06 < unchanged.sum() / selected.sum() < 0.14
    # targets hold original ids
    assert np.array_equal(out.mlm_targets[selected], ids[selected])


def test_mask_random_pool_respected(small_batch):
    pool = np.array([5, 6])
    out = mask_tokens(small_batch, 1.0, Rng(3), random_pool=pool)
    randomized = (out.ids != small_batch.ids) & (out.ids != MASK_ID) \
        & (out.mlm_targets >= 0)
    assert np.all(np.isin(out.ids[randomized], pool))


# ---------------------------------------------------------------- re-embed

def test_re_embed_changes_only_token_embeddings(small_config):
    params = init_params(small_config, 1)
    fresh = re_embed(params, seed=9)
    for name in params.names():
        same = np.array_equal(fresh[name].data, params[name].data)
        if name == "tok_emb":
            assert not same
            diff_frac = np.mean(fresh[name].data != params[name].data)
            assert diff_frac >= 0.99
        else:
            assert same, name


def test_re_embed_statistics(small_config):
    cfg = ModelConfig(num_layers=1, hidden_dim=256, num_heads=4, ffn_dim=64,
                      vocab_size=260, max_len=8)
    fresh = re_embed(init_params(cfg, 1), seed=2)
    w = fresh["tok_emb"].data
    assert abs(w.mean()) < 0.005 and abs(w.std() - INIT_STD) < 0.002


def test_re_embed_positional_flag(small_config):
    params = init_params(small_config, 1)
    fresh = re_embed(params, seed=9, include_positional=True)
    assert not np.array_equal(fresh["pos_emb"].data, params["pos_emb"].data)


def test_parameter_shapes_cover_all(small_config):
    params = init_params(small_config, 0)
    shapes = parameter_shapes(small_config)
    assert list(shapes) == params.names()
    for name, t in params:
        assert t.data.shape == shapes[name]
