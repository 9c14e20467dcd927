import numpy as np
import pytest

from xferlab.errors import CheckpointError
from xferlab.model import (
    ModelConfig,
    adapt_to_config,
    check_compatible,
    forward,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from xferlab.numerics import Rng


def test_round_trip_bitwise(tmp_path, small_config, small_params):
    path = tmp_path / "m.ck"
    manifest = save_checkpoint(small_params, small_config, path,
                               vocab_sha256="abc", provenance={"kind": "test"})
    loaded, m2 = load_checkpoint(path)
    assert m2["vocab_sha256"] == "abc"
    assert m2["provenance"] == {"kind": "test"}
    assert m2["config"] == small_config.to_dict()
    for name in small_params.names():
        assert np.array_equal(loaded[name].data, small_params[name].data)

    # save -> load -> save produces byte-identical files
    path2 = tmp_path / "m2.ck"
    save_checkpoint(loaded, ModelConfig.from_dict(m2["config"]), path2,
                    vocab_sha256=m2["vocab_sha256"], provenance=m2["provenance"])
    assert path.read_bytes() == path2.read_bytes()


def test_forward_reproduced_after_reload(tmp_path, small_config, small_params,
                                         small_batch):
    before = forward(small_params, small_config, small_batch).logits.data
    path = tmp_path / "m.ck"
    save_checkpoint(small_params, small_config, path)
    loaded, manifest = load_checkpoint(path)
    after = forward(loaded, small_config, small_batch).logits.data
    assert np.array_equal(before, after)


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.ck"
    p.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(p)


def test_truncated_file(tmp_path, small_config, small_params):
    p = tmp_path / "m.ck"
    save_checkpoint(small_params, small_config, p)
    blob = p.read_bytes()
    p.write_bytes(blob[:-100])
    with pytest.raises(CheckpointError):
        load_checkpoint(p)


def test_corrupt_manifest(tmp_path, small_config, small_params):
    p = tmp_path / "m.ck"
    save_checkpoint(small_params, small_config, p)
    blob = bytearray(p.read_bytes())
    blob[20] ^= 0xFF  # inside the JSON manifest
    p.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError):
        load_checkpoint(p)


def test_non_finite_payload_rejected(tmp_path, small_config, small_params):
    p = tmp_path / "m.ck"
    small_params["mlm.b"].data[0] = np.nan
    save_checkpoint(small_params, small_config, p)
    with pytest.raises(CheckpointError, match="non-finite"):
        load_checkpoint(p)


def test_config_compatibility(tmp_path, small_config, small_params):
    p = tmp_path / "m.ck"
    save_checkpoint(small_params, small_config, p)
    _, manifest = load_checkpoint(p)
    other = ModelConfig(num_layers=3, hidden_dim=16, num_heads=2, ffn_dim=32,
                        vocab_size=12, max_len=10)
    with pytest.raises(CheckpointError, match="mismatch"):
        check_compatible(manifest, other)
    # classifier head may differ
    cls_differs = ModelConfig(**{**small_config.to_dict(), "num_classes": 5})
    check_compatible(manifest, cls_differs)


def test_adapt_reinitializes_head_only(tmp_path, small_config, small_params):
    p = tmp_path / "m.ck"
    save_checkpoint(small_params, small_config, p)
    loaded, manifest = load_checkpoint(p)
    target = ModelConfig(**{**small_config.to_dict(), "num_classes": 4})
    adapted = adapt_to_config(loaded, manifest, target, head_seed=3)
    assert adapted["cls.w"].data.shape == (16, 4)
    for name in adapted.names():
        if not name.startswith("cls."):
            assert np.array_equal(adapted[name].data, small_params[name].data)
