from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppgglu import errors
from ppgglu.model import ModelConfig, build, flatten_lengths, from_bytes, load, save, to_bytes
from ppgglu.tensor import Tape, Tensor, mse_loss

SMALL = ModelConfig(window_len=40, cnn_a_filters=4, cnn_b_filters=3, gru_layers=(6, 5), branch_fc=(8, 4))


def audit_count(cfg):
    """Parameter count from the layer arithmetic alone."""
    fc = lambda nin: sum(a * b + b for a, b in zip((nin,) + cfg.branch_fc[:-1], cfg.branch_fc))  # noqa: E731
    total = 0
    for k, f in ((cfg.cnn_a_kernel, cfg.cnn_a_filters), (cfg.cnn_b_kernel, cfg.cnn_b_filters)):
        total += f * k + f + 2 * f + fc(f * (cfg.window_len // 2))
    nin = 1
    for h in cfg.gru_layers:
        total += 3 * (nin * h + h * h + h)
        nin = h
    total += fc(nin)
    return total + 3 * cfg.branch_fc[-1] * cfg.head + cfg.head


def test_default_shapes_and_count():
    cfg = ModelConfig()
    assert flatten_lengths(cfg) == (4800, 4800, 32)
    m = build(cfg)
    assert m.params["a.fc0.W"].shape == (4800, 64)
    assert m.params["b.fc0.W"].shape == (4800, 64)
    assert m.params["c.fc0.W"].shape == (32, 64)
    assert m.params["head.W"].shape == (48, 1)
    assert m.parameter_count() == audit_count(cfg) == 647201


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 40).map(lambda h: 2 * h), st.integers(1, 5))
def test_shape_audit_even_lengths(W, filters):
    cfg = replace(SMALL, window_len=W, cnn_a_filters=filters)
    m = build(cfg)
    assert m.params["a.fc0.W"].shape[0] == filters * W // 2 == flatten_lengths(cfg)[0]
    assert m.parameter_count() == audit_count(cfg)
    out = m.forward(np.random.default_rng(0).random((3, W)), "train")
    assert out.shape == (3,)


def test_init_deterministic_and_zero_biases():
    a, b = build(ModelConfig(seed=5)), build(ModelConfig(seed=5))
    assert all(np.array_equal(a.params[k].data, b.params[k].data) for k in a.params)
    c = build(ModelConfig(seed=6))
    assert not np.array_equal(a.params["a.conv.K"].data, c.params["a.conv.K"].data)
    for name, p in a.params.items():
        if name.endswith(".b") or name.endswith("beta"):
            assert not p.data.any(), name


def test_glorot_limits():
    m = build(ModelConfig())
    W = m.params["a.fc0.W"].data
    lim = np.sqrt(6 / (4800 + 64))
    assert np.abs(W).max() <= lim and np.abs(W).max() > 0.95 * lim


def test_forward_batch_and_duplicates():
    m = build(SMALL)
    X = np.random.default_rng(1).random((4, 40))
    out = m.forward(X).data
    assert out.shape == (4,) and np.all(np.isfinite(out))
    dup = m.forward(np.stack([X[0], X[0]])).data
    assert dup[0] == dup[1]


def test_permutation_equivariance_eval():
    m = build(ModelConfig(seed=2))
    X = np.random.default_rng(2).random((6, 300))
    perm = np.array([3, 0, 5, 1, 4, 2])
    assert np.array_equal(m.predict(X)[perm], m.predict(X[perm]))


def test_shape_mismatch():
    with pytest.raises(errors.ShapeMismatch):
        build(SMALL).forward(np.zeros((2, 41)))


@pytest.mark.parametrize("kw", [dict(cnn_a_kernel=4), dict(cnn_b_filters=0), dict(gru_layers=()),
                                dict(branch_fc=(8, 0))])
def test_invalid_config(kw):
    with pytest.raises(errors.InvalidConfig):
        build(replace(SMALL, **kw))


def test_config_text_round_trip():
    cfg = replace(SMALL, seed=77)
    assert ModelConfig.from_text(cfg.to_text()) == cfg


def test_every_branch_gets_gradient():
    m = build(replace(SMALL, seed=3))
    X = np.random.default_rng(3).random((5, 40))
    with Tape() as tape:
        loss = mse_loss(m.forward(X, "train"), Tensor(np.full(5, 120.0)))
    tape.backward(loss)
    for branch in ("a.", "b.", "c.", "head."):
        norm = sum(np.abs(p.grad).sum() for k, p in m.params.items() if k.startswith(branch))
        assert norm > 0, branch
    # a conv bias feeding batch norm is cancelled by the mean subtraction
    assert np.allclose(m.params["a.conv.b"].grad, 0, atol=1e-10)


# -- model file --------------------------------------------------------------

def trained_ish(seed=4):
    m = build(replace(SMALL, seed=seed))
    X = np.random.default_rng(seed).random((8, 40))
    m.forward(X, "train")  # move batch-norm running stats off their defaults
    return m, X


def test_save_load_bit_identical(tmp_path):
    m, X = trained_ish()
    save(m, tmp_path / "m.bin")
    back = load(tmp_path / "m.bin")
    assert back.config == m.config
    assert np.array_equal(back.predict(X), m.predict(X))
    assert all(np.array_equal(back.params[k].data, m.params[k].data) for k in m.params)


def test_file_layout():
    m, _ = trained_ish()
    blob = to_bytes(m)
    assert blob[:8] == b"PPGGLU01"
    n = int.from_bytes(blob[8:16], "little")
    assert blob[16:16 + n].decode("utf-8") == m.config.to_text()
    n_floats = m.parameter_count() + sum(st.mean.size + st.var.size for st in m.bn.values())
    assert len(blob) == 16 + n + 8 * n_floats + 8


def test_truncated_file():
    m, _ = trained_ish()
    blob = to_bytes(m)
    for cut in (len(blob) - 1, len(blob) // 2, 20):
        with pytest.raises(errors.ChecksumMismatch):
            from_bytes(blob[:cut])


def test_flipped_byte():
    m, _ = trained_ish()
    blob = bytearray(to_bytes(m))
    blob[len(blob) // 2] ^= 0x01
    with pytest.raises(errors.ChecksumMismatch):
        from_bytes(bytes(blob))


def test_version_bump():
    m, _ = trained_ish()
    blob = bytearray(to_bytes(m))
    blob[7] = ord("2")
    with pytest.raises(errors.FormatVersionMismatch):
        from_bytes(bytes(blob))


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load(tmp_path / "nope.bin")
