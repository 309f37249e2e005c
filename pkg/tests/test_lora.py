"""
Unit tests for low-rank adapter math, training and checkpoints.
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.lora import (
    AdamState,
    AdapterPair,
    DenseLayer,
    TrainConfig,
    adamw_step,
    decode_binary,
    decode_json,
    encode_binary,
    encode_json,
    init_adapters,
    load_checkpoint,
    lora_forward,
    lora_merge,
    loss_and_grads,
    make_base_layer,
    make_toy_dataset,
    nll_loss,
    param_counts,
    range_warnings,
    save_checkpoint,
    train_adapters,
)
from app.services.errors import DataError, IndexOutOfRange, ShapeMismatch, UsageError


def test_merge_matches_forward():
    """Merged weights reproduce the adapted forward pass."""
    rng = np.random.default_rng(42)
    for trial in range(100):
        d, k = (int(n) for n in rng.integers(1, 17, size=2))
        r = int(rng.integers(1, min(d, k, 4) + 1))
        layer = DenseLayer(W=rng.normal(size=(d, k)))
        alpha = float(rng.uniform(1, 32))
        adapter = init_adapters(
            d, k, r, alpha=alpha, init="gauss", std=0.5, seed=trial
        )
        x = rng.normal(size=k)
        merged = lora_merge(layer, adapter)
        difference = lora_forward(layer, adapter, x) - merged.forward(x)
        assert np.max(np.abs(difference)) <= 1e-9


def test_zero_init_leaves_layer_unchanged():
    layer = make_base_layer(6, 5)
    adapter = init_adapters(6, 5, 2, alpha=16.0)
    x = np.arange(5, dtype=float)
    assert np.array_equal(lora_forward(layer, adapter, x), layer.forward(x))
    assert not np.any(adapter.B)


def test_merge_does_not_touch_base_layer():
    layer = make_base_layer(4, 4)
    before = layer.W.copy()
    lora_merge(layer, init_adapters(4, 4, 2, alpha=8.0, init="gauss"))
    assert np.array_equal(layer.W, before)
    with pytest.raises(ValueError):
        layer.W[0, 0] = 1.0


def test_shape_errors():
    layer = make_base_layer(4, 3)
    with pytest.raises(ShapeMismatch):
        lora_forward(layer, init_adapters(3, 4, 2, alpha=8.0), np.ones(3))
    with pytest.raises(ShapeMismatch):
        lora_forward(layer, init_adapters(4, 3, 2, alpha=8.0), np.ones(4))
    with pytest.raises(ShapeMismatch):
        AdapterPair(A=np.ones((4, 2)), B=np.ones((3, 3)), alpha=1.0)
    with pytest.raises(UsageError):
        init_adapters(4, 3, 4, alpha=8.0)
    with pytest.raises(ValidationError):
        DenseLayer(W=[[1.0, float("nan")]])


def test_nll_of_uniform_logits():
    n, vocab = 5, 7
    total = nll_loss(np.zeros((n, vocab)), [0, 1, 2, 3, 6])
    assert abs(total - n * math.log(vocab)) <= 1e-12
    mean = nll_loss(np.zeros((n, vocab)), [0] * n, reduction="mean")
    assert mean == pytest.approx(math.log(vocab))
    assert nll_loss(np.zeros((0, vocab)), []) == 0.0


def test_nll_errors():
    with pytest.raises(IndexOutOfRange):
        nll_loss(np.zeros((2, 3)), [0, 3])
    with pytest.raises(IndexOutOfRange):
        nll_loss(np.zeros((1, 3)), [-1])
    with pytest.raises(ShapeMismatch):
        nll_loss(np.zeros((2, 3)), [0])


def test_gradients_match_finite_differences():
    layer = make_base_layer(4, 3, seed=1, scale=0.5)
    adapter = init_adapters(4, 3, 2, alpha=4.0, init="gauss", std=0.5, seed=2)
    rng = np.random.default_rng(3)
    inputs = rng.normal(size=(6, 3))
    targets = [0, 1, 2, 3, 1, 0]
    _, grads = loss_and_grads(layer, adapter, inputs, targets)

    def loss_at(A, B):
        return loss_and_grads(layer, adapter.replace(A, B), inputs, targets)[0]

    h = 1e-6
    for name in ("A", "B"):
        base = {"A": np.array(adapter.A), "B": np.array(adapter.B)}
        numeric = np.zeros_like(base[name])
        for index in np.ndindex(numeric.shape):
            plus = {key: value.copy() for key, value in base.items()}
            minus = {key: value.copy() for key, value in base.items()}
            plus[name][index] += h
            minus[name][index] -= h
            delta = loss_at(plus["A"], plus["B"]) - loss_at(minus["A"], minus["B"])
            numeric[index] = delta / (2 * h)
        scale = max(np.linalg.norm(numeric), np.linalg.norm(grads[name]))
        error = np.linalg.norm(numeric - grads[name]) / scale
        assert error <= 1e-4, name


def test_adamw_first_step_moves_by_learning_rate():
    params = {"A": np.zeros((2, 2))}
    grads = {"A": np.array([[1.0, -2.0], [0.5, 0.0]])}
    cfg = TrainConfig(learning_rate=0.1, weight_decay=0.0)
    new_params, state = adamw_step(params, grads, AdamState(), cfg)
    assert state.step == 1
    assert new_params["A"] == pytest.approx(
        np.array([[-0.1, 0.1], [-0.1, 0.0]]), abs=1e-6
    )
    assert not np.any(params["A"])


def test_adamw_rejects_mismatched_gradients():
    cfg = TrainConfig()
    with pytest.raises(ShapeMismatch):
        adamw_step({"A": np.zeros((2, 2))}, {"B": np.zeros((2, 2))}, AdamState(), cfg)
    with pytest.raises(ShapeMismatch):
        adamw_step({"A": np.zeros((2, 2))}, {"A": np.zeros((2, 3))}, AdamState(), cfg)


def test_toy_dataset_targets():
    data = make_toy_dataset(8, 8, 4, seed=0)
    tokens = np.argmax(data.inputs, axis=1)
    assert len(data) == 32
    assert list(data.targets) == [int(t) // 2 for t in tokens]
    inputs, targets = data.batch(5, 8)
    assert inputs.shape == (8, 8)
    assert len(targets) == 8


def test_training_halves_loss_and_keeps_base_frozen():
    layer = make_base_layer(8, 8, seed=0)
    frozen = layer.W.copy()
    data = make_toy_dataset(8, 8, 4, seed=0)
    adapter = init_adapters(8, 8, 4, alpha=16.0, seed=0)
    cfg = TrainConfig(learning_rate=0.05, steps=200, batch_size=8)

    trained, losses = train_adapters(layer, data, cfg, adapter)
    assert len(losses) == 200
    assert min(losses) < 0.5 * losses[0]
    assert np.array_equal(layer.W, frozen)
    assert trained.alpha == adapter.alpha
    assert not np.any(adapter.B)


def test_zero_steps_returns_initial_adapter():
    layer = make_base_layer(4, 4)
    adapter = init_adapters(4, 4, 2, alpha=8.0)
    trained, losses = train_adapters(
        layer, make_toy_dataset(4, 4, 2), TrainConfig(steps=0), adapter
    )
    assert losses == []
    assert trained is adapter


def test_param_counts():
    counts = param_counts(1024, 1024, 8)
    assert (counts.full, counts.lora) == (1048576, 16384)
    assert param_counts(8192, 8192, 8).ratio == pytest.approx(0.00195, abs=1e-5)
    assert counts.to_json_dict()["reduction"] == pytest.approx(1 - 16384 / 1048576)
    with pytest.raises(UsageError):
        param_counts(0, 4, 1)


def test_range_warnings():
    assert range_warnings(8, 16.0) == []
    assert len(range_warnings(2, 64.0)) == 2
    assert "rank 32" in range_warnings(32, 16.0)[0]


def test_checkpoint_formats(tmp_path):
    adapter = init_adapters(5, 3, 2, alpha=12.0, init="gauss", seed=7)
    for fmt in ("json", "binary"):
        path = tmp_path / f"adapter.{fmt}"
        save_checkpoint(adapter, path, fmt)
        loaded = load_checkpoint(path)
        assert np.array_equal(loaded.A, adapter.A)
        assert np.array_equal(loaded.B, adapter.B)
        assert loaded.alpha == 12.0
    assert len(encode_binary(adapter)) == 24 + 8 * 2 * (5 + 3)


def test_binary_checkpoint_errors(tmp_path):
    payload = encode_binary(init_adapters(4, 4, 2, alpha=8.0))
    with pytest.raises(DataError):
        decode_binary(payload[:-8])
    with pytest.raises(DataError):
        decode_binary(b"LOR")
    with pytest.raises(DataError, match="magic"):
        decode_binary(b"XXXX" + payload[4:])
    path = tmp_path / "garbage.bin"
    path.write_bytes(b"\xff\xfe" + payload)
    with pytest.raises(DataError):
        load_checkpoint(path)
    with pytest.raises(DataError):
        load_checkpoint(tmp_path / "absent.bin")


def test_json_checkpoint_errors():
    with pytest.raises(DataError) as excinfo:
        decode_json("{\n  \"d\": 2,\n")
    assert excinfo.value.line is not None
    text = encode_json(init_adapters(3, 3, 1, alpha=8.0))
    with pytest.raises(DataError, match="malformed"):
        decode_json(text.replace('"alpha"', '"beta"'))
