import numpy as np
import pytest

from reference import numeric_grad, rel_error
from wearnet.cnn import (SGD, Adam, AvgPool, Conv, Dense, MaxPool, Model, ModelSpec, ReLU, SoftmaxOutput,
                         TrainConfig, build_preset, checkpoint_bytes, fit, init_params, load_checkpoint,
                         model_from_bytes, prepare_batch, save_checkpoint, train_step)
from wearnet.errors import DivergenceError, FormatError, ShapeError


def kinds(spec):
    out = []
    for l in spec.layers:
        if l.kind == "conv":
            out.append(("conv", l.kh, l.kw, l.out))
        elif l.kind in ("maxpool", "avgpool"):
            out.append((l.kind, l.kh, l.kw))
        elif l.kind in ("fc", "softmax"):
            out.append((l.kind, l.out))
    return out


def test_alexnet_mod_layer_stack():
    spec = build_preset("alexnet-mod", 2560, 256, 7)
    assert spec.name == "CNN-2560-256"
    assert kinds(spec) == [
        ("conv", 5, 5, 96), ("maxpool", 2, 2), ("conv", 3, 3, 256), ("maxpool", 2, 2),
        ("conv", 3, 3, 384), ("maxpool", 2, 2), ("conv", 3, 3, 384), ("conv", 3, 3, 256),
        ("maxpool", 2, 2), ("fc", 2560), ("fc", 256), ("softmax", 7),
    ]
    spatial = [s[1] for s in spec.shape_trace() if len(s) == 3]
    assert sorted(set(spatial), reverse=True) == [64, 60, 30, 28, 14, 12, 6, 4, 2, 1]
    assert spec.shape_trace()[-1] == (7,)


def test_single_fc_name():
    spec = build_preset("alexnet-mod", 512, 0, 7)
    assert spec.name == "CNN-512"
    assert [k for k in kinds(spec) if k[0] == "fc"] == [("fc", 512)]


def test_lenet5_stack():
    spec = build_preset("lenet5", n_classes=10)
    assert kinds(spec) == [("conv", 5, 5, 6), ("avgpool", 2, 2), ("conv", 5, 5, 16), ("avgpool", 2, 2),
                           ("fc", 120), ("fc", 84), ("softmax", 10)]


def test_lenet5_wen_stack():
    spec = build_preset("lenet5-wen", 2560, 512, 7)
    assert kinds(spec) == [("conv", 5, 5, 32), ("maxpool", 2, 2), ("conv", 3, 3, 64), ("maxpool", 2, 2),
                           ("conv", 3, 3, 128), ("maxpool", 2, 2), ("conv", 3, 3, 256), ("maxpool", 2, 2),
                           ("fc", 2560), ("fc", 512), ("softmax", 7)]


def test_small_input_switches_to_same_padding():
    spec = build_preset("alexnet-mod", 640, 64, 7, M=32, width_div=4)
    assert spec.shape_trace()[1] == (24, 32, 32)
    with pytest.raises(ShapeError):
        build_preset("alexnet-mod", 64, 0, 7, M=32, same_padding=False)


def test_spec_requires_single_final_softmax():
    with pytest.raises(ValueError):
        ModelSpec("x", (1, 4, 4), (Dense(3),))
    with pytest.raises(ValueError):
        ModelSpec("x", (1, 4, 4), (SoftmaxOutput(2), SoftmaxOutput(2)))


def test_init_is_deterministic_with_zero_bias():
    spec = build_preset("alexnet-mod", 512, 0, 7)
    a, b = init_params(spec, 3), init_params(spec, 3)
    for p, q in zip(a, b):
        np.testing.assert_array_equal(p, q)
    for p in a[1::2]:
        assert not p.any()


def test_init_variance_matches_he_scaling():
    spec = build_preset("alexnet-mod", 2560, 256, 7)
    for w in init_params(spec, 0)[::2]:
        fan_in = int(np.prod(w.shape[1:])) if w.ndim == 4 else w.shape[0]
        ratio = w.var() / (2.0 / fan_in)
        assert 0.8 < ratio < 1.2, (w.shape, ratio)


def tiny_spec(pool=MaxPool):
    return ModelSpec("tiny", (1, 8, 8), (Conv(3, 3, 2, padding=1), ReLU(), pool(2, 2), Conv(3, 3, 3), ReLU(),
                                         Dense(5), ReLU(), SoftmaxOutput(3)))


@pytest.mark.parametrize("pool", [MaxPool, AvgPool])
def test_full_model_gradient(rng, pool):
    model = Model(tiny_spec(pool), seed=1)
    x = rng.uniform(size=(3, 1, 8, 8))
    y = np.array([0, 2, 1])
    _, grads = model.loss_and_grads(x, y)
    for p, g in zip(model.params, grads):
        num = numeric_grad(lambda: model.loss_and_grads(x, y)[0], p)
        assert rel_error(g, num) < 1e-5


def test_probabilities_sum_to_one(rng):
    model = Model(tiny_spec(), seed=0)
    p = model.predict_proba(rng.uniform(size=(5, 1, 8, 8)))
    assert p.shape == (5, 3)
    assert np.max(np.abs(p.sum(axis=1) - 1)) < 1e-12


def test_checkpoint_round_trip_is_byte_exact(tmp_path):
    model = Model(tiny_spec(), seed=5)
    blob = checkpoint_bytes(model)
    assert blob[:8] == b"WEARNET\x00"
    back = model_from_bytes(blob)
    assert back.spec == model.spec
    assert checkpoint_bytes(back) == blob
    save_checkpoint(model, tmp_path / "m.ckpt")
    assert (tmp_path / "m.ckpt").read_bytes() == blob
    assert checkpoint_bytes(load_checkpoint(tmp_path / "m.ckpt")) == blob


def test_checkpoint_rejects_corruption():
    blob = checkpoint_bytes(Model(tiny_spec(), seed=5))
    with pytest.raises(FormatError):
        model_from_bytes(b"NOTAMODEL" + blob[9:])
    with pytest.raises(FormatError):
        model_from_bytes(blob[:-8])


def test_zero_learning_rate_leaves_params(rng):
    x = prepare_batch(rng.integers(0, 256, size=(4, 8, 8)))
    y = np.array([0, 1, 2, 0])
    for opt_cls in (SGD, Adam):
        model = Model(tiny_spec(), seed=2)
        before = [p.copy() for p in model.params]
        train_step(model, x, y, opt_cls(model.params, lr=0.0))
        for p, q in zip(before, model.params):
            np.testing.assert_array_equal(p, q)


def test_prepare_batch_scales_to_unit_range():
    x = prepare_batch(np.array([[[0, 255], [51, 102]]], dtype=np.uint8))
    assert x.shape == (1, 1, 2, 2)
    np.testing.assert_allclose(x[0, 0], [[0, 1], [0.2, 0.4]])


def test_training_is_deterministic(rng):
    pix = rng.integers(0, 256, size=(20, 8, 8)).astype(np.uint8)
    y = rng.integers(0, 3, size=20)
    cfg = TrainConfig(batch_size=6, epochs=2)
    runs = []
    for _ in range(2):
        m = Model(tiny_spec(), seed=7)
        runs.append((fit(m, pix, y, cfg, seed=7), checkpoint_bytes(m)))
    assert runs[0] == runs[1]


def test_small_model_learns(rng):
    # two classes: bright top half vs bright bottom half
    pix = np.zeros((40, 8, 8), dtype=np.uint8)
    pix[:20, :4] = 255
    pix[20:, 4:] = 255
    y = np.repeat([0, 1], 20)
    model = Model(ModelSpec("t", (1, 8, 8), (Conv(3, 3, 4), ReLU(), Dense(8), ReLU(), SoftmaxOutput(2))), seed=0)
    losses = fit(model, pix, y, TrainConfig(lr=1e-2, batch_size=10, epochs=15), seed=0)
    assert losses[-1] < 0.05
    assert (model.predict(prepare_batch(pix)) == y).all()


def test_divergence_reports_step(rng):
    model = Model(tiny_spec(), seed=0)
    model.params[-2][:] = np.nan
    with pytest.raises(DivergenceError) as err:
        train_step(model, prepare_batch(rng.integers(0, 256, size=(2, 8, 8))), np.array([0, 1]),
                   Adam(model.params), step=4)
    assert err.value.step == 4


def test_cosine_schedule():
    cfg = TrainConfig(lr=0.1, schedule="cosine")
    assert cfg.lr_at(0, 10) == pytest.approx(0.1)
    assert cfg.lr_at(5, 10) == pytest.approx(0.05)
    assert TrainConfig(lr=0.1).lr_at(9, 10) == 0.1
