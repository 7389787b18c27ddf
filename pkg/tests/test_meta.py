import numpy as np
import pytest

from inrc.bitstream import CodecError
from inrc.encoding import encode, image_to_targets, make_grid
from inrc.meta import MetaInit, MetaTrainConfig, inner_loop, overfit_meta, train_init
from inrc.nn import ModelConfig, ParamSet, init_siren
from inrc.toys import toy_dataset
from inrc.training import OverfitConfig, fit

CFG = ModelConfig(width=8, hidden_layers=1, n_freqs=3)


def _unit(images):
    return [im.astype(np.float64) / 255 for im in images]


def _quick_init(images, steps=40, seed=0):
    mcfg = MetaTrainConfig(k=2, outer_lr=3e-4, alpha_init=1e-5, steps_per_val=10, val_size=3,
                           epochs=100, max_steps=steps)
    return train_init(images, mcfg, CFG, seed=seed, dataset_id="toy")


def test_meta_train_config_validation():
    with pytest.raises(ValueError):
        MetaTrainConfig(k=0)
    with pytest.raises(ValueError):
        MetaTrainConfig(lr_factor=1.5)


def test_constant_image_meta_training_reduces_inner_loss_tenfold():
    img = np.full((8, 8, 3), 0.7)
    mcfg = MetaTrainConfig(k=3, outer_lr=1e-3, alpha_init=1e-5, steps_per_val=20, val_size=1,
                           epochs=200)
    minit = train_init([img], mcfg, CFG, seed=1)
    x = encode(make_grid(8, 8).coords, CFG)
    t = image_to_targets(img)
    theta = init_siren(CFG, 1)
    before = inner_loop(theta, [ParamSet.zeros_like(theta)] * 3, CFG, x, t)[1][0]
    phi, _, _ = inner_loop(minit.theta0, minit.alphas, CFG, x, t)
    after = float(np.sum((__import__("inrc").nn.forward(phi, CFG, x) - t) ** 2) / len(t))
    assert after * 10 <= before


def test_training_is_deterministic_and_keeps_best_validation():
    data = _unit(toy_dataset(6, size=8))
    a, b = _quick_init(data), _quick_init(data)
    assert a.to_bytes() == b.to_bytes()
    assert a.val_loss == min(a.val_history)
    assert len(a.val_history) == 4
    assert a.k == 2 and a.dataset_id == "toy"


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        train_init([], MetaTrainConfig(), CFG)


def test_init_file_roundtrip_and_integrity(tmp_path):
    minit = _quick_init(_unit(toy_dataset(4, size=8)), steps=5)
    path = minit.save(tmp_path / "x.inri")
    back = MetaInit.load(path)
    assert back.content_hash == minit.content_hash
    assert back.theta0.equals(minit.theta0)
    assert all(x.equals(y) for x, y in zip(back.alphas, minit.alphas))
    assert back.config == minit.config and back.steps == minit.steps
    data = bytearray(path.read_bytes())
    data[-1] ^= 0x01
    with pytest.raises(CodecError):
        MetaInit.from_bytes(bytes(data))
    with pytest.raises(CodecError):
        MetaInit.from_bytes(bytes(data[:-8]))
    with pytest.raises(CodecError):
        MetaInit.from_bytes(b"XXXX" + bytes(data[4:]))


def test_zero_alpha_reduces_to_basic_overfit():
    img = _unit(toy_dataset(1, size=8))[0]
    theta0 = init_siren(CFG, 3).map(np.copy, role="init")
    zeros = [ParamSet.zeros_like(theta0)] * 2
    minit = MetaInit(theta0, zeros, CFG)
    ocfg = OverfitConfig(epochs=30, lr=1e-3, warmup_epochs=5)
    res = overfit_meta(img, minit, ocfg)
    x = encode(make_grid(8, 8).coords, CFG)
    basic = fit(theta0, CFG, x, image_to_targets(img), ocfg, ref=theta0)
    assert res.fit.trace == basic.trace
    assert res.inner_losses[0] == res.inner_losses[1] == basic.trace[0]


def test_delta_reconstructs_theta_star_exactly():
    data = _unit(toy_dataset(5, size=8))
    minit = _quick_init(data[:4], steps=20)
    res = overfit_meta(data[4], minit, OverfitConfig(epochs=20, warmup_epochs=5))
    assert (minit.theta0 + res.delta).equals(res.params)
    assert res.delta.role == "delta"
    assert len(res.trace) == minit.k + res.fit.epochs_run


def test_learned_inner_steps_beat_theta0_on_new_images():
    data = _unit(toy_dataset(40, size=8))
    minit = _quick_init(data[:30], steps=300)
    better = 0
    for img in data[30:]:
        res = overfit_meta(img, minit, OverfitConfig(epochs=1, warmup_epochs=1))
        better += res.mse_trace[minit.k] < res.mse_trace[0]
    assert better >= 9
