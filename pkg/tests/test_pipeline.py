import numpy as np
import pytest

from inrc.bitstream import MissingInitializationError, parse_container
from inrc.imageio import (ImageReadError, box_resize, load_image, read_ppm, save_image, to_uint8,
                          write_ppm)
from inrc.meta import MetaTrainConfig, train_init
from inrc.nn import ModelConfig
from inrc.pipeline import EncodeConfig, decode_image, deterministic_report, encode_image, psnr_of
from inrc.registry import ENV_VAR, InitRegistry
from inrc.toys import toy_dataset
from inrc.training import OverfitConfig, bitrate

TINY = ModelConfig(width=8, hidden_layers=1, n_freqs=3)


def _ecfg(**kw):
    base = dict(model=TINY, overfit=OverfitConfig(epochs=60, lr=1e-3), adaround_iters=50,
                qat_epochs=5)
    base.update(kw)
    return EncodeConfig(**base)


@pytest.fixture(scope="module")
def toy():
    return toy_dataset(1, size=12, offset=77)[0]


@pytest.fixture(scope="module")
def encoded(toy):
    return encode_image(toy, _ecfg())


def test_ppm_roundtrip_and_errors(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (5, 7, 3), dtype=np.uint8)
    assert np.array_equal(read_ppm(write_ppm(img)), img)
    assert np.array_equal(read_ppm(b"P6\n# c\n7 5\n255\n" + img.tobytes()), img)
    with pytest.raises(ImageReadError):
        read_ppm(b"P6\n7 5\n65535\n" + img.tobytes())
    with pytest.raises(ImageReadError):
        read_ppm(write_ppm(img)[:-1])
    (tmp_path / "x.txt").write_text("hello")
    with pytest.raises(ImageReadError):
        load_image(tmp_path / "x.txt")
    with pytest.raises(ImageReadError):
        load_image(tmp_path / "missing.ppm")


def test_png_roundtrip(tmp_path):
    pytest.importorskip("PIL")
    img = np.random.default_rng(1).integers(0, 256, (4, 6, 3), dtype=np.uint8)
    assert np.array_equal(load_image(save_image(tmp_path / "a.png", img)), img)


def test_box_resize_and_uint8():
    img = np.arange(5 * 4 * 3, dtype=np.uint8).reshape(5, 4, 3)
    small = box_resize(img, 2)
    assert small.shape == (2, 2, 3)
    assert small[0, 0, 0] == np.rint(img[:2, :2, 0].mean())
    assert to_uint8(np.array([-0.1, 0.5, 1.2])).tolist() == [0, 128, 255]
    with pytest.raises(ValueError):
        box_resize(img, 9)


def test_report_is_honest(toy, encoded):
    r = encoded.report
    assert r["bytes"] == len(encoded.data)
    assert r["bpp"] == bitrate(8 * len(encoded.data), 12, 12)
    assert r["bpp"] == 8 * len(encoded.data) / (12 * 12)
    assert psnr_of(decode_image(encoded.data), toy) == r["psnr"]
    assert r["bits"] == 8 and r["mode"] == "basic"
    assert set(r["stage_mse"]) == {"float", "nearest", "adaround", "adaround+qat"}


def test_encode_is_deterministic(toy, encoded):
    again = encode_image(toy, _ecfg())
    assert again.data == encoded.data
    assert deterministic_report(again.report) == deterministic_report(encoded.report)


def test_decode_twice_and_at_higher_resolution(encoded):
    a, b = decode_image(encoded.data), decode_image(encoded.data)
    assert np.array_equal(a, b) and a.shape == (12, 12, 3)
    big = decode_image(encoded.data, width=24, height=24)
    assert big.shape == (24, 24, 3)
    # the 2x grid keeps the corner coordinates
    assert np.array_equal(big[0, 0], a[0, 0]) and np.array_equal(big[-1, -1], a[-1, -1])


def test_quantizer_stages_are_selectable(toy):
    r = encode_image(toy, _ecfg(quantizer="nearest")).report
    assert set(r["stage_mse"]) == {"float", "nearest"}
    with pytest.raises(ValueError):
        _ecfg(quantizer="magic")
    with pytest.raises(TypeError):
        encode_image(toy.astype(np.float64), _ecfg())


def test_meta_mode_via_registry(tmp_path, monkeypatch, toy):
    data = [im / 255.0 for im in toy_dataset(6, size=12)]
    minit = train_init(data, MetaTrainConfig(k=2, steps_per_val=5, val_size=2, max_steps=10,
                                             alpha_init=1e-5, outer_lr=1e-4), TINY, seed=0)
    res = encode_image(toy, _ecfg(overfit=OverfitConfig(epochs=30, warmup_epochs=10)), minit)
    assert res.report["bits"] == 7 and res.report["mode"] == "meta"
    c = parse_container(res.data)
    assert c.delta and c.init_hash == minit.content_hash

    monkeypatch.setenv(ENV_VAR, str(tmp_path / "reg"))
    reg = InitRegistry()
    with pytest.raises(MissingInitializationError):
        decode_image(res.data, reg)
    with pytest.raises(MissingInitializationError):
        decode_image(res.data)
    reg.add(minit)
    assert minit.content_hash in reg
    assert psnr_of(decode_image(res.data, InitRegistry()), toy) == res.report["psnr"]
    assert psnr_of(decode_image(res.data, minit), toy) == res.report["psnr"]


@pytest.mark.slow
def test_high_capacity_model_reaches_40db():
    img = np.random.default_rng(0).integers(0, 256, (16, 16, 3), dtype=np.uint8)
    ecfg = EncodeConfig(ModelConfig(width=64), OverfitConfig(epochs=25000), bits=12)
    res = encode_image(img, ecfg)
    assert psnr_of(decode_image(res.data), img) > 40
