import math

import numpy as np
import pytest

from inrc.nn import DivergedError, ModelConfig, init_siren
from inrc.training import (OverfitConfig, PlateauSchedule, bitrate, fit, image_mse, overfit,
                           psnr)


def test_psnr_examples():
    assert psnr(1.0) == 0.0
    assert psnr(0.01) == pytest.approx(20.0)
    assert psnr(10 ** -2.443) == pytest.approx(24.43)
    assert psnr(0.0) == math.inf
    with pytest.raises(ValueError):
        psnr(-1.0)


def test_bitrate_examples():
    assert bitrate(393216, 768, 512) == 1.0
    assert bitrate(0, 768, 512) == 0.0
    assert bitrate(32600, 768, 512) == pytest.approx(0.0829, rel=1e-3)
    with pytest.raises(ValueError):
        bitrate(1, 0, 5)


def test_image_mse_is_channel_mean():
    a = np.zeros((2, 2, 3))
    b = np.zeros((2, 2, 3))
    b[..., 0] = 1.0
    assert image_mse(a, b) == pytest.approx(1 / 3)


def test_overfit_config_validation():
    with pytest.raises(ValueError):
        OverfitConfig(epochs=10, warmup_epochs=11)
    with pytest.raises(ValueError):
        OverfitConfig(plateau_factor=1.0)


def test_constant_image_fits_quickly():
    img = np.full((8, 8, 3), 0.4)
    cfg = ModelConfig(width=8, hidden_layers=1, n_freqs=2)
    res = overfit(img, cfg, init_siren(cfg, 0), OverfitConfig(epochs=200, lr=1e-2, lam=0))
    assert res.best_loss / 3 < 1e-5


def _toy():
    g = np.random.default_rng(0)
    return g.random((6, 6, 3)), ModelConfig(width=8, hidden_layers=1, n_freqs=3)


def test_best_checkpoint_is_minimum_of_trace():
    img, cfg = _toy()
    res = overfit(img, cfg, init_siren(cfg, 0), OverfitConfig(epochs=150, lr=5e-3))
    assert res.best_loss == min(res.trace)
    assert res.trace[res.best_epoch] == res.best_loss
    running = np.minimum.accumulate(res.trace)
    assert np.all(np.diff(running) <= 0)


def test_ties_keep_earlier_epoch():
    img, cfg = _toy()
    # lr = 0: every epoch has the same loss, so the first one must be kept
    res = overfit(img, cfg, init_siren(cfg, 0), OverfitConfig(epochs=20, lr=0.0))
    assert res.best_epoch == 0


def test_early_stop():
    img, cfg = _toy()
    res = overfit(img, cfg, init_siren(cfg, 0), OverfitConfig(epochs=100, lr=0.0, early_stop=7))
    assert res.epochs_run == 8


def test_mse_trace_excludes_regularizer():
    img, cfg = _toy()
    ocfg = OverfitConfig(epochs=5, lr=1e-3, lam=1e-3)
    res = overfit(img, cfg, init_siren(cfg, 0), ocfg)
    res0 = overfit(img, cfg, init_siren(cfg, 0), OverfitConfig(epochs=1, lr=1e-3, lam=0))
    assert res.mse_trace[0] == pytest.approx(res0.trace[0], rel=1e-12)
    assert res.trace[0] > res.mse_trace[0]


def test_warmup_ramps_learning_rate():
    img, cfg = _toy()
    seen = []
    init = init_siren(cfg, 0)
    ocfg = OverfitConfig(epochs=3, lr=1e-2, warmup_epochs=3)
    fit_res = overfit(img, cfg, init, ocfg, callback=lambda e, p, l: seen.append(p))
    steps = [np.abs((b - a).flat()).max() for a, b in zip(seen, seen[1:])]
    # Adam's first steps have magnitude ~lr; the ramp gives lr/3, 2lr/3
    assert steps[0] == pytest.approx(1e-2 / 3, rel=1e-3)
    assert steps[1] > steps[0]
    assert fit_res.epochs_run == 3


def test_plateau_schedule():
    s = PlateauSchedule(1.0, patience=2, factor=0.5)
    lrs = [s.step(x) for x in [5, 4, 4, 4, 4, 4, 3]]
    assert lrs == [1.0, 1.0, 1.0, 0.5, 0.5, 0.25, 0.25]
    assert s.drops == 2


def test_plateau_floor():
    s = PlateauSchedule(2e-8, patience=1, factor=0.5)
    for _ in range(5):
        s.step(1.0)
    assert s.lr >= 1e-8


def test_doubling_patience_never_adds_drops():
    trace = np.abs(np.random.default_rng(0).normal(size=400)).tolist()
    for p in (1, 3, 10):
        a, b = PlateauSchedule(1.0, p, 0.5), PlateauSchedule(1.0, 2 * p, 0.5)
        for x in trace:
            a.step(x)
            b.step(x)
        assert b.drops <= a.drops


def test_divergence_reports_epoch():
    img, cfg = _toy()
    with pytest.raises(DivergedError) as exc:
        fit(init_siren(cfg, 0).map(lambda a: a * np.nan), cfg,
            np.zeros((36, cfg.enc_dim)), np.zeros((36, 3)), OverfitConfig(epochs=5))
    assert exc.value.step == 0
