import csv
import json

import numpy as np
import pytest

from inrc.cli import main
from inrc.imageio import load_image, save_image
from inrc.pipeline import psnr_of
from inrc.sdf import icosphere, save_mesh
from inrc.toys import toy_dataset

FAST = ["--width", "8", "--hidden-layers", "1", "--n-freqs", "2", "--epochs", "40",
        "--adaround-iters", "20", "--qat-epochs", "3"]


@pytest.fixture
def images(tmp_path):
    d = tmp_path / "imgs"
    d.mkdir()
    for i, im in enumerate(toy_dataset(3, size=8)):
        save_image(d / f"im{i}.ppm", im)
    return d


def test_encode_decode_roundtrip(tmp_path, images):
    out = tmp_path / "a.inrc"
    assert main(["encode", str(images / "im0.ppm"), "-o", str(out), *FAST]) == 0
    report = json.loads((tmp_path / "a.inrc.json").read_text())
    assert report["bytes"] == out.stat().st_size
    assert report["bpp"] == 8 * out.stat().st_size / 64
    assert report["flags"]["width"] == 8 and report["config"]["overfit"]["lam"] == 1e-5
    dec = tmp_path / "a.ppm"
    assert main(["decode", str(out), "-o", str(dec)]) == 0
    assert psnr_of(load_image(dec), load_image(images / "im0.ppm")) == report["psnr"]
    dec2 = tmp_path / "b.ppm"
    main(["decode", str(out), "-o", str(dec2)])
    assert dec.read_bytes() == dec2.read_bytes()
    main(["decode", str(out), "-o", str(dec2), "--out-width", "16", "--out-height", "16"])
    assert load_image(dec2).shape == (16, 16, 3)


def test_seeded_reencode_is_bit_identical(tmp_path, images):
    a, b = tmp_path / "a.inrc", tmp_path / "b.inrc"
    for out in (a, b):
        main(["encode", str(images / "im1.ppm"), "-o", str(out), *FAST])
    assert a.read_bytes() == b.read_bytes()


def test_errors_map_to_exit_codes(tmp_path, images, capsys):
    bad = tmp_path / "bad.inrc"
    bad.write_bytes(b"nope")
    assert main(["decode", str(bad), "-o", str(tmp_path / "x.ppm")]) == 2
    assert main(["encode", str(tmp_path / "missing.ppm"), "-o", str(bad)]) != 0
    assert "error" in capsys.readouterr().err
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["sweep", str(empty), "--out-dir", str(tmp_path / "s")]) != 0


def test_sweep_rows_and_eval_merge(tmp_path, images):
    out = tmp_path / "sweep"
    args = ["sweep", str(images), "--out-dir", str(out), "--widths", "4,6,8,10", *FAST[2:]]
    assert main(args) == 0
    rows = list(csv.DictReader((out / "rd.csv").open()))
    assert len(rows) == 12
    assert list(rows[0]) == ["instance", "method", "width", "b", "bpp", "psnr"]
    assert (out / "rd.png").stat().st_size > 0 and len(list(out.glob("*.inrc"))) == 12

    base = tmp_path / "jpeg.csv"
    base.write_text("instance,method,bpp,psnr\nim0,jpeg,0.5,20.0\nim1,jpeg,1.0,25.0\n")
    ev = tmp_path / "eval"
    assert main(["eval", str(out / "rd.csv"), "--baseline", str(base), "--out-dir", str(ev)]) == 0
    merged = list(csv.DictReader((ev / "rd_merged.csv").open()))
    assert len(merged) == 14 and {r["method"] for r in merged} == {"basic", "jpeg"}
    summary = json.loads((ev / "summary.json").read_text())
    assert summary["methods"]["jpeg"]["n"] == 2
    assert (ev / "rd.png").stat().st_size > 0


def test_meta_train_then_meta_encode(tmp_path, images, monkeypatch):
    monkeypatch.setenv("INRC_INIT_DIR", str(tmp_path / "registry"))
    init = tmp_path / "init.inri"
    assert main(["meta-train", str(images), "-o", str(init), "--width", "8", "--hidden-layers",
                 "1", "--n-freqs", "2", "--max-steps", "4", "--steps-per-val", "2",
                 "--val-size", "2", "--register"]) == 0
    info = json.loads(init.with_suffix(".json").read_text())
    assert (tmp_path / "registry" / f"{info['hash']}.inri").is_file()
    out = tmp_path / "m.inrc"
    assert main(["encode", str(images / "im2.ppm"), "-o", str(out), "--init", str(init),
                 "--epochs", "20", "--adaround-iters", "5", "--qat-epochs", "2"]) == 0
    report = json.loads((tmp_path / "m.inrc.json").read_text())
    assert report["bits"] == 7 and report["config"]["overfit"]["warmup_epochs"] == 20
    assert main(["decode", str(out), "-o", str(tmp_path / "m.ppm")]) == 0
    # a width that disagrees with the initialization is refused
    assert main(["encode", str(images / "im2.ppm"), "-o", str(out), "--init", str(init),
                 "--width", "16", "--epochs", "2"]) != 0
    monkeypatch.setenv("INRC_INIT_DIR", str(tmp_path / "elsewhere"))
    assert main(["decode", str(out), "-o", str(tmp_path / "m.ppm")]) == 5


def test_resize(tmp_path, images):
    out = tmp_path / "small.ppm"
    assert main(["resize", str(images / "im0.ppm"), "-o", str(out), "--factor", "2"]) == 0
    assert load_image(out).shape == (4, 4, 3)


def test_sdf_commands(tmp_path):
    mesh = tmp_path / "sphere.obj"
    save_mesh(mesh, icosphere(2))
    out = tmp_path / "s.inrc"
    assert main(["sdf-encode", str(mesh), "-o", str(out), "--n", "2000", "--width", "8",
                 "--hidden-layers", "1", "--n-freqs", "2", "--epochs", "5", "--batch", "500",
                 "--adaround-iters", "5", "--qat-epochs", "1", "--eval-resolution", "24"]) == 0
    report = json.loads((tmp_path / "s.inrc.json").read_text())
    assert report["bytes"] == out.stat().st_size and np.isfinite(report["chamfer"])
    dec = tmp_path / "out.obj"
    assert main(["sdf-decode", str(out), "-o", str(dec), "-R", "24"]) == 0
    assert dec.read_text().startswith(("v ", "#"))
