"""``inrc`` command-line interface."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bitstream import CodecError
from .imageio import ImageReadError, box_resize, load_image, save_image
from .meta import MetaInit, MetaTrainConfig, train_init
from .nn import ConfigError, DivergedError, ModelConfig
from .pipeline import EncodeConfig, decode_image, encode_image
from .plotting import RDPoint, read_rd_csv, rd_plot, write_rd_csv
from .registry import ENV_VAR, InitRegistry
from .training import OverfitConfig

log = logging.getLogger("inrc")

IMAGE_SUFFIXES = (".ppm", ".png")
MODEL_FLAGS = ("hidden_layers", "width", "activation", "omega", "encoding", "n_freqs", "sigma",
               "enc_seed")


class UsageError(ValueError):
    code = 1


# ---------------------------------------------------------------- arguments

def _add_model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model (defaults: N=3, M=32, sine, positional L=16, sigma=1.4)")
    g.add_argument("--hidden-layers", type=int, help="M->M layers N (default 3)")
    g.add_argument("--width", type=int, help="hidden width M (default 32)")
    g.add_argument("--activation", choices=("sine", "relu"))
    g.add_argument("--omega", type=float, help="sine frequency factor (default 30)")
    g.add_argument("--encoding", choices=("none", "positional", "gaussian"))
    g.add_argument("--n-freqs", type=int, help="encoding frequencies L (default 16)")
    g.add_argument("--sigma", type=float, help="encoding scale (default 1.4)")
    g.add_argument("--enc-seed", type=int, help="seed of Gaussian frequencies (default 0)")


def _add_encode_flags(p: argparse.ArgumentParser) -> None:
    _add_model_flags(p)
    g = p.add_argument_group("overfitting")
    g.add_argument("--epochs", type=int, default=25000)
    g.add_argument("--lr", type=float, default=5e-4)
    g.add_argument("--lam", type=float, default=1e-5, help="L1 weight lambda")
    g.add_argument("--patience", type=int, default=500, help="plateau patience")
    g.add_argument("--plateau-factor", type=float, default=0.5)
    g.add_argument("--early-stop", type=int, default=5000)
    g.add_argument("--warmup", type=int, help="warmup epochs (default 0 basic, 100 meta)")
    g = p.add_argument_group("quantization")
    g.add_argument("--bits", type=int, help="bit width b (default 8 basic, 7 meta)")
    g.add_argument("--quantizer", choices=("nearest", "adaround", "adaround+qat"),
                   default="adaround+qat")
    g.add_argument("--adaround-iters", type=int, default=1000)
    g.add_argument("--adaround-reg", type=float, default=1e-4)
    g.add_argument("--qat-epochs", type=int, default=300)
    g.add_argument("--qat-lr", type=float, default=1e-6)
    p.add_argument("--init", type=Path, help="meta-learned initialization (.inri); enables meta mode")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="inrc", description="Implicit neural representation codec")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="compress an image into a .inrc file")
    p.add_argument("image", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--report", type=Path, help="JSON report path (default: <output>.json)")
    _add_encode_flags(p)

    p = sub.add_parser("decode", help="decode a .inrc file to an image")
    p.add_argument("container", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--init", type=Path, help="initialization file for delta containers")
    p.add_argument("--out-width", type=int, help="render at this width (default: stored)")
    p.add_argument("--out-height", type=int, help="render at this height (default: stored)")

    p = sub.add_parser("sweep", help="encode every image at several widths; write RD CSV + plot")
    p.add_argument("image_dir", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--widths", default="32,48,64,128")
    p.add_argument("--method", help="label in the CSV (default: basic or meta)")
    p.add_argument("--jobs", type=int, default=1)
    _add_encode_flags(p)

    p = sub.add_parser("meta-train", help="learn an initialization from a directory of images")
    p.add_argument("dataset", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--val-dir", type=Path, help="validation images (default: subset of dataset)")
    p.add_argument("--outer-lr", type=float, default=5e-5, help="beta")
    p.add_argument("--alpha-init", type=float, default=1e-5)
    p.add_argument("--inner-steps", type=int, default=3, help="k")
    p.add_argument("--meta-epochs", type=int, default=30)
    p.add_argument("--steps-per-val", type=int, default=500)
    p.add_argument("--val-size", type=int, default=100)
    p.add_argument("--lr-patience", type=int, default=10)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--register", action="store_true", help=f"copy into ${ENV_VAR}")
    p.add_argument("--seed", type=int, default=0)
    _add_model_flags(p)

    p = sub.add_parser("sdf-encode", help="compress a watertight mesh as a signed distance field")
    p.add_argument("mesh", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--report", type=Path)
    p.add_argument("--n", type=int, default=100_000, help="SDF samples")
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--hidden-layers", type=int, default=3)
    p.add_argument("--n-freqs", type=int, default=16)
    p.add_argument("--sigma", type=float, default=1.4)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--batch", type=int, default=10_000)
    p.add_argument("--bits", type=int, default=8)
    p.add_argument("--adaround-iters", type=int, default=2000)
    p.add_argument("--qat-epochs", type=int, default=50)
    p.add_argument("--qat-lr", type=float, default=1e-7)
    p.add_argument("--eval-resolution", type=int, default=0,
                   help="if > 0, decode at this R and report chamfer to the input mesh")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sdf-decode", help="extract a mesh from an SDF container")
    p.add_argument("container", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--resolution", "-R", type=int, default=128)

    p = sub.add_parser("eval", help="merge RD CSVs (ours and external baselines) into one plot")
    p.add_argument("csv", type=Path, nargs="+")
    p.add_argument("--baseline", type=Path, action="append", default=[],
                   help="external CSV with instance,method,bpp,psnr columns")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--title", default="")

    p = sub.add_parser("resize", help="box-filter downsample an image by an integer factor")
    p.add_argument("image", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--factor", type=int, required=True)
    return ap


# ---------------------------------------------------------------- helpers

def _jsonable(obj):
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _explicit_model(args) -> dict:
    return {k: getattr(args, k) for k in MODEL_FLAGS if getattr(args, k, None) is not None}


def _encode_config(args, minit: MetaInit | None) -> EncodeConfig:
    explicit = _explicit_model(args)
    if minit is not None:
        clash = {k: v for k, v in explicit.items() if getattr(minit.config, k) != v}
        if clash:
            raise ConfigError(f"flags {sorted(clash)} disagree with the initialization's config")
        model = minit.config
    else:
        model = ModelConfig(**explicit)
    warmup = args.warmup if args.warmup is not None else (100 if minit is not None else 0)
    ocfg = OverfitConfig(epochs=args.epochs, lr=args.lr, lam=args.lam,
                         plateau_patience=args.patience, plateau_factor=args.plateau_factor,
                         early_stop=args.early_stop, warmup_epochs=min(warmup, args.epochs))
    return EncodeConfig(model, ocfg, args.bits, args.quantizer, args.adaround_iters,
                        args.adaround_reg, args.qat_epochs, args.qat_lr, args.seed)


def _load_init(path: Path | None) -> MetaInit | None:
    return MetaInit.load(path) if path is not None else None


def _image_files(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise UsageError(f"{directory} is not a directory")
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise UsageError(f"no .ppm/.png images in {directory}")
    return files


def _load_same_size(files: list[Path]) -> list[np.ndarray]:
    images = [load_image(f) for f in files]
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise UsageError(f"images differ in size: {sorted(shapes)}")
    return images


# ---------------------------------------------------------------- commands

def cmd_encode(args) -> int:
    minit = _load_init(args.init)
    ecfg = _encode_config(args, minit)
    image = load_image(args.image)
    res = encode_image(image, ecfg, minit)
    args.output.write_bytes(res.data)
    report = dict(res.report, input=str(args.image), output=str(args.output), flags=vars(args))
    _write_json(args.report or args.output.with_suffix(args.output.suffix + ".json"), report)
    print(f"{args.output}: {report['bytes']} bytes, {report['bpp']:.4f} bpp, "
          f"{report['psnr']:.2f} dB, {report['epochs_run']} epochs, "
          f"{report['wall_time_s']['total']:.1f} s")
    return 0


def cmd_decode(args) -> int:
    init = _load_init(args.init) if args.init else InitRegistry()
    img = decode_image(args.container.read_bytes(), init, args.out_width, args.out_height)
    save_image(args.output, img)
    print(f"{args.output}: {img.shape[1]}x{img.shape[0]}")
    return 0


def _sweep_job(job):
    path, width, args_dict = job
    args = argparse.Namespace(**args_dict)
    args.width = width
    minit = _load_init(args.init)
    if minit is not None:
        args.width = None  # the initialization fixes the architecture
    ecfg = _encode_config(args, minit)
    res = encode_image(load_image(path), ecfg, minit)
    return path, width, res


def cmd_sweep(args) -> int:
    files = _image_files(args.image_dir)
    widths = [int(w) for w in args.widths.split(",") if w.strip()]
    if args.init is not None and len(widths) > 1:
        raise UsageError("a meta initialization fixes the width; pass a single --widths value")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    method = args.method or ("meta" if args.init else "basic")
    base = {k: v for k, v in vars(args).items() if k != "func"}
    jobs = [(f, w, base) for f in files for w in widths]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    points, reports = [], []
    for path, width, res in results:
        r = res.report
        stem = f"{path.stem}_M{width}"
        (args.out_dir / f"{stem}.inrc").write_bytes(res.data)
        points.append(RDPoint(path.stem, method, r["bpp"], r["psnr"], width, r["bits"]))
        reports.append(dict(r, instance=path.stem))
    write_rd_csv(args.out_dir / "rd.csv", points)
    rd_plot(points, args.out_dir / "rd.png", title=f"{method}: {len(files)} images")
    _write_json(args.out_dir / "sweep.json", {"flags": base, "runs": reports})
    print(f"{len(points)} points -> {args.out_dir / 'rd.csv'}")
    return 0


def cmd_meta_train(args) -> int:
    images = _load_same_size(_image_files(args.dataset))
    val = _load_same_size(_image_files(args.val_dir)) if args.val_dir else None
    data = [im.astype(np.float64) / 255.0 for im in images]
    val = [im.astype(np.float64) / 255.0 for im in val] if val else None
    mcfg = MetaTrainConfig(outer_lr=args.outer_lr, alpha_init=args.alpha_init,
                           k=args.inner_steps, steps_per_val=args.steps_per_val,
                           val_size=args.val_size, lr_patience=args.lr_patience,
                           epochs=args.meta_epochs, max_steps=args.max_steps)
    config = ModelConfig(**_explicit_model(args))
    minit = train_init(data, mcfg, config, seed=args.seed, val_images=val,
                       dataset_id=args.dataset.name)
    minit.save(args.output)
    if args.register:
        InitRegistry().add(minit)
    _write_json(args.output.with_suffix(".json"), {
        "flags": vars(args), "hash": minit.content_hash.hex(), "steps": minit.steps,
        "val_loss": minit.val_loss, "val_history": minit.val_history})
    print(f"{args.output}: hash {minit.content_hash.hex()}, val MSE {minit.val_loss:.4g} "
          f"at step {minit.steps}")
    return 0


def cmd_sdf_encode(args) -> int:
    from .sdf import SDFHyper, chamfer, decode_sdf, encode_sdf, load_mesh, sdf_model_config

    mesh = load_mesh(args.mesh)
    config = sdf_model_config(args.width, args.hidden_layers, args.n_freqs, args.sigma)
    hyper = SDFHyper(n_samples=args.n, epochs=args.epochs, lr=args.lr, batch=args.batch,
                     bits=args.bits, adaround_iters=args.adaround_iters,
                     qat_epochs=args.qat_epochs, qat_lr=args.qat_lr, seed=args.seed)
    res = encode_sdf(mesh, config, hyper)
    args.output.write_bytes(res.data)
    report = dict(res.report, input=str(args.mesh), input_bytes=args.mesh.stat().st_size,
                  flags=vars(args))
    if args.eval_resolution > 0:
        report["chamfer"] = chamfer(res.mesh, decode_sdf(res.data, args.eval_resolution),
                                    seed=args.seed)
    _write_json(args.report or args.output.with_suffix(args.output.suffix + ".json"), report)
    extra = f", chamfer {report['chamfer']:.3g}" if "chamfer" in report else ""
    print(f"{args.output}: {len(res.data)} bytes ({len(res.data) / report['input_bytes']:.1%} "
          f"of input){extra}")
    return 0


def cmd_sdf_decode(args) -> int:
    from .sdf import decode_sdf, save_mesh

    mesh = decode_sdf(args.container.read_bytes(), args.resolution)
    save_mesh(args.output, mesh)
    print(f"{args.output}: {len(mesh.vertices)} vertices, {len(mesh.faces)} faces")
    return 0


def cmd_eval(args) -> int:
    points: list[RDPoint] = []
    for path in list(args.csv) + list(args.baseline):
        points += read_rd_csv(path)
    if not points:
        raise UsageError("no RD points in the given CSV files")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_rd_csv(args.out_dir / "rd_merged.csv", points)
    rd_plot(points, args.out_dir / "rd.png", title=args.title)
    summary = {}
    for p in points:
        s = summary.setdefault(p.method, {"n": 0, "bpp": 0.0, "psnr": 0.0})
        s["n"] += 1
        s["bpp"] += p.bpp
        s["psnr"] += p.psnr
    for method, s in sorted(summary.items()):
        s["bpp"] /= s["n"]
        s["psnr"] /= s["n"]
        print(f"{method:>16}: {s['n']:4d} points, mean {s['bpp']:.4f} bpp, {s['psnr']:.2f} dB")
    _write_json(args.out_dir / "summary.json", {"flags": vars(args), "methods": summary})
    return 0


def cmd_resize(args) -> int:
    img = box_resize(load_image(args.image), args.factor)
    save_image(args.output, img)
    print(f"{args.output}: {img.shape[1]}x{img.shape[0]}")
    return 0


COMMANDS = {
    "encode": cmd_encode, "decode": cmd_decode, "sweep": cmd_sweep,
    "meta-train": cmd_meta_train, "sdf-encode": cmd_sdf_encode, "sdf-decode": cmd_sdf_decode,
    "eval": cmd_eval, "resize": cmd_resize,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CodecError, ImageReadError, ConfigError, DivergedError, UsageError, OSError,
            ValueError) as exc:
        print(f"inrc {args.command}: error: {exc}", file=sys.stderr)
        code = getattr(exc, "code", 1)
        return code if isinstance(code, int) else 1


if __name__ == "__main__":
    sys.exit(main())
