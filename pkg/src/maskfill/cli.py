"""Command-line harness: mask generation, training, inference, benchmarking.

Exit codes: 0 success, 1 partial benchmark failure, 2 usage/config error,
3 numerical failure during training.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import data as dp
from . import masks as mk
from . import network as nw
from .baseline import METHOD_NAME, BaselineConfig, multiscale_inpaint
from .compositing import composite
from .metrics import (EvalAggregate, EvalReport, EvalRow, evaluate_dataset,
                      merge_reports, psnr, ssim, write_report_csv)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

OURS_NAME = "ours"


class ConfigError(ValueError):
    pass


_CONFIG_SCHEMA = {
    "network": {"depth", "base_channels", "input_size", "mask_channel", "kernel_size"},
    "optimizer": {"lr", "beta1", "beta2", "epsilon"},
    "augment": {"flip_probability", "rotate_probability"},
    "mask": {"regime", "fill"},
    "train": {"epochs", "batch_size", "masked_loss"},
    "baseline": {"scales"},
    "seed": None,
}


def load_run_config(path) -> dict:
    """Parse and validate the single-document JSON run config.

    Unknown keys at any level are rejected to guard against silent typos.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    for key, value in doc.items():
        if key not in _CONFIG_SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        allowed = _CONFIG_SCHEMA[key]
        if allowed is not None:
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            for sub in value:
                if sub not in allowed:
                    raise ConfigError(f"unknown key {key}.{sub!r}")
    if "mask" in doc and "regime" in doc["mask"] and doc["mask"]["regime"] not in mk.REGIMES:
        raise ConfigError(f"unknown mask regime {doc['mask']['regime']!r}")
    return doc


def _network_config(doc: dict) -> nw.NetworkConfig:
    sec = doc.get("network", {})
    return nw.NetworkConfig(
        depth=sec.get("depth", 2),
        base_channels=sec.get("base_channels", 8),
        input_size=tuple(sec.get("input_size", (32, 32))),
        input_channels=4 if sec.get("mask_channel", False) else 3,
        kernel_size=sec.get("kernel_size", 3),
        seed=doc.get("seed", 0))


def _load_manifest_images(manifest_path, size) -> tuple[dp.Manifest, list[np.ndarray]]:
    manifest = dp.Manifest.read(manifest_path)
    if not len(manifest):
        raise ConfigError(f"manifest {manifest_path} lists no images")
    images = [dp.resize(dp.load_image(p), size[0], size[1]) for p in manifest.paths]
    return manifest, images


# ---------------------------------------------------------------------------
# subcommands

def cmd_maskgen(args) -> int:
    regime = mk.REGIMES[args.regime]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(args.count):
        mask = mk.generate_mask(args.height, args.width, regime,
                                dp.derive_seed("maskgen", args.seed, i))
        name = f"mask_{args.seed}_{i:04}.png"
        mk.save_mask(mask, out_dir / name)
        rows.append((name, mk.mask_coverage(mask)))
    with open(out_dir / "coverage.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "coverage"])
        for name, cov in rows:
            writer.writerow([name, repr(cov)])
    return EXIT_OK


def cmd_train(args) -> int:
    doc = load_run_config(args.config)
    config = _network_config(doc)
    opt_sec = doc.get("optimizer", {})
    aug_sec = doc.get("augment", {})
    mask_sec = doc.get("mask", {})
    train_sec = doc.get("train", {})
    epochs = args.epochs if args.epochs is not None else train_sec.get("epochs", 100)
    _, train_images = _load_manifest_images(args.data, config.input_size)
    val_images = []
    if args.val:
        _, val_images = _load_manifest_images(args.val, config.input_size)

    net = nw.build_network(config)
    try:
        stats = nw.train(
            net, train_images, val_images,
            epochs=epochs,
            batch_size=train_sec.get("batch_size", 8),
            optimizer=nw.OptimizerConfig(
                lr=opt_sec.get("lr", 1e-3), beta1=opt_sec.get("beta1", 0.9),
                beta2=opt_sec.get("beta2", 0.999), epsilon=opt_sec.get("epsilon", 1e-8)),
            augment_cfg=dp.AugmentConfig(
                flip_probability=aug_sec.get("flip_probability", 0.5),
                rotate_probability=aug_sec.get("rotate_probability", 0.5)),
            regime=mk.REGIMES[mask_sec.get("regime", "variable")],
            fill=mask_sec.get("fill", mk.DEFAULT_FILL),
            seed=doc.get("seed", 0),
            masked_loss=train_sec.get("masked_loss", False))
    except nw.TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    ckpt_path = Path(args.out)
    ckpt_path.parent.mkdir(parents=True, exist_ok=True)
    nw.save_checkpoint(net, ckpt_path)
    with open(ckpt_path.parent / "train_stats.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "val_psnr", "val_ssim", "seconds"])
        for row in stats.epochs:
            writer.writerow([row.epoch, repr(row.train_loss), repr(row.val_psnr),
                             repr(row.val_ssim), f"{row.seconds:.3f}"])
    return EXIT_OK


def cmd_infer(args) -> int:
    net = nw.load_checkpoint(args.ckpt)
    image = dp.load_image(args.image)
    mask = mk.load_mask(args.mask)
    if image.shape[:2] != net.config.input_size or mask.shape != image.shape[:2]:
        print(f"error: image {image.shape[:2]} / mask {mask.shape} do not match "
              f"checkpoint input size {net.config.input_size}", file=sys.stderr)
        return EXIT_USAGE
    pred = nw.predict_images(net, [image], [mask])[0]
    out = pred if args.raw else composite(image, pred, mask)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    dp.save_image(out, args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    net = nw.load_checkpoint(args.ckpt)
    size = net.config.input_size
    manifest, images = _load_manifest_images(args.data, size)
    regime_names = [r.strip() for r in args.regimes.split(",") if r.strip()]
    for name in regime_names:
        if name not in mk.REGIMES:
            print(f"error: unknown regime {name!r}", file=sys.stderr)
            return EXIT_USAGE
    baseline_cfg = BaselineConfig()
    fill = args.fill

    any_failed = False
    reports = []
    for regime_name in regime_names:
        regime = mk.REGIMES[regime_name]
        per_method: dict[str, list] = {METHOD_NAME: [], OURS_NAME: []}
        failures: list[EvalRow] = []
        for idx, (path, clean) in enumerate(zip(manifest.paths, images)):
            image_id = path.name
            # one mask per (image, regime, seed), shared by both methods
            mask = mk.generate_mask(size[0], size[1], regime,
                                    dp.derive_seed("bench", args.seed, regime_name, idx))
            corrupted = mk.apply_mask(clean, mask, fill)
            for method in (METHOD_NAME, OURS_NAME):
                try:
                    if method == METHOD_NAME:
                        restored = multiscale_inpaint(corrupted, mask, baseline_cfg)
                    else:
                        pred = nw.predict_images(net, [corrupted], [mask])[0]
                        restored = composite(corrupted, pred, mask)
                    per_method[method].append((restored, clean, image_id))
                except Exception as exc:
                    any_failed = True
                    failures.append(EvalRow(image_id=image_id, method=method,
                                            regime=regime_name, psnr_db=float("nan"),
                                            ssim=float("nan"), error=str(exc)))
        for method, triples in per_method.items():
            if triples:
                reports.append(evaluate_dataset(triples, method, regime_name))
        if failures:
            reports.append(EvalReport(rows=failures))

    report = merge_reports(reports)
    Path(args.report).parent.mkdir(parents=True, exist_ok=True)
    write_report_csv(report, args.report)
    return EXIT_PARTIAL if any_failed else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maskfill",
                                     description="Scratch-mask inpainting toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("maskgen", help="generate scratch masks")
    p.add_argument("--height", type=int, default=224)
    p.add_argument("--width", type=int, default=224)
    p.add_argument("--regime", choices=sorted(mk.REGIMES), required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_maskgen)

    p = sub.add_parser("train", help="train the inpainting network")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, help="training manifest")
    p.add_argument("--val", default=None, help="validation manifest")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--epochs", type=int, default=None, help="override config epochs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="restore one image with a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--raw", action="store_true", help="write the unspliced network output")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("bench", help="paired benchmark of both methods")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--regimes", default="narrow,variable,thick")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fill", type=float, default=mk.DEFAULT_FILL)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError, nw.CheckpointError,
            dp.ImageFormatError, dp.TruncatedImageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except nw.TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception:
        traceback.print_exc()
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
