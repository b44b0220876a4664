"""Command line entry points.

Subcommands cover the two render paths, the annotation preview, staged
training, evaluation, dataset conversion, and the annotation server.
Every command writes byte-identical outputs when rerun on identical
inputs. Exit codes: 0 ok, 2 missing or unreadable files, 3 malformed
data, 4 bad configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .cbunet import load_weights, render, save_weights
from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    FormatError,
    NispError,
    ShapeError,
)
from .imaging import (
    apply_ccm,
    apply_white_balance,
    demosaic_bilinear,
    denoise_bilateral,
    estimate_illuminant_grayworld,
    load_bayer,
    load_camera_meta,
    meta_sidecar_path,
    srgb_encode,
    srgb_encode_16bit,
    tone_baseline_global,
    write_png,
    xyz_to_linear_srgb,
)
from .service import JobStatus, create_app, preview_png
from .training import (
    TrainConfig,
    count_flops,
    count_params,
    evaluate_pairs,
    generate_synthetic_dataset,
    joint_finetune,
    load_dataset,
    train_stage1,
    train_stage2,
    validate_dataset,
)


def _load_raw(args):
    if not Path(args.input).exists():
        raise DataError(f"input mosaic {args.input} does not exist")
    return load_bayer(args.input, args.meta)


def cmd_render(args) -> int:
    raw = _load_raw(args)
    if args.pipeline == "cbunet":
        if args.weights is None:
            raise ConfigError("--pipeline cbunet needs --weights")
        _, stage1, stage2 = load_weights(args.weights)
        result = render(raw, None, stage1, stage2)
        write_png(args.output, result.display.planes)
        if args.intermediate:
            write_png(args.intermediate, result.intermediate)
        return 0
    rgb = demosaic_bilinear(raw)
    rgb = denoise_bilateral(rgb, args.sigma_spatial, args.sigma_range)
    xyz = apply_ccm(
        apply_white_balance(rgb, estimate_illuminant_grayworld(rgb)), raw.meta.ccm
    )
    toned = tone_baseline_global(xyz, args.gamma)
    write_png(args.output, srgb_encode(xyz_to_linear_srgb(toned)).planes)
    if args.intermediate:
        write_png(args.intermediate, srgb_encode_16bit(xyz_to_linear_srgb(xyz)))
    return 0


def cmd_preview(args) -> int:
    Path(args.output).write_bytes(preview_png(_load_raw(args)))
    return 0


def _report_invalid(dataset_dir) -> list[str]:
    problems = validate_dataset(dataset_dir)
    for line in problems:
        print(f"invalid: {line}", file=sys.stderr)
    return problems


def _train_config(args) -> TrainConfig:
    overrides = {}
    if args.config is not None:
        try:
            overrides = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.config}: invalid JSON: {exc}") from exc
        if not isinstance(overrides, dict):
            raise FormatError(f"{args.config}: training config must be an object")
        allowed = {
            "lr", "batch_size", "stage1_steps", "stage2_epochs",
            "joint_epochs", "crop", "seed", "preset",
        }
        unknown = sorted(set(overrides) - allowed)
        if unknown:
            raise ConfigError(f"unknown training config keys {unknown}")
    if args.seed is not None:
        overrides["seed"] = args.seed
    return TrainConfig.desk(**overrides)


def cmd_train(args) -> int:
    if _report_invalid(args.dataset):
        return 3
    config = _train_config(args)
    pairs = load_dataset(args.dataset)
    job = JobStatus("train")

    def report(progress, message):
        job.advance("running", progress, message)
        print(f"[{job.progress:4.0%}] {job.message}")

    report(0.0, f"dataset {args.dataset}: {len(pairs)} pairs, seed {config.seed}")
    stage1, log1 = train_stage1(pairs, config)
    report(0.45, f"stage 1 done, last loss {log1.step_losses[-1]:.4f}")
    stage2, log2 = train_stage2(pairs, stage1, config)
    report(0.9, f"stage 2 done, last loss {log2.step_losses[-1]:.4f}")
    joint_finetune(pairs, stage1, stage2, config)
    save_weights(args.output, config.net_config(), stage1, stage2)
    job.advance("done", 1.0)
    print(f"weights written to {args.output}")
    return 0


def cmd_eval(args) -> int:
    if _report_invalid(args.dataset):
        return 3
    pairs = load_dataset(args.dataset)
    _, stage1, stage2 = load_weights(args.weights)
    rows = evaluate_pairs(pairs, stage1, stage2)
    dims = pairs[0].raw.data.shape
    params = count_params([stage1, stage2])
    flops = count_flops([stage1, stage2], dims)
    with Path(args.output).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("image_id", "psnr_db", "params", "flops"))
        for image_id, db in rows:
            writer.writerow((image_id, f"{db:.4f}", "", ""))
        mean = float(np.mean([db for _, db in rows]))
        writer.writerow(("mean", f"{mean:.4f}", params, flops))
    print(f"evaluated {len(rows)} images, mean psnr {mean:.4f} dB")
    return 0


def cmd_annotate_serve(args) -> int:
    import uvicorn

    app = create_app(args.dataset, static_dir=args.static)
    print(f"annotation service for {args.dataset} on port {args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_convert(args) -> int:
    out = Path(args.output)
    if args.input is None:
        ids = generate_synthetic_dataset(
            out, count=args.count, height=args.height, width=args.width, seed=args.seed
        )
        print(f"wrote {len(ids)} synthetic pairs to {out}")
        return 0
    src = Path(args.input)
    if not src.is_dir():
        raise DataError(f"input directory {src} does not exist")
    mosaics = sorted(src.glob("*.pgm"))
    if not mosaics:
        raise DataError(f"no .pgm mosaics in {src}")
    (out / "raw").mkdir(parents=True, exist_ok=True)
    (out / "target").mkdir(exist_ok=True)
    (out / "annotations").mkdir(exist_ok=True)
    for pgm in mosaics:
        sidecar = meta_sidecar_path(pgm)
        if not sidecar.exists():
            raise DataError(f"missing sidecar {sidecar}")
        load_camera_meta(sidecar)  # reject corrupt metadata before copying
        (out / "raw" / pgm.name).write_bytes(pgm.read_bytes())
        (out / "raw" / sidecar.name).write_bytes(sidecar.read_bytes())
    print(f"imported {len(mosaics)} mosaics into {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nisp", description="Nighttime RAW to RGB rendering toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a mosaic to an 8-bit PNG")
    p.add_argument("--input", required=True, help="RAW mosaic (.pgm)")
    p.add_argument("--meta", help="camera metadata sidecar (default: alongside input)")
    p.add_argument("--pipeline", choices=("baseline", "cbunet"), default="baseline")
    p.add_argument("--weights", help="weight file (cbunet pipeline)")
    p.add_argument("--output", required=True, help="output PNG path")
    p.add_argument("--intermediate", help="also write the 16-bit pre-tone PNG here")
    p.add_argument("--sigma-spatial", type=float, default=1.0, help="bilateral spatial sigma")
    p.add_argument("--sigma-range", type=float, default=0.1, help="bilateral range sigma")
    p.add_argument("--gamma", type=float, default=2.2, help="baseline tone curve gamma")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("preview", help="annotation preview PNG")
    p.add_argument("--input", required=True)
    p.add_argument("--meta")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_preview)

    p = sub.add_parser("train", help="staged training on a dataset directory")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", help="JSON file overriding schedule fields")
    p.add_argument("--seed", type=int, help="override the schedule seed")
    p.add_argument("--output", required=True, help="weight file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score renders against dataset targets")
    p.add_argument("--dataset", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--output", required=True, help="CSV report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("annotate-serve", help="run the white-patch annotation service")
    p.add_argument("--dataset", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", help="directory of built UI assets to serve at /")
    p.set_defaults(func=cmd_annotate_serve)

    p = sub.add_parser("convert", help="assemble a dataset directory")
    p.add_argument("--input", help="directory of .pgm mosaics with sidecars to import")
    p.add_argument("--output", required=True, help="dataset directory to create")
    p.add_argument("--count", type=int, default=4, help="synthetic pairs to generate")
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_convert)

    return parser


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (OSError, DataError)):
        return 2
    if isinstance(exc, (FormatError, DimensionError, ShapeError)):
        return 3
    return 4


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NispError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    raise SystemExit(main())
