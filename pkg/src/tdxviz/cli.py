"""Command-line entry point.

Subcommands cover the full workflow: ``gen-data`` writes a synthetic
dataset, ``train`` fits and checkpoints a model, ``explain`` produces
heatmaps, overlays, contours and a prediction report for one sequence, and
``sweep`` runs a hyperparameter sweep with per-configuration probe
visualizations.

Exit codes: 0 on success, 1 on runtime failure (training divergence,
malformed data), 2 on usage or configuration errors. The environment
variable ``TDXVIZ_THREADS`` caps internal parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .contours import DEFAULT_LEVELS, extract_contours, write_contour_set
from .data import (
    DatasetSpec,
    generate_synthetic,
    load_dataset,
    load_sequence,
    preprocess,
    save_dataset,
)
from .errors import TdxvizError, TrainingError
from .gradcam import capture_bundle, gradcam
from .heatmap import write_stack
from .metrics import f1_harmonic  # noqa: F401  (re-exported for sweep post-checks)
from .model import (
    ModelConfig,
    build_model,
    forward,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .overlay import render_overlay
from .saliency import saliency
from .sweep import SweepSpec, format_value, run_sweep, write_sweep_csv


def _parse_size(text: str) -> tuple[int, int]:
    """Parse WIDTHxHEIGHT, e.g. 32x32, into an (H, W) pair."""
    try:
        w, h = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 64x64, got {text!r}")
    return h, w


def _parse_levels(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must be comma-separated floats, got {text!r}")


def _parse_values(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"values must be comma-separated numbers, got {text!r}")


def _write_manifest(out_dir: Path, command: str, config: dict, seed: int, inputs: list, outputs: list, started: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "duration_seconds": time.monotonic() - started,
    }
    path = out_dir / "run_manifest.json"
    tmp = out_dir / "run_manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2) + "\n")
    os.replace(tmp, path)


def cmd_gen_data(args) -> int:
    started = time.monotonic()
    out = Path(args.out)
    spec = DatasetSpec(
        num_sequences=args.per_class,
        frames_per_sequence=args.frames,
        height=args.size[0],
        width=args.size[1],
        classes=tuple(args.classes.split(",")),
        seed=args.seed,
    )
    sequences = generate_synthetic(spec)
    save_dataset(sequences, out)
    _write_manifest(
        out,
        "gen-data",
        {
            "per_class": spec.num_sequences,
            "frames": spec.frames_per_sequence,
            "height": spec.height,
            "width": spec.width,
            "classes": list(spec.classes),
        },
        spec.seed,
        [],
        [out],
        started,
    )
    print(f"wrote {len(sequences)} sequences under {out}")
    return 0


def _config_from_args(args, classes: tuple[str, ...], input_hw: tuple[int, int], channels: int) -> ModelConfig:
    return ModelConfig(
        backbone=args.backbone,
        gru_units=args.gru_units,
        gru_dropout=args.dropout,
        mlp_blocks=args.blocks,
        mlp_dropout=args.dropout,
        dense_width=args.dense_width,
        classes=classes,
        input_hw=input_hw,
        channels=channels,
        seed=args.seed,
    )


def cmd_train(args) -> int:
    started = time.monotonic()
    out = Path(args.out)
    dataset = load_dataset(args.data)
    if args.size is not None:
        dataset = [preprocess(seq, args.size) for seq in dataset]
    classes = tuple(sorted({seq.label for seq in dataset}))
    t, h, w, c = dataset[0].frames.shape
    config = _config_from_args(args, classes, (h, w), c)
    model = build_model(config)
    train(model, dataset, epochs=args.epochs, lr=args.lr, batch_size=args.batch_size, optimizer=args.optimizer)
    save_checkpoint(model, out)
    _write_manifest(
        out,
        "train",
        {
            "data": str(args.data),
            "epochs": args.epochs,
            "lr": args.lr,
            "batch_size": args.batch_size,
            "optimizer": args.optimizer,
            "model": {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(config).items()},
        },
        args.seed,
        [Path(args.data)],
        [out],
        started,
    )
    last = model.training_log[-1]
    print(f"trained {args.epochs} epochs, final loss {last['loss']:.4f}, accuracy {last['accuracy']:.3f}")
    print(f"checkpoint written to {out}")
    return 0


def cmd_explain(args) -> int:
    started = time.monotonic()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = load_checkpoint(args.model)
    seq = preprocess(load_sequence(args.input), model.config.input_hw)

    scores = forward(model, seq)
    classes = model.config.classes
    predicted_index = int(scores.argmax())
    if args.class_name == "predicted":
        class_index = predicted_index
    else:
        if args.class_name not in classes:
            raise ValueError(f"unknown class {args.class_name!r}, expected one of {classes}")
        class_index = classes.index(args.class_name)

    prediction = {
        "scores": {name: float(scores[i]) for i, name in enumerate(classes)},
        "predicted": classes[predicted_index],
        "explained_class": classes[class_index],
    }
    (out / "prediction.json").write_text(json.dumps(prediction, indent=2) + "\n")

    if args.method == "saliency":
        stack = saliency(model, seq, class_index, normalization=args.normalization)
    else:
        bundle = capture_bundle(model, seq, class_index)
        stack = gradcam(bundle, model.config.input_hw)
    stack_path = write_stack(stack, out / "heatmap.tdxh")

    outputs = [out / "prediction.json", stack_path]
    if not args.no_render:
        if args.render in ("heat", "both"):
            outputs += render_overlay(seq, stack, "heat", out_dir=out)
        if args.render in ("contour", "both"):
            contours = extract_contours(stack, args.levels)
            outputs.append(write_contour_set(contours, out / "contours.json"))
            outputs += render_overlay(seq, stack, "contour", contours=contours, out_dir=out)

    _write_manifest(
        out,
        "explain",
        {
            "model": str(args.model),
            "input": str(args.input),
            "method": args.method,
            "class": args.class_name,
            "render": args.render,
            "levels": list(args.levels),
            "normalization": args.normalization,
            "no_render": bool(args.no_render),
        },
        model.config.seed,
        [Path(args.model), Path(args.input)],
        outputs,
        started,
    )
    print(f"predicted {prediction['predicted']!r}; artifacts under {out}")
    return 0


def cmd_sweep(args) -> int:
    started = time.monotonic()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(args.data)
    if args.size is not None:
        dataset = [preprocess(seq, args.size) for seq in dataset]
    classes = tuple(sorted({seq.label for seq in dataset}))
    t, h, w, c = dataset[0].frames.shape
    base_config = _config_from_args(args, classes, (h, w), c)
    spec = SweepSpec(
        axis=args.axis,
        values=tuple(args.values),
        base_config=base_config,
        dataset=dataset,
        epochs=args.epochs,
        seed=args.seed,
        lr=args.lr,
        batch_size=args.batch_size,
        optimizer=args.optimizer,
    )
    result = run_sweep(spec)
    csv_path = write_sweep_csv(result, out / f"sweep_{args.axis}.csv")
    outputs = [csv_path]
    if not args.no_render:
        for value in spec.values:
            key = format_value(value)
            stack = result.probe_stacks.get(key)
            if stack is None:
                continue
            probe_dir = out / f"probe_{args.axis}_{key}"
            probe_dir.mkdir(parents=True, exist_ok=True)
            outputs.append(write_stack(stack, probe_dir / "heatmap.tdxh"))
            outputs += render_overlay(result.probe_sequence, stack, "heat", out_dir=probe_dir)
    if result.failed:
        print(f"failed configurations: {', '.join(result.failed)}", file=sys.stderr)
    _write_manifest(
        out,
        "sweep",
        {
            "data": str(args.data),
            "axis": args.axis,
            "values": [format_value(v) for v in spec.values],
            "epochs": spec.epochs,
            "lr": spec.lr,
            "batch_size": spec.batch_size,
            "optimizer": spec.optimizer,
        },
        args.seed,
        [Path(args.data)],
        outputs,
        started,
    )
    print(f"sweep csv written to {csv_path}")
    return 0


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backbone", choices=("tiny-cnn", "vgg19-shaped"), default="tiny-cnn")
    parser.add_argument("--gru-units", type=int, default=1024)
    parser.add_argument("--dropout", type=float, default=0.5, help="dropout fraction for the GRU input and MLP blocks")
    parser.add_argument("--blocks", type=int, default=3, help="number of dense+dropout blocks")
    parser.add_argument("--dense-width", type=int, default=256)
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--size", type=_parse_size, default=None, help="resize frames to WIDTHxHEIGHT before training")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdxviz", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tdxviz {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate a synthetic video-anomaly dataset")
    gen.add_argument("--out", required=True)
    gen.add_argument("--per-class", type=int, default=10)
    gen.add_argument("--frames", type=int, default=8)
    gen.add_argument("--size", type=_parse_size, default=(64, 64), help="frame size as WIDTHxHEIGHT")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--classes", default="normal,fight,gunshot", help="comma-separated class names")
    gen.set_defaults(func=cmd_gen_data)

    tr = sub.add_parser("train", help="train a classifier on a dataset directory")
    tr.add_argument("--data", required=True)
    tr.add_argument("--out", required=True)
    _add_model_flags(tr)
    tr.set_defaults(func=cmd_train)

    ex = sub.add_parser("explain", help="explain one sequence with a trained model")
    ex.add_argument("--model", required=True, help="checkpoint directory")
    ex.add_argument("--input", required=True, help="sequence directory")
    ex.add_argument("--out", required=True)
    ex.add_argument("--method", choices=("saliency", "gradcam"), default="gradcam")
    ex.add_argument("--class", dest="class_name", default="predicted", help="class name or 'predicted'")
    ex.add_argument("--render", choices=("heat", "contour", "both"), default="both")
    ex.add_argument("--levels", type=_parse_levels, default=list(DEFAULT_LEVELS))
    ex.add_argument("--normalization", choices=("per-frame", "per-sequence"), default="per-frame")
    ex.add_argument("--no-render", action="store_true", help="skip overlay and contour artifacts")
    ex.set_defaults(func=cmd_explain)

    sw = sub.add_parser("sweep", help="run a hyperparameter sweep")
    sw.add_argument("--data", required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--axis", choices=("neurons", "dropout", "blocks"), required=True)
    sw.add_argument("--values", type=_parse_values, required=True, help="comma-separated values (dropout in percent)")
    sw.add_argument("--no-render", action="store_true", help="skip probe visualizations")
    _add_model_flags(sw)
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    threads = os.environ.get("TDXVIZ_THREADS")
    if threads:
        try:
            import torch

            torch.set_num_threads(max(1, int(threads)))
        except ValueError:
            print(f"error: TDXVIZ_THREADS must be an integer, got {threads!r}", file=sys.stderr)
            return 2
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except TrainingError as exc:
        print(f"error: {exc} (epoch {exc.epoch})", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TdxvizError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
