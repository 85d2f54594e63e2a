"""Command-line entry points: train, eval, predict, gradcam, inspect, stats, serve.

Exit codes: 0 success, 1 input/configuration error, 2 internal error.
The serve bind address can be overridden with the PD36C_BIND environment
variable ("host:port").
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .augment import AugmentConfig
from .data_io import (
    format_split_stats,
    load_dataset,
    load_image,
    load_knowledge_base,
    load_weights,
    save_weights,
    scan_dataset,
    split_stats,
    write_history,
)
from .errors import ConfigError, DataError, PD36Error, ShapeError
from .explain import grad_cam, heatmap_to_csv, heatmap_to_png_bytes, overlay_to_png_bytes
from .metrics import (
    compute_report,
    confusion,
    confusion_to_csv,
    format_report,
    margins,
    margins_to_csv,
    report_to_json,
)
from .model import (
    CANONICAL_NUM_CLASSES,
    build_pd36c,
    format_audit,
    param_audit,
    predict,
)
from .trainer import TrainConfig, evaluate, train

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2

# reference audit facts for the canonical 38-class model
CANONICAL_TOTALS = (1_248_774, 1_920, 1_250_694)


def _epoch_printer(record):
    print(
        f"{record.epoch:>5}  {record.learning_rate:<10g}{record.train_accuracy:>10.5f}"
        f"{record.train_loss:>12.5f}{record.val_accuracy:>12.5f}{record.val_loss:>12.5f}",
        flush=True,
    )


def cmd_train(args) -> int:
    train_manifest = scan_dataset(args.data, args.train_split)
    val_manifest = scan_dataset(args.data, args.val_split)
    if train_manifest.classes != val_manifest.classes:
        raise DataError("train and validation splits declare different class sets")
    print(f"scanning {args.data}: {len(train_manifest.classes)} classes, "
          f"{train_manifest.total} train / {val_manifest.total} validation images")
    train_set = load_dataset(train_manifest, model_extent=args.extent)
    val_set = load_dataset(val_manifest, model_extent=args.extent)

    spec, store = build_pd36c(
        num_classes=len(train_manifest.classes),
        init_seed=args.seed,
        input_extent=args.extent,
        bn_momentum=args.bn_momentum,
    )
    phase2 = args.phase2_start_epoch
    if phase2 is None:
        phase2 = min(16, args.epochs + 1)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr_phase1=args.lr_phase1,
        lr_phase2=args.lr_phase2,
        phase2_start_epoch=phase2,
        label_smoothing=args.label_smoothing,
        seed=args.seed,
    )
    augment_cfg = None if args.no_augment else AugmentConfig()
    print(f"{'epoch':>5}  {'lr':<10}{'train_acc':>10}{'train_loss':>12}{'val_acc':>12}{'val_loss':>12}")
    history = train(
        spec, store, train_set, val_set, cfg, augment_cfg, on_epoch=_epoch_printer
    )
    save_weights(spec, store, args.out_weights, class_names=train_manifest.classes)
    write_history(history, args.out_history)
    print(f"weights -> {args.out_weights}")
    print(f"history -> {args.out_history}")
    print(
        f"best validation accuracy at epoch {history.best_val_accuracy_epoch}, "
        f"best validation loss at epoch {history.best_val_loss_epoch}"
    )
    return EXIT_OK


def cmd_inspect(args) -> int:
    if args.weights:
        loaded = load_weights(args.weights)
        spec, store = loaded.spec, loaded.store
        print(f"model: {loaded.model_id}")
    else:
        spec, store = build_pd36c(num_classes=args.num_classes, init_seed=args.seed)
    report = param_audit(spec, store)
    print(format_audit(report))
    print(f"raw float32 payload: {report.payload_bytes:,} bytes")
    if spec.num_classes == CANONICAL_NUM_CLASSES:
        expected = CANONICAL_TOTALS
        actual = (report.trainable, report.non_trainable, report.total)
        if actual != expected:
            print(f"AUDIT MISMATCH: expected {expected}, got {actual}", file=sys.stderr)
            return EXIT_INTERNAL
    return EXIT_OK


def cmd_predict(args) -> int:
    loaded = load_weights(args.weights)
    image = load_image(args.image, model_extent=loaded.spec.input_extent)
    k = args.k if args.k is not None else min(5, loaded.spec.num_classes)

    start = time.perf_counter()
    result = predict(loaded.spec, loaded.store, image, list(loaded.class_names), k=k)
    latency_ms = (time.perf_counter() - start) * 1000.0

    bench = None
    if args.bench:
        times = []
        for _ in range(args.bench):
            t0 = time.perf_counter()
            predict(loaded.spec, loaded.store, image, list(loaded.class_names), k=k)
            times.append((time.perf_counter() - t0) * 1000.0)
        bench = {
            "runs": args.bench,
            "mean_ms": float(np.mean(times)),
            "p95_ms": float(np.percentile(times, 95)),
        }

    if args.json:
        payload = {
            "class_name": result.class_name,
            "class_index": result.class_index,
            "confidence": result.confidence,
            "top_k": [
                {"index": i, "class": n, "probability": p} for i, n, p in result.top_k
            ],
            "latency_ms": latency_ms,
            "model_id": loaded.model_id,
        }
        if bench:
            payload["bench"] = bench
        print(json.dumps(payload, indent=2))
    else:
        print(f"prediction: {result.class_name} (class {result.class_index})")
        print(f"confidence: {result.confidence:.5f}")
        print("top-k:")
        for i, name, p in result.top_k:
            print(f"  {i:>3}  {name:<40} {p:.5f}")
        print(f"latency: {latency_ms:.1f} ms")
        if bench:
            print(
                f"bench ({bench['runs']} runs): mean {bench['mean_ms']:.1f} ms, "
                f"p95 {bench['p95_ms']:.1f} ms"
            )
    return EXIT_OK


def cmd_eval(args) -> int:
    loaded = load_weights(args.weights)
    manifest = scan_dataset(args.data, args.split)
    if len(manifest.classes) != loaded.spec.num_classes:
        raise ConfigError(
            f"dataset has {len(manifest.classes)} classes but the model head "
            f"has {loaded.spec.num_classes}"
        )
    if manifest.classes != loaded.class_names:
        log.warning("dataset class names differ from the weight container's")
    images, labels = load_dataset(manifest, model_extent=loaded.spec.input_extent)
    accuracy, mean_loss, prob_rows = evaluate(loaded.spec, loaded.store, (images, labels))
    y_pred = prob_rows.argmax(axis=1)
    cm = confusion(labels, y_pred, len(manifest.classes), labels=manifest.classes)
    report = compute_report(cm, score_rows=prob_rows, y_true=labels)
    print(format_report(report))
    print(f"\nmean loss: {mean_loss:.5f}")

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(report_to_json(report), encoding="utf-8")
    (outdir / "confusion.csv").write_text(confusion_to_csv(cm), encoding="utf-8")
    margin_rows = margins(prob_rows, labels)
    (outdir / "margins.csv").write_text(margins_to_csv(margin_rows), encoding="utf-8")
    print(f"report.json, confusion.csv, margins.csv -> {outdir}")
    return EXIT_OK


def cmd_gradcam(args) -> int:
    loaded = load_weights(args.weights)
    image = load_image(args.image, model_extent=loaded.spec.input_extent)
    class_index = args.class_index
    if class_index is None and args.class_name is not None:
        if args.class_name not in loaded.class_names:
            raise ConfigError(f"unknown class name {args.class_name!r}")
        class_index = loaded.class_names.index(args.class_name)
    if class_index is None:
        class_index = predict(
            loaded.spec, loaded.store, image, list(loaded.class_names), k=1
        ).class_index
    heat = grad_cam(
        loaded.spec,
        loaded.store,
        image,
        class_index,
        target_layer=args.layer,
        use_logit=not args.use_probability,
    )
    print(
        f"class {class_index} ({loaded.class_names[class_index]}), "
        f"layer {heat.source_layer}, constant={heat.constant}"
    )
    Path(args.out).write_bytes(heatmap_to_png_bytes(heat))
    print(f"heatmap -> {args.out}")
    if args.out_overlay:
        Path(args.out_overlay).write_bytes(overlay_to_png_bytes(heat, image))
        print(f"overlay -> {args.out_overlay}")
    if args.out_csv:
        Path(args.out_csv).write_text(heatmap_to_csv(heat), encoding="utf-8")
        print(f"grid -> {args.out_csv}")
    return EXIT_OK


def cmd_stats(args) -> int:
    manifest = scan_dataset(args.data, args.split)
    print(f"split: {args.split}")
    print(format_split_stats(split_stats(manifest)))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .server import ModelHolder, create_app

    loaded = load_weights(args.weights)
    kb = (
        load_knowledge_base(args.kb, loaded.class_names)
        if args.kb
        else {}
    )
    host, port = args.host, args.port
    bind = os.environ.get("PD36C_BIND")
    if bind:
        host, _, port_text = bind.partition(":")
        port = int(port_text) if port_text else port
    app = create_app(ModelHolder(loaded, kb))
    print(f"serving {loaded.model_id} on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pd36c", description="Compact plant-disease classifier toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a directory-per-class dataset")
    p.add_argument("--data", required=True, help="dataset root (root/<split>/<Class>/*.jpg|png)")
    p.add_argument("--train-split", default="train")
    p.add_argument("--val-split", default="valid")
    p.add_argument("--out-weights", required=True)
    p.add_argument("--out-history", required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr-phase1", type=float, default=1e-4)
    p.add_argument("--lr-phase2", type=float, default=5e-5)
    p.add_argument("--phase2-start-epoch", type=int, default=None,
                   help="default: epoch 16, clamped to epochs+1")
    p.add_argument("--label-smoothing", type=float, default=0.0)
    p.add_argument("--bn-momentum", type=float, default=0.99,
                   help="moving-statistics momentum; lower it for short runs")
    p.add_argument("--extent", type=int, default=224, help="square input extent")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-augment", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("inspect", help="print the per-layer parameter audit")
    p.add_argument("--weights", default=None)
    p.add_argument("--num-classes", type=int, default=CANONICAL_NUM_CLASSES)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("predict", help="classify one image")
    p.add_argument("--weights", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("-k", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--bench", type=int, default=0, metavar="N",
                   help="report mean/p95 latency over N extra runs")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="full metrics report on a labeled split")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="valid")
    p.add_argument("--outdir", default="eval-out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcam", help="class-evidence heatmap for one image")
    p.add_argument("--weights", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--class-index", type=int, default=None)
    p.add_argument("--class-name", default=None)
    p.add_argument("--layer", default=None, help="target conv layer (default: last)")
    p.add_argument("--use-probability", action="store_true",
                   help="differentiate the softmax output instead of the logit")
    p.add_argument("--out", default="heatmap.png")
    p.add_argument("--out-overlay", default=None)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_gradcam)

    p = sub.add_parser("stats", help="per-class count statistics of a split")
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="train")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--weights", required=True)
    p.add_argument("--kb", default=None, help="knowledge-base JSON path")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8036)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError, ShapeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PD36Error as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
