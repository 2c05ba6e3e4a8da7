"""Command-line pipeline: train, eval, scan, document, serve, pca.

Every subcommand reads and writes only the files named in its flags and
drops a run manifest (resolved configuration, input fingerprints, tool
version, timing) next to its outputs. Paths and data go to stdout,
diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import signal
import sys
import time
from pathlib import Path

from . import __version__
from .docgen import build_datasheet, render
from .errors import MissingFile, Q16Error
from .kernels import DEFAULT_LOGIT_SCALE, pca2
from .review import DecisionLog, ReviewService
from .scan import EMIT_MODES, load_report, save_report, scan
from .stopwords import load_stopwords
from .store import (
    AnnotationSet,
    CaptionSet,
    container_paths,
    load_annotations,
    load_captions,
    load_store,
)
from .tuning import (
    DEFAULT_NEG_THRESHOLD,
    DEFAULT_POS_THRESHOLD,
    DEFAULT_SEED,
    TrainConfig,
    binarize,
    cross_validate,
    fewshot_curve,
    init_prompts,
    load_labels,
    load_model,
    load_ratings,
    save_model,
    train,
)

SEED_ENV = "Q16_SEED"
MANIFEST_NAME = "manifest.json"


class UsageError(Exception):
    """Bad invocation that argparse cannot catch itself (e.g. env vars)."""


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    dest: Path,
    subcommand: str,
    config: dict,
    inputs,
    outputs,
    seed,
    started_at: float,
) -> Path:
    manifest = {
        "subcommand": subcommand,
        "tool_version": __version__,
        "seed": seed,
        "started_at": int(started_at),
        "duration_seconds": round(time.time() - started_at, 6),
        "config": config,
        "inputs": {
            str(p): _sha256(p) for p in inputs if p is not None and Path(p).is_file()
        },
        "outputs": [str(p) for p in outputs],
    }
    dest.write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return dest


def _sibling_manifest(output_path: Path) -> Path:
    return output_path.with_name(output_path.name + ".manifest.json")


def _store_files(prefix) -> list:
    return list(container_paths(prefix))


def resolve_seed(args) -> int:
    explicit = getattr(args, "seed", None)
    if explicit is not None:
        return explicit
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return DEFAULT_SEED


# flag parsing helpers


def _parse_init(value: str):
    if value in ("class-mean", "random-sphere"):
        return value, None
    if value.startswith("file="):
        path = value[len("file=") :]
        if not path:
            raise argparse.ArgumentTypeError("file= needs a path")
        return "provided-file", path
    raise argparse.ArgumentTypeError(
        "must be class-mean, random-sphere, or file=PATH"
    )


def _parse_fractions(value: str):
    try:
        fractions = tuple(float(part) for part in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            "must be a comma-separated list of numbers"
        ) from None
    return fractions


def _add_label_source(parser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--ratings", help="rated-set file, one {id, rating} per line")
    source.add_argument("--labels", help="labeled-set file, one {id, label} per line")
    parser.add_argument(
        "--neg-threshold",
        type=float,
        default=DEFAULT_NEG_THRESHOLD,
        help="ratings strictly below this become class 1 (inappropriate)",
    )
    parser.add_argument(
        "--pos-threshold",
        type=float,
        default=DEFAULT_POS_THRESHOLD,
        help="ratings strictly above this become class 0",
    )


def _add_train_flags(parser) -> None:
    parser.add_argument("--lr", type=float, default=0.1, help="SGD learning rate")
    parser.add_argument("--epochs", type=int, default=500)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--logit-scale", type=float, default=DEFAULT_LOGIT_SCALE)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--init",
        type=_parse_init,
        default=("class-mean", None),
        help="prompt init: class-mean, random-sphere, or file=PATH",
    )


def _load_labeled(args):
    """Returns (labeled set, input paths used)."""
    if args.ratings is not None:
        rated = load_ratings(args.ratings)
        labeled = binarize(rated, args.neg_threshold, args.pos_threshold)
        return labeled, [args.ratings]
    return load_labels(args.labels), [args.labels]


def _train_config(args, seed: int, init_mode: str) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        logit_scale=args.logit_scale,
        seed=seed,
        init_mode=init_mode,
    )


# subcommands


def cmd_train(args) -> int:
    started = time.time()
    seed = resolve_seed(args)
    store = load_store(args.embeddings)
    labeled, label_inputs = _load_labeled(args)
    init_mode, init_file = args.init
    config = _train_config(args, seed, init_mode)
    init = init_prompts(init_mode, labeled, store, init_file=init_file, seed=seed)
    model = train(labeled, store, config, init)
    out = Path(args.model)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    config_dict = config.to_dict()
    config_dict.update(
        neg_threshold=args.neg_threshold,
        pos_threshold=args.pos_threshold,
        init_file=init_file,
    )
    inputs = _store_files(args.embeddings) + label_inputs
    if init_file is not None:
        inputs += _store_files(init_file)
    _write_manifest(
        _sibling_manifest(out), "train", config_dict, inputs, [out], seed, started
    )
    print(
        f"trained on {len(labeled)} examples, final loss "
        f"{model.loss_history[-1]:.6f}, fingerprint {model.fingerprint[:16]}",
        file=sys.stderr,
    )
    print(out)
    return 0


def cmd_eval(args) -> int:
    started = time.time()
    seed = resolve_seed(args)
    store = load_store(args.embeddings)
    labeled, label_inputs = _load_labeled(args)
    init_mode, init_file = args.init
    config = _train_config(args, seed, init_mode)
    if args.fractions is not None:
        curve = fewshot_curve(
            labeled, store, config, args.fractions, k=args.k, init_file=init_file
        )
        payload = {
            "fractions": {str(f): metrics.to_dict() for f, metrics in curve.items()}
        }
    else:
        payload = cross_validate(
            labeled, store, config, k=args.k, init_file=init_file
        ).to_dict()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "metrics.json"
    out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    config_dict = config.to_dict()
    config_dict.update(
        neg_threshold=args.neg_threshold,
        pos_threshold=args.pos_threshold,
        init_file=init_file,
        k=args.k,
        fractions=list(args.fractions) if args.fractions is not None else None,
    )
    inputs = _store_files(args.embeddings) + label_inputs
    if init_file is not None:
        inputs += _store_files(init_file)
    _write_manifest(
        out_dir / MANIFEST_NAME, "eval", config_dict, inputs, [out], seed, started
    )
    print(out)
    return 0


def cmd_scan(args) -> int:
    started = time.time()
    store = load_store(args.embeddings)
    model = load_model(args.model)
    report = scan(store, model, decision_threshold=args.threshold, emit=args.emit)
    out = Path(args.report)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_report(report, out)
    config_dict = {"decision_threshold": args.threshold, "emit": args.emit}
    inputs = _store_files(args.embeddings) + [args.model]
    _write_manifest(
        _sibling_manifest(out), "scan", config_dict, inputs, [out], None, started
    )
    print(
        f"flagged {report.flagged_count} of {report.total_count}", file=sys.stderr
    )
    print(out)
    return 0


def cmd_document(args) -> int:
    started = time.time()
    report = load_report(args.report)
    annotations = (
        load_annotations(args.annotations)
        if args.annotations is not None
        else AnnotationSet(by_id={})
    )
    captions = (
        load_captions(args.captions)
        if args.captions is not None
        else CaptionSet(by_id={})
    )
    stopwords = (
        load_stopwords(args.stopwords) if args.stopwords is not None else None
    )
    decisions = None
    if args.decisions is not None:
        if not Path(args.decisions).is_file():
            raise MissingFile(str(args.decisions))
        decisions = DecisionLog(args.decisions).effective
    datasheet = build_datasheet(
        report, annotations, captions, decisions=decisions, stopwords=stopwords
    )
    out_dir = Path(args.out_dir)
    written = render(datasheet, out_dir)
    config_dict = {
        "stopwords": str(args.stopwords) if args.stopwords is not None else "builtin",
        "generated_at": datasheet.generated_at,
    }
    inputs = [args.report, args.annotations, args.captions, args.stopwords, args.decisions]
    _write_manifest(
        out_dir / MANIFEST_NAME, "document", config_dict, inputs, written, None, started
    )
    for path in written:
        print(path)
    return 0


def cmd_serve(args) -> int:
    started = time.time()
    report = load_report(args.report)
    captions = (
        load_captions(args.captions)
        if args.captions is not None
        else CaptionSet(by_id={})
    )
    annotations = (
        load_annotations(args.annotations)
        if args.annotations is not None
        else AnnotationSet(by_id={})
    )
    log_path = Path(args.decisions)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    service = ReviewService(
        report,
        log_path=log_path,
        images_dir=args.images_dir,
        captions=captions,
        annotations=annotations,
        bind_address=args.bind,
    )
    config_dict = {"bind": args.bind, "images_dir": args.images_dir}
    inputs = [args.report, args.captions, args.annotations]
    _write_manifest(
        _sibling_manifest(log_path),
        "serve",
        config_dict,
        inputs,
        [log_path],
        None,
        started,
    )
    print(service.url, flush=True)
    signal.signal(signal.SIGTERM, lambda *_: sys.exit(0))
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.shutdown()
    return 0


def cmd_pca(args) -> int:
    started = time.time()
    store = load_store(args.embeddings)
    result = pca2(store.vectors)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "projection.csv"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y"])
        for image_id, row in zip(store.ids, result.projections):
            writer.writerow([image_id, repr(float(row[0])), repr(float(row[1]))])
    _write_manifest(
        out_dir / MANIFEST_NAME,
        "pca",
        {"components": 2},
        _store_files(args.embeddings),
        [out],
        None,
        started,
    )
    variances = ", ".join(f"{v:.6g}" for v in result.explained_variance)
    print(f"explained variance: {variances}", file=sys.stderr)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="q16",
        description="Dataset documentation pipeline over precomputed image embeddings.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")

    train_p = sub.add_parser(
        "train", help="fit prompt embeddings from rated or labeled examples"
    )
    train_p.add_argument("--embeddings", required=True, help="embedding container path")
    _add_label_source(train_p)
    _add_train_flags(train_p)
    train_p.add_argument("--model", required=True, help="output model file")
    train_p.set_defaults(func=cmd_train)

    eval_p = sub.add_parser(
        "eval", help="cross-validated metrics, optionally a few-shot curve"
    )
    eval_p.add_argument("--embeddings", required=True)
    _add_label_source(eval_p)
    _add_train_flags(eval_p)
    eval_p.add_argument("--k", type=int, default=10, help="number of folds")
    eval_p.add_argument(
        "--fractions",
        type=_parse_fractions,
        default=None,
        help="comma-separated training fractions for a few-shot curve",
    )
    eval_p.add_argument("--out-dir", required=True)
    eval_p.set_defaults(func=cmd_eval)

    scan_p = sub.add_parser("scan", help="score a dataset into a flag report")
    scan_p.add_argument("--embeddings", required=True)
    scan_p.add_argument("--model", required=True, help="trained model file")
    scan_p.add_argument("--threshold", type=float, default=0.5)
    scan_p.add_argument("--emit", choices=EMIT_MODES, default="flagged-only")
    scan_p.add_argument("--report", required=True, help="output report file")
    scan_p.set_defaults(func=cmd_scan)

    doc_p = sub.add_parser("document", help="render the datasheet answer")
    doc_p.add_argument("--report", required=True, help="flag report file")
    doc_p.add_argument("--captions", default=None)
    doc_p.add_argument("--annotations", default=None)
    doc_p.add_argument("--decisions", default=None, help="decision log to merge")
    doc_p.add_argument("--stopwords", default=None, help="custom stopword file")
    doc_p.add_argument("--out-dir", required=True)
    doc_p.set_defaults(func=cmd_document)

    serve_p = sub.add_parser("serve", help="run the human review service")
    serve_p.add_argument("--report", required=True)
    serve_p.add_argument("--captions", default=None)
    serve_p.add_argument("--annotations", default=None)
    serve_p.add_argument("--images-dir", default=None)
    serve_p.add_argument("--decisions", required=True, help="decision log path")
    serve_p.add_argument("--bind", default="127.0.0.1:8765")
    serve_p.set_defaults(func=cmd_serve)

    pca_p = sub.add_parser("pca", help="project embeddings to 2-D for plotting")
    pca_p.add_argument("--embeddings", required=True)
    pca_p.add_argument("--out-dir", required=True)
    pca_p.set_defaults(func=cmd_pca)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (Q16Error, ValueError, OSError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
