"""Command-line entry point wiring the modules into batch workflows.

Every run writes a sidecar ``<out>.manifest.json`` recording the resolved
configuration; re-running with the same arguments reproduces the output
byte-identically. Exit codes: 0 success, 1 input/validation error, 2
internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from . import guidance as gd
from . import tinylm
from .alignment import (
    DocMismatch,
    align,
    chunk_align,
    map_token_metrics,
    mean_chunk_metrics,
)
from .corpus_io import (
    CorpusError,
    CorpusRecord,
    read_corpus,
    read_masks,
    write_corpus,
    write_masks,
)
from .toy_tokenizers import EmptyCorpus, EmptyVocab, encode, load_vocab
from .corpus_io import Role

SEED_ENV = "VOCAGNO_SEED"


def _resolve_seed(cli_seed: int) -> int:
    env = os.environ.get(SEED_ENV)
    return int(env) if env else cli_seed


def _write_manifest(out_path: str, subcommand: str, config: dict, started: float) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "tool_version": __version__,
        "wall_clock_s": round(time.monotonic() - started, 3),
    }
    with open(str(out_path) + ".manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parallel_map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_vocab_or_die(path):
    try:
        return load_vocab(path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise SystemExit2(f"cannot load vocabulary {path}: {exc}")


class SystemExit2(Exception):
    """Input/validation failure; maps to exit code 1."""


def cmd_tokenize(args) -> int:
    started = time.monotonic()
    vocab_a = _load_vocab_or_die(args.vocab_a)
    vocab_b = _load_vocab_or_die(args.vocab_b)
    records = []
    with open(args.text_in, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            text = line.rstrip("\n")
            if not text:
                continue
            doc_id = f"doc{i:06d}"
            records.append(
                CorpusRecord(
                    doc_id=doc_id,
                    text_len=len(text),
                    student=encode(vocab_a, text, Role.STUDENT, doc_id),
                    teacher=encode(vocab_b, text, Role.TEACHER, doc_id),
                )
            )
    write_corpus(args.out, records)
    _write_manifest(
        args.out,
        "tokenize",
        {
            "vocab_a": str(args.vocab_a),
            "vocab_b": str(args.vocab_b),
            "text_in": str(args.text_in),
            "out": str(args.out),
        },
        started,
    )
    return 0


def cmd_align(args) -> int:
    started = time.monotonic()
    records = list(read_corpus(args.in_path))

    def one(rec):
        amap = align(rec.student, rec.teacher)
        return rec.doc_id, amap.to_lists(), [1] * len(amap)

    write_masks(args.out, _parallel_map(one, records, args.jobs))
    _write_manifest(
        args.out,
        "align",
        {"in": str(args.in_path), "out": str(args.out), "jobs": args.jobs},
        started,
    )
    return 0


def cmd_metrics(args) -> int:
    started = time.monotonic()
    chunk_counts = [int(c) for c in args.chunks.split(",") if c.strip()]
    if any(c < 1 for c in chunk_counts):
        raise SystemExit2("chunk counts must be >= 1")
    records = list(read_corpus(args.in_path))

    def one(rec):
        rows = []
        for k in chunk_counts:
            m = mean_chunk_metrics(chunk_align(rec.student, rec.teacher, k))
            rows.append((rec.doc_id, str(k), m.iou, m.ios))
        amap = align(rec.student, rec.teacher)
        m = map_token_metrics(amap, rec.student, rec.teacher)
        rows.append((rec.doc_id, "tokenlevel", m.iou, m.ios))
        return rows

    all_rows = _parallel_map(one, records, args.jobs)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["doc_id", "num_chunks", "mean_iou", "mean_ios"])
        for rows in all_rows:
            for doc_id, k, iou, ios in rows:
                writer.writerow([doc_id, k, f"{iou:.6f}", f"{ios:.6f}"])
    _write_manifest(
        args.out,
        "metrics",
        {
            "in": str(args.in_path),
            "out": str(args.out),
            "chunks": chunk_counts,
            "jobs": args.jobs,
        },
        started,
    )
    return 0


def _guidance_config(args) -> gd.GuidanceConfig:
    return gd.GuidanceConfig(
        phi=gd.Phi(args.phi),
        unmapped=gd.UnmappedPolicy(args.unmapped),
        keep_ratio=args.keep,
        scope=gd.ThresholdScope(args.scope),
    )


def cmd_select(args) -> int:
    started = time.monotonic()
    config = _guidance_config(args)
    records = list(read_corpus(args.in_path))
    for rec in records:
        if rec.student_losses is None or rec.teacher_losses is None:
            raise SystemExit2(
                f"doc {rec.doc_id!r}: select needs student and teacher losses"
            )

    if args.mapping:
        by_doc = {doc_id: mapping for doc_id, mapping, _ in read_masks(args.mapping)}
        try:
            maps = [by_doc[rec.doc_id] for rec in records]
        except KeyError as exc:
            raise SystemExit2(f"mapping file lacks doc {exc}")
        teacher_agg = [
            _aggregate_from_lists(m, rec.teacher_losses, config.phi)
            for m, rec in zip(maps, records)
        ]
    else:
        amaps = _parallel_map(
            lambda rec: align(rec.student, rec.teacher), records, args.jobs
        )
        maps = [m.to_lists() for m in amaps]
        teacher_agg = [
            gd.aggregate_teacher_loss(m, rec.teacher_losses, config.phi)
            for m, rec in zip(amaps, records)
        ]

    student_losses = [rec.student_losses for rec in records]
    weights = gd.select_tokens(student_losses, teacher_agg, config)
    write_masks(
        args.out,
        [(rec.doc_id, m, w.w) for rec, m, w in zip(records, maps, weights)],
    )
    _write_manifest(
        args.out,
        "select",
        {
            "in": str(args.in_path),
            "out": str(args.out),
            "mapping": str(args.mapping) if args.mapping else None,
            "phi": config.phi.value,
            "unmapped": config.unmapped.value,
            "keep": config.keep_ratio,
            "scope": config.scope.value,
            "jobs": args.jobs,
        },
        started,
    )
    return 0


def _aggregate_from_lists(mapping, teacher_losses, phi: gd.Phi):
    out = []
    for entry in mapping:
        if entry is None:
            out.append(None)
            continue
        j, k = entry
        if j < 0 or k >= len(teacher_losses) or j > k:
            raise gd.IndexOutOfRange(f"mapping range ({j},{k})")
        window = teacher_losses[j : k + 1]
        if phi is gd.Phi.MEAN:
            out.append(sum(window) / len(window))
        elif phi is gd.Phi.MAX:
            out.append(max(window))
        else:
            out.append(sum(window))
    return out


def cmd_train_toy(args) -> int:
    started = time.monotonic()
    seed = _resolve_seed(args.seed)
    vocab = _load_vocab_or_die(args.student_vocab)
    with open(args.text_in, "r", encoding="utf-8") as fh:
        texts = [line.rstrip("\n") for line in fh if line.strip()]
    if not texts:
        raise SystemExit2(f"no documents in {args.text_in}")

    teacher = None
    if args.objective in ("selective", "kld", "uld"):
        if not args.teacher_vocab:
            raise SystemExit2(f"objective {args.objective} requires --teacher-vocab")
        t_vocab = _load_vocab_or_die(args.teacher_vocab)
        if args.teacher_params:
            t_params = tinylm.load_params(args.teacher_params)
        else:
            t_params = tinylm.init_params(len(t_vocab), seed=seed + 1)
            t_params, _ = tinylm.train(
                t_params,
                t_vocab,
                texts,
                tinylm.TrainConfig(lr=args.lr, steps=args.teacher_steps),
            )
        teacher = tinylm.TeacherBundle(t_params, t_vocab)

    config = tinylm.TrainConfig(
        lr=args.lr,
        steps=args.steps,
        objective=args.objective,
        distill_weight=args.distill_weight,
        guidance=_guidance_config(args),
    )
    params = tinylm.init_params(len(vocab), seed=seed)
    params, history = tinylm.train(params, vocab, texts, config, teacher)

    with open(args.out_history, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "loss"])
        for i, v in enumerate(history):
            writer.writerow([i, repr(v)])
    if args.out_params:
        tinylm.save_params(args.out_params, params)
    _write_manifest(
        args.out_history,
        "train-toy",
        {
            "text_in": str(args.text_in),
            "student_vocab": str(args.student_vocab),
            "teacher_vocab": str(args.teacher_vocab) if args.teacher_vocab else None,
            "objective": args.objective,
            "lr": args.lr,
            "steps": args.steps,
            "teacher_steps": args.teacher_steps,
            "distill_weight": args.distill_weight,
            "phi": args.phi,
            "unmapped": args.unmapped,
            "keep": args.keep,
            "scope": args.scope,
            "seed": seed,
        },
        started,
    )
    return 0


def cmd_report(args) -> int:
    started = time.monotonic()
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    by_setting: dict[str, list[tuple[float, float]]] = {}
    with open(args.in_path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            by_setting.setdefault(row["num_chunks"], []).append(
                (float(row["mean_iou"]), float(row["mean_ios"]))
            )
    if not by_setting:
        raise SystemExit2(f"no rows in {args.in_path}")

    def _mean(vals):
        return sum(vals) / len(vals)

    summary = {
        k: (_mean([a for a, _ in v]), _mean([b for _, b in v]))
        for k, v in by_setting.items()
    }
    chunk_keys = sorted((k for k in summary if k != "tokenlevel"), key=int)

    lines = [f"{'setting':>12}  {'mean_iou':>8}  {'mean_ios':>8}"]
    for k in chunk_keys + (["tokenlevel"] if "tokenlevel" in summary else []):
        iou, ios = summary[k]
        lines.append(f"{k:>12}  {iou:8.4f}  {ios:8.4f}")
    with open(args.out_table, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [int(k) for k in chunk_keys]
    ax.plot(xs, [summary[k][0] for k in chunk_keys], "o-", label="chunk mean IoU")
    ax.plot(xs, [summary[k][1] for k in chunk_keys], "s-", label="chunk mean IoS")
    if "tokenlevel" in summary:
        ax.axhline(summary["tokenlevel"][1], color="green", ls="--", label="token-level IoS")
        ax.axhline(summary["tokenlevel"][0], color="gray", ls=":", label="token-level IoU")
    ax.set_xlabel("number of chunks")
    ax.set_ylabel("mean overlap")
    ax.set_xscale("log", base=2)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out_plot)
    plt.close(fig)

    _write_manifest(
        args.out_table,
        "report",
        {
            "in": str(args.in_path),
            "out_plot": str(args.out_plot),
            "out_table": str(args.out_table),
        },
        started,
    )
    return 0


def _add_guidance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--phi", choices=[e.value for e in gd.Phi], default="mean")
    p.add_argument(
        "--unmapped", choices=[e.value for e in gd.UnmappedPolicy], default="include"
    )
    p.add_argument("--keep", type=float, default=0.4, help="keep ratio in (0,1]")
    p.add_argument(
        "--scope",
        choices=[e.value for e in gd.ThresholdScope],
        default="sequence",
        help="ranking scope: per sequence (streaming-friendly default) or per batch",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vocagno",
        description="Cross-tokenizer alignment and teacher-guided token selection",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="tokenize raw text under two vocabularies")
    p.add_argument("--vocab-a", required=True)
    p.add_argument("--vocab-b", required=True)
    p.add_argument("--text-in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("align", help="emit token alignment maps for a corpus")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("metrics", help="chunking sweep + token-level overlap CSV")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--chunks", default="8,16,32,64")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("select", help="emit teacher-guided token weight masks")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mapping", help="precomputed alignment JSONL (from `align`)")
    p.add_argument("--jobs", type=int, default=1)
    _add_guidance_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train-toy", help="train the toy LM, optionally teacher-guided")
    p.add_argument("--text-in", required=True)
    p.add_argument("--student-vocab", required=True)
    p.add_argument("--teacher-vocab")
    p.add_argument("--teacher-params")
    p.add_argument(
        "--objective", choices=["plain", "selective", "kld", "uld"], default="plain"
    )
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--teacher-steps", type=int, default=200)
    p.add_argument("--distill-weight", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0, help=f"overridden by ${SEED_ENV}")
    p.add_argument("--out-history", required=True)
    p.add_argument("--out-params")
    _add_guidance_flags(p)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("report", help="render a metrics CSV to a plot and text table")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out-plot", required=True)
    p.add_argument("--out-table", required=True)
    p.set_defaults(func=cmd_report)

    return parser


_INPUT_ERRORS = (
    SystemExit2,
    CorpusError,
    DocMismatch,
    gd.GuidanceError,
    EmptyCorpus,
    EmptyVocab,
    tinylm.VocabMismatch,
    tinylm.IdOutOfRange,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    ValueError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"vocagno: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"vocagno: internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
