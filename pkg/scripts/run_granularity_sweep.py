#!/usr/bin/env python3
"""Sweep chunk granularities on a synthetic corpus and plot IoU/IoS curves.

Generates a toy corpus with a char-level student and a greedy-merge teacher,
then compares equal-count chunking at several granularities against the
token-level alignment map.
"""

import argparse
import random
import sys
from pathlib import Path

from vocagno.alignment import (
    align,
    chunk_align,
    map_token_metrics,
    mean_chunk_metrics,
)
from vocagno.corpus_io import Role
from vocagno.toy_tokenizers import encode, train_char, train_greedy_merge


def make_corpus(rng, n_docs, words_per_doc):
    texts = []
    for _ in range(n_docs):
        words = []
        for _ in range(rng.randint(*words_per_doc)):
            k = rng.randint(1, 6)
            words.append("".join(rng.choice("abcdef") for _ in range(k)))
        texts.append(" ".join(words))
    return texts


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=200)
    parser.add_argument("--chunks", default="4,8,16,32,64")
    parser.add_argument("--merges", type=int, default=40,
                        help="extra merge entries for the teacher vocabulary")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-plot", type=Path, default=Path("granularity.png"))
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    settings = [int(s) for s in args.chunks.split(",")]
    texts = make_corpus(rng, args.docs, (60, 120))
    teacher_vocab = train_greedy_merge(texts, len(set("".join(texts))) + args.merges)

    iou = {k: 0.0 for k in settings}
    ios = {k: 0.0 for k in settings}
    token_iou = token_ios = 0.0
    for i, text in enumerate(texts):
        doc_id = f"doc{i:06d}"
        student = encode(train_char([text]), text, Role.STUDENT, doc_id)
        teacher = encode(teacher_vocab, text, Role.TEACHER, doc_id)
        for k in settings:
            m = mean_chunk_metrics(chunk_align(student, teacher, k))
            iou[k] += m.iou
            ios[k] += m.ios
        m = map_token_metrics(align(student, teacher), student, teacher)
        token_iou += m.iou
        token_ios += m.ios

    n = len(texts)
    print(f"{'setting':>10}  {'mean_iou':>8}  {'mean_ios':>8}")
    for k in settings:
        print(f"{k:>10}  {iou[k] / n:8.4f}  {ios[k] / n:8.4f}")
    print(f"{'tokenlevel':>10}  {token_iou / n:8.4f}  {token_ios / n:8.4f}")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(settings, [iou[k] / n for k in settings], "o-", label="chunk IoU")
    ax.plot(settings, [ios[k] / n for k in settings], "s-", label="chunk IoS")
    ax.axhline(token_ios / n, ls="--", color="gray", label="token-level IoS")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("number of chunks")
    ax.set_ylabel("mean overlap")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out_plot, dpi=150)
    print(f"wrote {args.out_plot}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
