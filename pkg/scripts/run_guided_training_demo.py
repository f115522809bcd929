#!/usr/bin/env python3
"""Train the toy LM under each objective and compare loss curves.

The student uses a character vocabulary while the teacher uses a greedy-merge
vocabulary of a different size, so only the selective objective can use the
teacher; KLD is shown on a same-vocabulary teacher for reference.
"""

import argparse
import random
import sys
from pathlib import Path

from vocagno.guidance import GuidanceConfig
from vocagno.tinylm import TeacherBundle, TrainConfig, init_params, train
from vocagno.toy_tokenizers import train_char, train_greedy_merge


def make_texts(rng, n_docs):
    texts = []
    for _ in range(n_docs):
        words = []
        for _ in range(rng.randint(8, 16)):
            k = rng.randint(1, 5)
            words.append("".join(rng.choice("abc") for _ in range(k)))
        texts.append(" ".join(words))
    return texts


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=8)
    parser.add_argument("--steps", type=int, default=150)
    parser.add_argument("--teacher-steps", type=int, default=300)
    parser.add_argument("--lr", type=float, default=0.5)
    parser.add_argument("--keep", type=float, default=0.4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-plot", type=Path, default=Path("training.png"))
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    texts = make_texts(rng, args.docs)
    s_vocab = train_char(texts)
    t_vocab = train_greedy_merge(texts, len(s_vocab) + 12)
    print(f"student vocab: {len(s_vocab)} entries, teacher vocab: {len(t_vocab)}")

    # pretrain both teachers with the plain objective
    cross_teacher_params, _ = train(
        init_params(len(t_vocab), seed=args.seed + 1),
        t_vocab, texts, TrainConfig(lr=args.lr, steps=args.teacher_steps),
    )
    same_teacher_params, _ = train(
        init_params(len(s_vocab), seed=args.seed + 2),
        s_vocab, texts, TrainConfig(lr=args.lr, steps=args.teacher_steps),
    )

    histories = {}
    configs = {
        "plain": (TrainConfig(lr=args.lr, steps=args.steps), None),
        "selective": (
            TrainConfig(lr=args.lr, steps=args.steps, objective="selective",
                        guidance=GuidanceConfig(keep_ratio=args.keep)),
            TeacherBundle(cross_teacher_params, t_vocab),
        ),
        "kld": (
            TrainConfig(lr=args.lr, steps=args.steps, objective="kld"),
            TeacherBundle(same_teacher_params, s_vocab),
        ),
        "uld": (
            TrainConfig(lr=args.lr, steps=args.steps, objective="uld"),
            TeacherBundle(cross_teacher_params, t_vocab),
        ),
    }
    for name, (config, teacher) in configs.items():
        params = init_params(len(s_vocab), seed=args.seed)
        _, hist = train(params, s_vocab, texts, config, teacher)
        histories[name] = hist
        print(f"{name:>10}: step 1 loss {hist[0]:.4f} -> step {args.steps} "
              f"loss {hist[-1]:.4f}")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name, hist in histories.items():
        ax.plot(range(1, len(hist) + 1), hist, label=name)
    ax.set_xlabel("step")
    ax.set_ylabel("objective value")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out_plot, dpi=150)
    print(f"wrote {args.out_plot}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
