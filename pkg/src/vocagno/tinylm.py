"""A desk-scale causal language model with exact analytic gradients.

Architecture: token embeddings for a fixed window of preceding tokens,
concatenated, through one tanh hidden layer to a softmax over the
vocabulary. Deliberately the smallest differentiable causal LM: the guidance
mechanism it demonstrates is architecture-agnostic, and full-batch plain
gradient descent keeps every training run bit-deterministic.

Objectives: plain cross-entropy; selective (gradient flows only through
tokens selected by teacher guidance); KL distillation (same-vocabulary
teacher); sorted-Wasserstein distillation (vocabulary-size-agnostic).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import guidance as gd
from .alignment import align
from .toy_tokenizers import ToyVocab, encode

PARAMS_FORMAT_VERSION = 1


class IdOutOfRange(Exception):
    pass


class VocabMismatch(Exception):
    pass


@dataclass
class TinyLMParams:
    vocab_size: int
    embed_dim: int
    hidden_dim: int
    context: int
    rng_seed: int
    emb: np.ndarray  # (vocab_size, embed_dim)
    w1: np.ndarray  # (hidden_dim, context * embed_dim)
    b1: np.ndarray  # (hidden_dim,)
    w2: np.ndarray  # (vocab_size, hidden_dim)
    b2: np.ndarray  # (vocab_size,)

    def copy(self) -> "TinyLMParams":
        return TinyLMParams(
            self.vocab_size,
            self.embed_dim,
            self.hidden_dim,
            self.context,
            self.rng_seed,
            self.emb.copy(),
            self.w1.copy(),
            self.b1.copy(),
            self.w2.copy(),
            self.b2.copy(),
        )

    def weight_arrays(self) -> dict[str, np.ndarray]:
        return {"emb": self.emb, "w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


def init_params(
    vocab_size: int,
    embed_dim: int = 8,
    hidden_dim: int = 16,
    context: int = 3,
    seed: int = 0,
    scale: float = 0.1,
    zero_output: bool = False,
) -> TinyLMParams:
    if min(vocab_size, embed_dim, hidden_dim, context) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    emb = rng.normal(0.0, scale, (vocab_size, embed_dim))
    w1 = rng.normal(0.0, scale, (hidden_dim, context * embed_dim))
    b1 = np.zeros(hidden_dim)
    if zero_output:
        w2 = np.zeros((vocab_size, hidden_dim))
    else:
        w2 = rng.normal(0.0, scale, (vocab_size, hidden_dim))
    b2 = np.zeros(vocab_size)
    return TinyLMParams(vocab_size, embed_dim, hidden_dim, context, seed, emb, w1, b1, w2, b2)


def _check_ids(params: TinyLMParams, ids: np.ndarray) -> None:
    if ids.size and (ids.min() < 0 or ids.max() >= params.vocab_size):
        raise IdOutOfRange(
            f"token id outside [0, {params.vocab_size}) in {ids.tolist()}"
        )


def _context_ids(ids: np.ndarray, context: int) -> np.ndarray:
    # history shorter than the window is padded with id 0
    padded = np.concatenate([np.zeros(context, dtype=np.int64), ids])
    return np.lib.stride_tricks.sliding_window_view(padded, context)[: ids.size]


def _forward_full(params: TinyLMParams, ids: np.ndarray):
    ctx = _context_ids(ids, params.context)
    x = params.emb[ctx].reshape(ids.size, params.context * params.embed_dim)
    h = np.tanh(x @ params.w1.T + params.b1)
    logits = h @ params.w2.T + params.b2
    logits = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(logits).sum(axis=1, keepdims=True))
    logp = logits - logz
    return ctx, x, h, logp, np.exp(logp)


def forward_nll(params: TinyLMParams, ids: Sequence[int]):
    """Per-position negative log-likelihood and probability rows.

    Position i is scored given the previous ``context`` token ids (zero-id
    padded), so the loss vector has one entry per token.
    """
    ids = np.asarray(ids, dtype=np.int64)
    _check_ids(params, ids)
    _, _, _, logp, p = _forward_full(params, ids)
    nll = -logp[np.arange(ids.size), ids]
    return nll, p


@dataclass(frozen=True)
class Plain:
    pass


@dataclass(frozen=True)
class Selective:
    """Masks are 0/1 arrays, one per batch document, from the guidance pipeline."""

    masks: tuple
    normalize: gd.Normalize = gd.Normalize.BY_SELECTED


@dataclass(frozen=True)
class KLDistill:
    teacher: TinyLMParams
    distill_weight: float = 1.0


@dataclass(frozen=True)
class ULDistill:
    teacher: TinyLMParams
    teacher_batch: tuple  # teacher token-id arrays, one per batch document
    distill_weight: float = 0.5


@dataclass
class Grads:
    emb: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


def _zero_grads(params: TinyLMParams) -> Grads:
    return Grads(
        np.zeros_like(params.emb),
        np.zeros_like(params.w1),
        np.zeros_like(params.b1),
        np.zeros_like(params.w2),
        np.zeros_like(params.b2),
    )


def _nll_coeffs(objective, batch_sizes: Sequence[int]):
    """Per-document arrays of d(objective)/d(nll_i) for the cross-entropy part."""
    total = sum(batch_sizes)
    if isinstance(objective, Selective):
        masks = [np.asarray(m, dtype=np.float64) for m in objective.masks]
        if len(masks) != len(batch_sizes) or any(
            m.size != n for m, n in zip(masks, batch_sizes)
        ):
            raise gd.LengthMismatch("mask shapes do not match the batch")
        selected = sum(float(m.sum()) for m in masks)
        if objective.normalize is gd.Normalize.BY_SELECTED:
            if selected == 0:
                raise gd.NoSelectedTokens("selective objective with empty mask")
            norm = selected
        else:
            norm = total
        return [m / norm for m in masks]
    return [np.full(n, 1.0 / total) for n in batch_sizes]


def _sorted_wd_and_sign(p_s: np.ndarray, p_t: np.ndarray):
    """Wasserstein between descending-sorted padded vectors, plus the
    per-coordinate subgradient sign for the student vector."""
    vs, vt = p_s.size, p_t.size
    n = max(vs, vt)
    order = np.argsort(-p_s, kind="stable")
    ps = np.zeros(n)
    ps[:vs] = p_s[order]
    qs = np.zeros(n)
    t_sorted = np.sort(p_t)[::-1]
    qs[:vt] = t_sorted
    diff = ps - qs
    wd = float(np.abs(diff).sum())
    sign = np.empty(vs)
    sign[order] = np.sign(diff[:vs])
    return wd, sign


def objective_value(params: TinyLMParams, batch: Sequence, objective) -> float:
    """Scalar objective on a batch of student token-id arrays (no gradients)."""
    value, _ = _value_and_grad(params, batch, objective, want_grad=False)
    return value


def grad(params: TinyLMParams, batch: Sequence, objective):
    """Exact analytic gradient of the objective; returns (value, Grads)."""
    return _value_and_grad(params, batch, objective, want_grad=True)


def _value_and_grad(params, batch, objective, want_grad):
    batch = [np.asarray(ids, dtype=np.int64) for ids in batch]
    for ids in batch:
        _check_ids(params, ids)
    if isinstance(objective, KLDistill) and objective.teacher.vocab_size != params.vocab_size:
        raise VocabMismatch(
            f"KL distillation needs a shared vocabulary: teacher "
            f"{objective.teacher.vocab_size} vs student {params.vocab_size}"
        )

    coeffs = _nll_coeffs(objective, [ids.size for ids in batch])
    grads = _zero_grads(params) if want_grad else None
    total_positions = sum(ids.size for ids in batch)
    value = 0.0
    distill_value = 0.0

    if isinstance(objective, ULDistill):
        if len(objective.teacher_batch) != len(batch):
            raise gd.LengthMismatch("teacher batch does not match student batch")
        pair_count = sum(
            min(ids.size, np.asarray(t).size)
            for ids, t in zip(batch, objective.teacher_batch)
        )

    for d, ids in enumerate(batch):
        ctx, x, h, logp, p = _forward_full(params, ids)
        pos = np.arange(ids.size)
        nll = -logp[pos, ids]
        coef = coeffs[d]
        value += float((coef * nll).sum())

        dlogits = None
        if want_grad:
            dlogits = p * coef[:, None]
            dlogits[pos, ids] -= coef

        if isinstance(objective, KLDistill):
            _, _, _, t_logp, _ = _forward_full(objective.teacher, ids)
            g = logp - t_logp
            kl = (p * g).sum(axis=1)
            a = objective.distill_weight / total_positions
            distill_value += float(a * kl.sum())
            if want_grad:
                dlogits += a * p * (g - kl[:, None])
        elif isinstance(objective, ULDistill):
            t_ids = np.asarray(objective.teacher_batch[d], dtype=np.int64)
            _, _, _, _, t_p = _forward_full(objective.teacher, t_ids)
            npair = min(ids.size, t_ids.size)
            a = objective.distill_weight / pair_count if pair_count else 0.0
            for i in range(npair):
                wd, sign = _sorted_wd_and_sign(p[i], t_p[i])
                distill_value += a * wd
                if want_grad:
                    dlogits[i] += a * p[i] * (sign - float(p[i] @ sign))

        if want_grad:
            grads.w2 += dlogits.T @ h
            grads.b2 += dlogits.sum(axis=0)
            dh = dlogits @ params.w2
            dpre = dh * (1.0 - h * h)
            grads.w1 += dpre.T @ x
            grads.b1 += dpre.sum(axis=0)
            dx = (dpre @ params.w1).reshape(ids.size, params.context, params.embed_dim)
            np.add.at(grads.emb, ctx, dx)

    return value + distill_value, grads


@dataclass(frozen=True)
class TrainConfig:
    lr: float
    steps: int
    batch_size: int = 0  # 0 = full batch
    objective: str = "plain"  # plain | selective | kld | uld
    distill_weight: float = 0.5
    guidance: Optional[gd.GuidanceConfig] = None
    normalize: gd.Normalize = gd.Normalize.BY_SELECTED

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.objective not in ("plain", "selective", "kld", "uld"):
            raise ValueError(f"unknown objective {self.objective!r}")


@dataclass(frozen=True)
class TeacherBundle:
    params: TinyLMParams
    vocab: ToyVocab


def train(
    params: TinyLMParams,
    vocab: ToyVocab,
    texts: Sequence[str],
    config: TrainConfig,
    teacher: Optional[TeacherBundle] = None,
):
    """Gradient-descent training; returns (trained params, loss history).

    Fully deterministic: documents are visited in order, batches are
    contiguous cyclic slices (full batch by default), and there is no
    stochastic optimizer state. For the selective objective the teacher may
    use a different vocabulary; token weights are recomputed every step from
    the current student losses against the fixed teacher losses.
    """
    if config.objective in ("selective", "kld", "uld") and teacher is None:
        raise ValueError(f"objective {config.objective!r} requires a teacher")
    if config.objective == "kld" and teacher.vocab.entries != vocab.entries:
        raise VocabMismatch(
            "KL distillation requires identical vocabularies "
            f"(teacher {len(teacher.vocab)} entries vs student {len(vocab)})"
        )

    student_seqs = [encode(vocab, t, doc_id=f"doc{i}") for i, t in enumerate(texts)]
    docs = [
        np.asarray([t.token_id for t in seq.tokens], dtype=np.int64)
        for seq in student_seqs
    ]
    keep = [i for i, ids in enumerate(docs) if ids.size > 0]
    docs = [docs[i] for i in keep]
    student_seqs = [student_seqs[i] for i in keep]

    teacher_agg = None
    teacher_docs = None
    if config.objective == "selective":
        g_conf = config.guidance or gd.GuidanceConfig()
        teacher_seqs = [
            encode(teacher.vocab, texts[i], doc_id=f"doc{i}") for i in keep
        ]
        maps = [align(s, t) for s, t in zip(student_seqs, teacher_seqs)]
        teacher_agg = []
        for tseq, amap in zip(teacher_seqs, maps):
            t_ids = [t.token_id for t in tseq.tokens]
            t_nll, _ = forward_nll(teacher.params, t_ids) if t_ids else (np.array([]), None)
            teacher_agg.append(
                gd.aggregate_teacher_loss(amap, t_nll.tolist(), g_conf.phi)
            )
    elif config.objective == "uld":
        teacher_docs = [
            np.asarray(
                [t.token_id for t in encode(teacher.vocab, texts[i]).tokens],
                dtype=np.int64,
            )
            for i in keep
        ]

    params = params.copy()
    history: list[float] = []
    n_docs = len(docs)
    bs = config.batch_size if 0 < config.batch_size < n_docs else n_docs
    for step in range(config.steps):
        start = (step * bs) % n_docs
        idx = [(start + r) % n_docs for r in range(bs)]
        batch = [docs[i] for i in idx]

        if config.objective == "plain":
            obj = Plain()
        elif config.objective == "kld":
            obj = KLDistill(teacher.params, config.distill_weight)
        elif config.objective == "uld":
            obj = ULDistill(
                teacher.params,
                tuple(teacher_docs[i] for i in idx),
                config.distill_weight,
            )
        else:
            g_conf = config.guidance or gd.GuidanceConfig()
            s_losses = [forward_nll(params, ids)[0].tolist() for ids in batch]
            t_agg = [teacher_agg[i] for i in idx]
            weights = gd.select_tokens(s_losses, t_agg, g_conf)
            obj = Selective(
                tuple(np.asarray(w.w, dtype=np.float64) for w in weights),
                config.normalize,
            )

        value, g = grad(params, batch, obj)
        history.append(value)
        params.emb -= config.lr * g.emb
        params.w1 -= config.lr * g.w1
        params.b1 -= config.lr * g.b1
        params.w2 -= config.lr * g.w2
        params.b2 -= config.lr * g.b2
    return params, history


def save_params(path, params: TinyLMParams) -> None:
    obj = {
        "version": PARAMS_FORMAT_VERSION,
        "vocab_size": params.vocab_size,
        "embed_dim": params.embed_dim,
        "hidden_dim": params.hidden_dim,
        "context": params.context,
        "rng_seed": params.rng_seed,
        "weights": {
            name: arr.ravel().tolist() for name, arr in params.weight_arrays().items()
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, separators=(",", ":"))
        fh.write("\n")


def load_params(path) -> TinyLMParams:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("version") != PARAMS_FORMAT_VERSION:
        raise ValueError(f"unsupported params file version {obj.get('version')}")
    v, d, h, c = (
        obj["vocab_size"],
        obj["embed_dim"],
        obj["hidden_dim"],
        obj["context"],
    )
    w = obj["weights"]
    return TinyLMParams(
        v,
        d,
        h,
        c,
        obj["rng_seed"],
        np.asarray(w["emb"]).reshape(v, d),
        np.asarray(w["w1"]).reshape(h, c * d),
        np.asarray(w["b1"]).reshape(h),
        np.asarray(w["w2"]).reshape(v, h),
        np.asarray(w["b2"]).reshape(v),
    )
