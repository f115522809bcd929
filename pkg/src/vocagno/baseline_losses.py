"""Reference distillation objectives on probability vectors.

Two baselines usable with the toy LM: KL-divergence distillation for
same-vocabulary teachers, and the sorted-distribution Wasserstein term that
handles mismatched vocabulary sizes (the sort makes it permutation-invariant
and zero-padding makes it size-agnostic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


class LengthMismatch(ValueError):
    pass


DEFAULT_DISTILL_WEIGHT = 0.5


@dataclass(frozen=True)
class BaselineLossConfig:
    distill_weight: float = DEFAULT_DISTILL_WEIGHT

    def __post_init__(self):
        if self.distill_weight < 0:
            raise ValueError("distill_weight must be >= 0")


def check_prob_vector(p: Sequence[float], atol: float = 1e-9) -> None:
    if any(x < 0 for x in p):
        raise ValueError("probability vector has negative entries")
    if abs(sum(p) - 1.0) > atol:
        raise ValueError(f"probability vector sums to {sum(p)}, not 1")


def kl_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """KL(p || q) with 0*log(0) = 0; +inf when q lacks mass that p has."""
    if len(p) != len(q):
        raise LengthMismatch(f"{len(p)} vs {len(q)}")
    total = 0.0
    for pi, qi in zip(p, q):
        if pi == 0.0:
            continue
        if qi == 0.0:
            return math.inf
        total += pi * math.log(pi / qi)
    return total


def uld_wasserstein(p: Sequence[float], q: Sequence[float]) -> float:
    """Discrete 1-Wasserstein between descending-sorted mass vectors.

    Vectors may have different lengths (different vocabularies); the shorter
    one is zero-padded after sorting.
    """
    ps = sorted(p, reverse=True)
    qs = sorted(q, reverse=True)
    n = max(len(ps), len(qs))
    ps += [0.0] * (n - len(ps))
    qs += [0.0] * (n - len(qs))
    return sum(abs(a - b) for a, b in zip(ps, qs))


def combined_loss(nll: float, distill_term: float, distill_weight: float) -> float:
    """Cross-entropy plus weighted distillation term."""
    return nll + distill_weight * distill_term
