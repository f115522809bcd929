"""Teacher-loss-guided binary token weights.

Per-student-token teacher losses are aggregated over the mapped teacher
range, the excess of student over teacher loss ranks the tokens, and the
top keep_ratio fraction of competing tokens is selected. Unmapped tokens are
handled by one of three strategies: Include (always train them), Exclude
(always drop them), or MeanFill (substitute the scope-mean teacher loss and
let them compete).

This module is deliberately plain Python (no numpy): selection must be
bit-reproducible across reimplementations, so the arithmetic and the sort
order are kept elementary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .alignment import AlignmentMap


class GuidanceError(Exception):
    pass


class LengthMismatch(GuidanceError):
    pass


class IndexOutOfRange(GuidanceError):
    pass


class EmptyScope(GuidanceError):
    pass


class NoSelectedTokens(GuidanceError):
    pass


class Phi(str, Enum):
    MEAN = "mean"
    MAX = "max"
    SUM = "sum"


class UnmappedPolicy(str, Enum):
    INCLUDE = "include"
    EXCLUDE = "exclude"
    MEAN_FILL = "mean"


class ThresholdScope(str, Enum):
    PER_SEQUENCE = "sequence"
    PER_BATCH = "batch"


class Normalize(str, Enum):
    BY_SELECTED = "by_selected"
    BY_ALL = "by_all"


@dataclass(frozen=True)
class GuidanceConfig:
    phi: Phi = Phi.MEAN
    unmapped: UnmappedPolicy = UnmappedPolicy.INCLUDE
    keep_ratio: float = 0.4
    scope: ThresholdScope = ThresholdScope.PER_SEQUENCE

    def __post_init__(self):
        if not (0.0 < self.keep_ratio <= 1.0):
            raise ValueError(f"keep_ratio {self.keep_ratio} outside (0, 1]")


@dataclass(frozen=True)
class TokenWeights:
    w: tuple[int, ...]
    selected_count: int

    @classmethod
    def from_list(cls, w: Sequence[int]) -> "TokenWeights":
        w = tuple(int(x) for x in w)
        return cls(w, sum(w))

    def __len__(self) -> int:
        return len(self.w)


def aggregate_teacher_loss(
    amap: AlignmentMap, teacher_losses: Sequence[float], phi: Phi
) -> list[Optional[float]]:
    """Reduce each mapped teacher loss range to one value; None when unmapped."""
    out: list[Optional[float]] = []
    m = len(teacher_losses)
    for e in amap:
        if e.is_unmapped:
            out.append(None)
            continue
        if e.j < 0 or e.k >= m or e.j > e.k:
            raise IndexOutOfRange(f"mapping range ({e.j},{e.k}) vs {m} teacher losses")
        window = teacher_losses[e.j : e.k + 1]
        if phi is Phi.MEAN:
            out.append(sum(window) / len(window))
        elif phi is Phi.MAX:
            out.append(max(window))
        else:
            out.append(sum(window))
    return out


def excess_loss(
    student_losses: Sequence[float], teacher_agg: Sequence[Optional[float]]
) -> list[Optional[float]]:
    """Per-token student-minus-teacher loss; None propagates from unmapped."""
    if len(student_losses) != len(teacher_agg):
        raise LengthMismatch(f"{len(student_losses)} vs {len(teacher_agg)}")
    return [
        None if t is None else s - t for s, t in zip(student_losses, teacher_agg)
    ]


def select_tokens(
    student_losses: Sequence[Sequence[float]],
    teacher_agg: Sequence[Sequence[Optional[float]]],
    config: GuidanceConfig,
) -> list[TokenWeights]:
    """Binary weights per sequence from losses and aggregated teacher guidance.

    Tokens whose teacher aggregate is None are unmapped. Within each scope
    (one sequence, or the whole batch), the ceil(keep_ratio * competing)
    tokens with the largest excess loss get weight 1; ties break toward the
    earlier (sequence, token) position. Unmapped tokens are forced to 1 under
    Include, to 0 under Exclude, and compete after mean-filling under
    MeanFill.
    """
    if len(student_losses) != len(teacher_agg):
        raise LengthMismatch(f"{len(student_losses)} sequences vs {len(teacher_agg)}")
    for s, t in zip(student_losses, teacher_agg):
        if len(s) != len(t):
            raise LengthMismatch(f"{len(s)} losses vs {len(t)} teacher aggregates")

    n_seq = len(student_losses)
    if config.scope is ThresholdScope.PER_BATCH:
        groups = [list(range(n_seq))]
    else:
        groups = [[s] for s in range(n_seq)]

    weights: list[list[int]] = [[0] * len(s) for s in student_losses]
    for group in groups:
        _select_in_scope(group, student_losses, teacher_agg, config, weights)
    return [TokenWeights.from_list(w) for w in weights]


def _select_in_scope(group, student_losses, teacher_agg, config, weights) -> None:
    present = [
        (s, i)
        for s in group
        for i in range(len(student_losses[s]))
        if teacher_agg[s][i] is not None
    ]
    absent = [
        (s, i)
        for s in group
        for i in range(len(student_losses[s]))
        if teacher_agg[s][i] is None
    ]

    if config.unmapped is UnmappedPolicy.MEAN_FILL:
        if not present:
            raise EmptyScope("mean-fill with no mapped tokens in scope")
        mean_t = sum(teacher_agg[s][i] for s, i in present) / len(present)
        competing = [
            (student_losses[s][i] - teacher_agg[s][i], s, i) for s, i in present
        ] + [(student_losses[s][i] - mean_t, s, i) for s, i in absent]
    else:
        if not present:
            if config.unmapped is UnmappedPolicy.EXCLUDE:
                raise EmptyScope("no mapped tokens in scope")
            for s, i in absent:
                weights[s][i] = 1
            return
        competing = [
            (student_losses[s][i] - teacher_agg[s][i], s, i) for s, i in present
        ]

    keep = math.ceil(config.keep_ratio * len(competing))
    competing.sort(key=lambda item: (-item[0], item[1], item[2]))
    for _, s, i in competing[:keep]:
        weights[s][i] = 1

    if config.unmapped is UnmappedPolicy.INCLUDE:
        for s, i in absent:
            weights[s][i] = 1
    elif config.unmapped is UnmappedPolicy.EXCLUDE:
        for s, i in absent:
            weights[s][i] = 0


def reweighted_loss(
    student_losses: Sequence[float],
    weights: TokenWeights,
    normalize: Normalize = Normalize.BY_SELECTED,
) -> float:
    """Weighted student loss: selected-token mean, or sum over selected / N."""
    if len(student_losses) != len(weights.w):
        raise LengthMismatch(f"{len(student_losses)} losses vs {len(weights.w)} weights")
    total = sum(l for l, w in zip(student_losses, weights.w) if w)
    if normalize is Normalize.BY_SELECTED:
        if weights.selected_count == 0:
            raise NoSelectedTokens("cannot normalize by zero selected tokens")
        return total / weights.selected_count
    return total / len(student_losses) if student_losses else 0.0
