"""Token alignment across two tokenizations of the same text.

The core operation maps each student token to the minimal contiguous range of
teacher tokens whose character spans overlap it, found with two binary
searches per student token (O(N log M) total). A brute-force O(N*M) oracle,
an equal-chunking baseline, and character-level IoU / IoS metrics live here
as well.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .corpus_io import TokenizedSequence


class DocMismatch(Exception):
    pass


@dataclass(frozen=True)
class AlignmentEntry:
    """Verdict for one student token: a teacher index range, or unmapped.

    ``j`` / ``k`` are inclusive teacher indices; ``j == -1`` encodes unmapped.
    ``full_coverage`` is true iff every character of the student span lies
    inside some teacher span in [j, k].
    """

    j: int
    k: int
    full_coverage: bool

    @property
    def is_unmapped(self) -> bool:
        return self.j < 0

    @classmethod
    def unmapped(cls) -> "AlignmentEntry":
        return cls(-1, -1, False)


class AlignmentMap:
    """Per-student-token alignment verdicts, stored as flat arrays.

    Array storage keeps million-token alignments cheap; use indexing or
    iteration to get AlignmentEntry views.
    """

    __slots__ = ("j", "k", "full_coverage")

    def __init__(self, j, k, full_coverage):
        self.j = np.asarray(j, dtype=np.int64)
        self.k = np.asarray(k, dtype=np.int64)
        self.full_coverage = np.asarray(full_coverage, dtype=bool)
        if not (self.j.shape == self.k.shape == self.full_coverage.shape):
            raise ValueError("array length mismatch")

    def __len__(self) -> int:
        return self.j.size

    def __getitem__(self, i: int) -> AlignmentEntry:
        return AlignmentEntry(
            int(self.j[i]), int(self.k[i]), bool(self.full_coverage[i])
        )

    def __iter__(self) -> Iterator[AlignmentEntry]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlignmentMap):
            return NotImplemented
        return (
            np.array_equal(self.j, other.j)
            and np.array_equal(self.k, other.k)
            and np.array_equal(self.full_coverage, other.full_coverage)
        )

    def __repr__(self) -> str:
        return f"AlignmentMap({self.to_lists()!r})"

    def to_lists(self) -> list:
        """Transport form: ``[j, k]`` per entry, ``None`` for unmapped."""
        return [
            None if j < 0 else [int(j), int(k)] for j, k in zip(self.j, self.k)
        ]

    @classmethod
    def from_entries(cls, entries: Sequence[AlignmentEntry]) -> "AlignmentMap":
        return cls(
            [e.j for e in entries],
            [e.k for e in entries],
            [e.full_coverage for e in entries],
        )


def _as_span_arrays(seq: TokenizedSequence):
    n = len(seq.tokens)
    st = np.fromiter((t.st for t in seq.tokens), dtype=np.int64, count=n)
    ed = np.fromiter((t.ed for t in seq.tokens), dtype=np.int64, count=n)
    return st, ed


def _check_span_arrays(st: np.ndarray, ed: np.ndarray, side: str) -> None:
    if np.any(ed < st):
        raise ValueError(f"{side} span with ed < st")
    if st.size > 1 and (np.any(np.diff(st) < 0) or np.any(np.diff(ed) < 0)):
        raise ValueError(f"{side} spans not ordered")
    solid = ed > st
    st_s, ed_s = st[solid], ed[solid]
    if st_s.size > 1 and np.any(st_s[1:] < ed_s[:-1]):
        raise ValueError(f"{side} spans overlap")


def _covered_upto(points, st_t, ed_t, cum):
    """Teacher-covered character count in [0, c) for each c in points."""
    nf = np.searchsorted(ed_t, points, side="right")
    out = cum[nf].copy()
    has = nf < st_t.size
    out[has] += np.maximum(points[has] - st_t[nf[has]], 0)
    return out


def align_spans(st_s, ed_s, st_t, ed_t, validate: bool = True) -> AlignmentMap:
    """Align raw offset arrays; the vectorized core behind ``align``.

    For each student span: lowIdx is the first teacher index whose end
    exceeds the student start, highIdx the last whose start is below the
    student end; zero-width teacher tokens at the edges of that candidate
    range are trimmed off, since an empty interval overlaps nothing.
    """
    st_s = np.asarray(st_s, dtype=np.int64)
    ed_s = np.asarray(ed_s, dtype=np.int64)
    st_t = np.asarray(st_t, dtype=np.int64)
    ed_t = np.asarray(ed_t, dtype=np.int64)
    if validate:
        _check_span_arrays(st_s, ed_s, "student")
        _check_span_arrays(st_t, ed_t, "teacher")

    n, m = st_s.size, st_t.size
    j_arr = np.full(n, -1, dtype=np.int64)
    k_arr = np.full(n, -1, dtype=np.int64)
    full = np.zeros(n, dtype=bool)
    if n == 0:
        return AlignmentMap(j_arr, k_arr, full)
    solid_t = np.flatnonzero(ed_t > st_t)
    if m == 0 or solid_t.size == 0:
        return AlignmentMap(j_arr, k_arr, full)

    low = np.searchsorted(ed_t, st_s, side="right")
    high = np.searchsorted(st_t, ed_s, side="left") - 1
    # snap the range ends to non-zero-width teacher tokens; any non-zero-width
    # token inside [low, high] is guaranteed to overlap the student span
    li = np.searchsorted(solid_t, low, side="left")
    hi = np.searchsorted(solid_t, high, side="right") - 1
    ok = (ed_s > st_s) & (low <= high) & (li < solid_t.size) & (hi >= 0)
    jj = solid_t[np.minimum(li, solid_t.size - 1)]
    kk = solid_t[np.maximum(hi, 0)]
    ok &= jj <= kk
    j_arr[ok] = jj[ok]
    k_arr[ok] = kk[ok]

    cum = np.concatenate(([0], np.cumsum(ed_t - st_t)))
    cov = _covered_upto(ed_s, st_t, ed_t, cum) - _covered_upto(st_s, st_t, ed_t, cum)
    full = ok & (cov == ed_s - st_s)
    return AlignmentMap(j_arr, k_arr, full)


def _check_same_doc(student: TokenizedSequence, teacher: TokenizedSequence) -> None:
    if student.doc_id != teacher.doc_id or student.text_len != teacher.text_len:
        raise DocMismatch(
            f"student {student.doc_id!r}/{student.text_len} vs "
            f"teacher {teacher.doc_id!r}/{teacher.text_len}"
        )


def align(student: TokenizedSequence, teacher: TokenizedSequence) -> AlignmentMap:
    """Map each student token to its minimal overlapping teacher index range."""
    _check_same_doc(student, teacher)
    st_s, ed_s = _as_span_arrays(student)
    st_t, ed_t = _as_span_arrays(teacher)
    return align_spans(st_s, ed_s, st_t, ed_t, validate=False)


def align_oracle(student: TokenizedSequence, teacher: TokenizedSequence) -> AlignmentMap:
    """Reference alignment by exhaustive O(N*M) scan; exists as a test oracle."""
    _check_same_doc(student, teacher)
    entries = []
    t_spans = [(t.st, t.ed) for t in teacher.tokens]
    for s in student.tokens:
        if s.st == s.ed:
            entries.append(AlignmentEntry.unmapped())
            continue
        overlapping = [
            t
            for t, (tst, ted) in enumerate(t_spans)
            if max(s.st, tst) < min(s.ed, ted)
        ]
        if not overlapping:
            entries.append(AlignmentEntry.unmapped())
            continue
        j, k = min(overlapping), max(overlapping)
        covered = sum(
            1
            for c in range(s.st, s.ed)
            if any(tst <= c < ted for tst, ted in t_spans[j : k + 1])
        )
        entries.append(AlignmentEntry(j, k, covered == s.ed - s.st))
    return AlignmentMap.from_entries(entries)


@dataclass(frozen=True)
class ChunkPair:
    """Positionally paired equal-count chunks of the two token sequences."""

    index: int
    student_span: tuple[int, int]
    teacher_span: tuple[int, int]


@dataclass(frozen=True)
class OverlapMetrics:
    iou: float
    ios: float


def _chunk_spans(seq: TokenizedSequence, num_chunks: int) -> list[tuple[int, int]]:
    # remainder-first: the first (n mod K) chunks get one extra token
    n = len(seq.tokens)
    base, rem = divmod(n, num_chunks)
    spans = []
    start = 0
    for g in range(num_chunks):
        size = base + (1 if g < rem else 0)
        if size == 0:
            spans.append((0, 0))
        else:
            spans.append((seq.tokens[start].st, seq.tokens[start + size - 1].ed))
        start += size
    return spans


def chunk_align(
    student: TokenizedSequence, teacher: TokenizedSequence, num_chunks: int
) -> list[ChunkPair]:
    """Equal-count chunking baseline: i-th student chunk pairs with i-th teacher chunk."""
    if num_chunks < 1:
        raise ValueError("num_chunks must be >= 1")
    s_spans = _chunk_spans(student, num_chunks)
    t_spans = _chunk_spans(teacher, num_chunks)
    return [
        ChunkPair(i, s, t) for i, (s, t) in enumerate(zip(s_spans, t_spans))
    ]


def overlap_metrics(a_span: tuple[int, int], b_span: tuple[int, int]) -> OverlapMetrics:
    """Character-interval IoU and intersection-over-first-span for two spans."""
    a_st, a_ed = a_span
    b_st, b_ed = b_span
    inter = max(0, min(a_ed, b_ed) - max(a_st, b_st))
    len_a = max(0, a_ed - a_st)
    len_b = max(0, b_ed - b_st)
    union = len_a + len_b - inter
    return OverlapMetrics(
        iou=inter / union if union else 0.0,
        ios=inter / len_a if len_a else 0.0,
    )


def mean_chunk_metrics(pairs: Sequence[ChunkPair]) -> OverlapMetrics:
    if not pairs:
        return OverlapMetrics(0.0, 0.0)
    ms = [overlap_metrics(p.student_span, p.teacher_span) for p in pairs]
    return OverlapMetrics(
        iou=sum(m.iou for m in ms) / len(ms),
        ios=sum(m.ios for m in ms) / len(ms),
    )


def map_ios(
    amap: AlignmentMap, student: TokenizedSequence, teacher: TokenizedSequence
) -> float:
    """Fraction of student characters covered by their mapped teacher ranges.

    Zero-width student tokens carry no characters and are ignored. A student
    sequence with no characters at all is vacuously fully covered.
    """
    st_s, ed_s = _as_span_arrays(student)
    total = int(np.sum(ed_s - st_s))
    if total == 0:
        return 1.0
    st_t, ed_t = _as_span_arrays(teacher)
    cum = np.concatenate(([0], np.cumsum(ed_t - st_t)))
    mapped = amap.j >= 0
    cov = _covered_upto(ed_s[mapped], st_t, ed_t, cum) - _covered_upto(
        st_s[mapped], st_t, ed_t, cum
    )
    return float(np.sum(cov)) / total


def map_token_metrics(
    amap: AlignmentMap, student: TokenizedSequence, teacher: TokenizedSequence
) -> OverlapMetrics:
    """Token-level analogue of the chunk metrics.

    iou: mean over non-zero-width student tokens of IoU between the token
    span and its mapped teacher range span (0 when unmapped).
    ios: character-global coverage fraction, i.e. ``map_ios``.
    """
    ious = []
    for i, tok in enumerate(student.tokens):
        if tok.st == tok.ed:
            continue
        e = amap[i]
        if e.is_unmapped:
            ious.append(0.0)
        else:
            t_span = (teacher.tokens[e.j].st, teacher.tokens[e.k].ed)
            ious.append(overlap_metrics((tok.st, tok.ed), t_span).iou)
    mean_iou = sum(ious) / len(ious) if ious else 0.0
    return OverlapMetrics(iou=mean_iou, ios=map_ios(amap, student, teacher))
