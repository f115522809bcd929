"""Deterministic from-scratch tokenizers with genuinely mismatched vocabularies.

These stand in for production tokenizers so alignment and guidance can be
tested and fuzzed without external models. Encoding is greedy longest-match
(not merge-order BPE): simpler, deterministic, and sufficient to create
realistic span mismatches between two vocabularies trained differently.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

from .corpus_io import Role, TokenSpan, TokenizedSequence


class EmptyCorpus(ValueError):
    pass


class EmptyVocab(ValueError):
    pass


class VocabKind(str, Enum):
    CHAR = "char"
    WHITESPACE = "whitespace"
    GREEDY_MERGE = "greedy_merge"


_UNK = "<unk>"


@dataclass(frozen=True)
class ToyVocab:
    entries: tuple[str, ...]
    kind: VocabKind

    def __post_init__(self):
        if len(set(self.entries)) != len(self.entries):
            raise ValueError("vocabulary entries must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    def token_strings(self) -> set[str]:
        return set(self.entries)


def _all_chars(texts: Sequence[str]) -> list[str]:
    chars = sorted({c for t in texts for c in t})
    if not chars:
        raise EmptyCorpus("no characters in training texts")
    return chars


def train_char(texts: Sequence[str]) -> ToyVocab:
    return ToyVocab(tuple(_all_chars(texts)), VocabKind.CHAR)


def train_whitespace(texts: Sequence[str]) -> ToyVocab:
    words = sorted({w for t in texts for w in t.split()})
    if not words:
        raise EmptyCorpus("no words in training texts")
    return ToyVocab((_UNK, *words), VocabKind.WHITESPACE)


def train_greedy_merge(
    texts: Sequence[str], target_vocab_size: int, seed: int = 0
) -> ToyVocab:
    """Iteratively merge the most frequent adjacent pair until the target size.

    Ties are broken by the lexicographically smallest pair, which makes the
    result fully deterministic; ``seed`` is accepted for interface stability
    but does not influence the outcome.
    """
    del seed
    chars = _all_chars(texts)
    if target_vocab_size < len(chars):
        raise ValueError(
            f"target size {target_vocab_size} below distinct char count {len(chars)}"
        )
    entries = list(chars)
    seqs = [list(t) for t in texts if t]
    while len(entries) < target_vocab_size:
        counts: Counter = Counter()
        for s in seqs:
            for pair in zip(s, s[1:]):
                counts[pair] += 1
        if not counts:
            break
        top = max(counts.values())
        a, b = min(p for p, c in counts.items() if c == top)
        merged = a + b
        if merged in entries:
            # degenerate corpus; the same surface can re-emerge from
            # different pairs, and a duplicate entry would be useless
            counts_wo = {p: c for p, c in counts.items() if p[0] + p[1] not in entries}
            if not counts_wo:
                break
            top = max(counts_wo.values())
            a, b = min(p for p, c in counts_wo.items() if c == top)
            merged = a + b
        entries.append(merged)
        for s in seqs:
            i = 0
            while i < len(s) - 1:
                if s[i] == a and s[i + 1] == b:
                    s[i : i + 2] = [merged]
                else:
                    i += 1
    return ToyVocab(tuple(entries), VocabKind.GREEDY_MERGE)


def encode(
    vocab: ToyVocab, text: str, role: Role = Role.STUDENT, doc_id: str = ""
) -> TokenizedSequence:
    """Tokenize ``text`` deterministically under ``vocab``.

    Char / GreedyMerge kinds use greedy longest-match and tile [0, len(text))
    exactly; the Whitespace kind drops whitespace, producing gaps. Characters
    absent from a Char / GreedyMerge vocabulary raise ValueError.
    """
    tokens: list[TokenSpan] = []
    if vocab.kind is VocabKind.WHITESPACE:
        index = {w: i for i, w in enumerate(vocab.entries)}
        pos = 0
        n = len(text)
        while pos < n:
            if text[pos].isspace():
                pos += 1
                continue
            end = pos
            while end < n and not text[end].isspace():
                end += 1
            word = text[pos:end]
            tokens.append(TokenSpan(index.get(word, 0), pos, end, surface=word))
            pos = end
    else:
        index = {w: i for i, w in enumerate(vocab.entries)}
        max_len = max((len(w) for w in vocab.entries), default=1)
        pos = 0
        n = len(text)
        while pos < n:
            match = None
            for length in range(min(max_len, n - pos), 0, -1):
                cand = text[pos : pos + length]
                if cand in index:
                    match = cand
                    break
            if match is None:
                raise ValueError(
                    f"character {text[pos]!r} at position {pos} not in vocabulary"
                )
            tokens.append(TokenSpan(index[match], pos, pos + len(match), surface=match))
            pos += len(match)
    return TokenizedSequence(role, tuple(tokens), doc_id, len(text))


def vocab_overlap(
    a: Union[ToyVocab, Iterable[str]],
    b: Union[ToyVocab, Iterable[str]],
    denominator: str = "union",
) -> float:
    """Overlap ratio between two vocabularies over exact token strings.

    ``denominator`` is "union" (intersection over union, default) or "min"
    (intersection over the smaller vocabulary).
    """
    sa = a.token_strings() if isinstance(a, ToyVocab) else set(a)
    sb = b.token_strings() if isinstance(b, ToyVocab) else set(b)
    if not sa or not sb:
        raise EmptyVocab("vocab overlap of an empty vocabulary")
    inter = len(sa & sb)
    if denominator == "union":
        return inter / len(sa | sb)
    if denominator == "min":
        return inter / min(len(sa), len(sb))
    raise ValueError(f"unknown denominator {denominator!r}")


def save_vocab(path, vocab: ToyVocab) -> None:
    # entries sorted for byte-stable files; encoding is longest-match, so
    # entry order never affects tokenization (only the ids)
    obj = {"kind": vocab.kind.value, "entries": sorted(vocab.entries)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, separators=(",", ":"))
        fh.write("\n")


def load_vocab(path) -> ToyVocab:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        return ToyVocab(tuple(obj["entries"]), VocabKind(obj["kind"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"invalid vocabulary file {path}: {exc}")
