"""Tokenized-corpus data model and the JSONL interchange format.

Offsets are counted in Unicode scalar values (Python string indices), not
bytes. Corpora produced by byte-offset tokenizers must be converted upstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence


class CorpusError(Exception):
    """Base class for corpus reading / validation failures."""


class MalformedLine(CorpusError):
    def __init__(self, line_no: int, cause: str):
        self.line_no = line_no
        self.cause = cause
        super().__init__(f"line {line_no}: {cause}")


class OffsetViolation(CorpusError):
    def __init__(self, doc_id: str, token_index: int, message: str):
        self.doc_id = doc_id
        self.token_index = token_index
        super().__init__(f"doc {doc_id!r}, token {token_index}: {message}")


class LossLengthMismatch(CorpusError):
    def __init__(self, doc_id: str, role: str, expected: int, got: int):
        self.doc_id = doc_id
        self.role = role
        self.expected = expected
        self.got = got
        super().__init__(
            f"doc {doc_id!r}: {role} has {expected} tokens but {got} losses"
        )


class Role(str, Enum):
    STUDENT = "student"
    TEACHER = "teacher"


@dataclass(frozen=True)
class TokenSpan:
    """One token with its half-open character interval [st, ed) in the text.

    ``st == ed`` is legal only when ``zero_width`` is set (special tokens).
    ``surface`` is carried for debugging and never consulted by alignment.
    """

    token_id: int
    st: int
    ed: int
    zero_width: bool = False
    surface: Optional[str] = None


@dataclass(frozen=True)
class Violation:
    token_index: int
    message: str


@dataclass(frozen=True)
class TokenizedSequence:
    role: Role
    tokens: tuple[TokenSpan, ...]
    doc_id: str
    text_len: int

    def __len__(self) -> int:
        return len(self.tokens)


def validate_sequence(seq: TokenizedSequence) -> Optional[Violation]:
    """Return the first violated invariant (with token index), or None if ok.

    Checks, per token: non-negative id, 0 <= st <= ed <= text_len, the
    zero-width flag iff st == ed, non-decreasing st/ed versus the previous
    token, and no overlap with the previous non-zero-width token. Gaps
    between spans are legal.
    """
    prev: Optional[TokenSpan] = None
    prev_solid: Optional[TokenSpan] = None
    for i, tok in enumerate(seq.tokens):
        if tok.token_id < 0:
            return Violation(i, f"negative token id {tok.token_id}")
        if tok.st < 0 or tok.ed > seq.text_len:
            return Violation(
                i, f"span [{tok.st},{tok.ed}) outside [0,{seq.text_len})"
            )
        if tok.ed < tok.st:
            return Violation(i, f"ed {tok.ed} < st {tok.st}")
        if tok.st == tok.ed and not tok.zero_width:
            return Violation(i, "empty span without zero-width flag")
        if tok.zero_width and tok.st != tok.ed:
            return Violation(i, "zero-width flag on non-empty span")
        if prev is not None and (tok.st < prev.st or tok.ed < prev.ed):
            return Violation(i, "spans not ordered")
        if prev_solid is not None and not tok.zero_width and tok.st < prev_solid.ed:
            return Violation(i, f"overlaps previous span ending at {prev_solid.ed}")
        prev = tok
        if not tok.zero_width:
            prev_solid = tok
    return None


@dataclass
class CorpusRecord:
    doc_id: str
    text_len: int
    student: TokenizedSequence
    teacher: TokenizedSequence
    student_losses: Optional[list[float]] = None
    teacher_losses: Optional[list[float]] = None


def _parse_side(obj, role: Role, doc_id: str, text_len: int, line_no: int):
    try:
        raw_tokens = obj["tokens"]
    except (KeyError, TypeError):
        raise MalformedLine(line_no, f"missing {role.value}.tokens")
    tokens = []
    for t in raw_tokens:
        try:
            tokens.append(
                TokenSpan(
                    token_id=int(t["id"]),
                    st=int(t["st"]),
                    ed=int(t["ed"]),
                    zero_width=bool(t.get("zw", False)),
                    surface=t.get("surface"),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedLine(line_no, f"bad token object in {role.value}: {exc}")
    seq = TokenizedSequence(role, tuple(tokens), doc_id, text_len)
    violation = validate_sequence(seq)
    if violation is not None:
        raise OffsetViolation(doc_id, violation.token_index, violation.message)

    losses = obj.get("losses")
    if losses is not None:
        if len(losses) != len(tokens):
            raise LossLengthMismatch(doc_id, role.value, len(tokens), len(losses))
        out = []
        for i, v in enumerate(losses):
            v = float(v)
            if not math.isfinite(v) or v < 0:
                raise MalformedLine(
                    line_no, f"{role.value} loss {i} is negative or non-finite"
                )
            out.append(v)
        losses = out
    return seq, losses


def read_corpus(path) -> Iterator[CorpusRecord]:
    """Stream records from a JSONL corpus, validating every sequence.

    Raises MalformedLine, OffsetViolation, or LossLengthMismatch as soon as a
    bad record is encountered; records before it have already been yielded.
    """
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON: {exc}")
            try:
                doc_id = str(obj["doc_id"])
                text_len = int(obj["text_len"])
            except (KeyError, TypeError, ValueError):
                raise MalformedLine(line_no, "missing doc_id / text_len")
            if "student" not in obj or "teacher" not in obj:
                raise MalformedLine(line_no, "missing student / teacher")
            student, s_losses = _parse_side(
                obj["student"], Role.STUDENT, doc_id, text_len, line_no
            )
            teacher, t_losses = _parse_side(
                obj["teacher"], Role.TEACHER, doc_id, text_len, line_no
            )
            yield CorpusRecord(doc_id, text_len, student, teacher, s_losses, t_losses)


def _token_obj(tok: TokenSpan) -> dict:
    obj = {"id": tok.token_id, "st": tok.st, "ed": tok.ed}
    if tok.zero_width:
        obj["zw"] = True
    if tok.surface is not None:
        obj["surface"] = tok.surface
    return obj


def _side_obj(seq: TokenizedSequence, losses: Optional[Sequence[float]]) -> dict:
    obj: dict = {"tokens": [_token_obj(t) for t in seq.tokens]}
    if losses is not None:
        obj["losses"] = list(losses)
    return obj


def write_corpus(path, records: Iterable[CorpusRecord]) -> None:
    """Write records in the input JSONL schema. Byte-stable for equal inputs."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            obj = {
                "doc_id": rec.doc_id,
                "text_len": rec.text_len,
                "student": _side_obj(rec.student, rec.student_losses),
                "teacher": _side_obj(rec.teacher, rec.teacher_losses),
            }
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def write_masks(path, records: Iterable[tuple]) -> None:
    """Write (doc_id, mapping, weights) records to the output JSONL schema.

    ``mapping`` may be an alignment map object (anything with ``to_lists()``)
    or an already-serialized list of ``[j, k] | None``; ``weights`` may be a
    TokenWeights-like object (``.w``) or a plain 0/1 list.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc_id, mapping, weights in records:
            if hasattr(mapping, "to_lists"):
                mapping = mapping.to_lists()
            w = list(getattr(weights, "w", weights))
            if len(w) != len(mapping):
                raise ValueError(
                    f"doc {doc_id!r}: {len(mapping)} mapping entries "
                    f"but {len(w)} weights"
                )
            obj = {"doc_id": doc_id, "mapping": mapping, "weights": [int(x) for x in w]}
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def read_masks(path) -> Iterator[tuple[str, list, list[int]]]:
    """Inverse of write_masks; yields (doc_id, mapping lists, weights)."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                yield str(obj["doc_id"]), obj["mapping"], [int(x) for x in obj["weights"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedLine(line_no, f"bad mask record: {exc}")
