import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vocagno.corpus_io import (
    CorpusRecord,
    LossLengthMismatch,
    MalformedLine,
    OffsetViolation,
    Role,
    TokenSpan,
    TokenizedSequence,
    read_corpus,
    read_masks,
    validate_sequence,
    write_corpus,
    write_masks,
)

from conftest import make_sequence


VALID_LINE = json.dumps(
    {
        "doc_id": "d0",
        "text_len": 5,
        "student": {"tokens": [{"id": 0, "st": 0, "ed": 2}, {"id": 1, "st": 2, "ed": 5}]},
        "teacher": {"tokens": [{"id": 3, "st": 0, "ed": 5}]},
    }
)


def _write(tmp_path, *lines):
    path = tmp_path / "corpus.jsonl"
    path.write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    return path


class TestValidateSequence:
    def test_tiling_spans_ok(self):
        seq = make_sequence([(0, 2), (2, 3), (3, 5)], 5)
        assert validate_sequence(seq) is None

    def test_overlap_reported_at_second_token(self):
        seq = make_sequence([(0, 2), (1, 3)], 5)
        v = validate_sequence(seq)
        assert v is not None and v.token_index == 1
        assert "overlap" in v.message

    def test_zero_width_flagged_ok(self):
        seq = make_sequence([(0, 0, True)], 5)
        assert validate_sequence(seq) is None

    def test_empty_span_without_flag_rejected(self):
        seq = TokenizedSequence(Role.STUDENT, (TokenSpan(0, 1, 1),), "d", 5)
        v = validate_sequence(seq)
        assert v is not None and v.token_index == 0

    def test_gap_between_spans_ok(self):
        seq = make_sequence([(0, 1), (2, 3)], 3)
        assert validate_sequence(seq) is None

    def test_span_past_text_len_rejected(self):
        seq = make_sequence([(0, 6)], 5)
        assert validate_sequence(seq) is not None

    def test_ordering_violation(self):
        seq = TokenizedSequence(
            Role.STUDENT, (TokenSpan(0, 3, 5), TokenSpan(1, 0, 2)), "d", 5
        )
        v = validate_sequence(seq)
        assert v is not None and v.token_index == 1


class TestReadCorpus:
    def test_one_valid_record(self, tmp_path):
        path = _write(tmp_path, VALID_LINE)
        records = list(read_corpus(path))
        assert len(records) == 1
        assert records[0].doc_id == "d0"
        assert len(records[0].student) == 2

    def test_teacher_ed_before_st(self, tmp_path):
        bad = json.loads(VALID_LINE)
        bad["teacher"]["tokens"] = [{"id": 0, "st": 3, "ed": 1}]
        path = _write(tmp_path, json.dumps(bad))
        with pytest.raises(OffsetViolation) as exc:
            list(read_corpus(path))
        assert exc.value.token_index == 0

    def test_loss_length_mismatch(self, tmp_path):
        bad = json.loads(VALID_LINE)
        bad["student"]["tokens"].append({"id": 2, "st": 5, "ed": 5, "zw": True})
        bad["student"]["losses"] = [0.5, 0.5]
        path = _write(tmp_path, json.dumps(bad))
        with pytest.raises(LossLengthMismatch):
            list(read_corpus(path))

    def test_invalid_json_names_line(self, tmp_path):
        path = _write(tmp_path, VALID_LINE, "{not json")
        with pytest.raises(MalformedLine) as exc:
            list(read_corpus(path))
        assert exc.value.line_no == 2

    def test_negative_loss_rejected(self, tmp_path):
        bad = json.loads(VALID_LINE)
        bad["teacher"]["losses"] = [-1.0]
        path = _write(tmp_path, json.dumps(bad))
        with pytest.raises(MalformedLine):
            list(read_corpus(path))


class TestWriteMasks:
    def test_empty_stream(self, tmp_path):
        path = tmp_path / "masks.jsonl"
        write_masks(path, [])
        assert path.read_bytes() == b""

    def test_one_record(self, tmp_path):
        path = tmp_path / "masks.jsonl"
        write_masks(path, [("d0", [[0, 0], None], [1, 0])])
        obj = json.loads(path.read_text())
        assert obj == {"doc_id": "d0", "mapping": [[0, 0], None], "weights": [1, 0]}

    def test_byte_stable(self, tmp_path):
        records = [("d0", [[0, 1], None], [1, 1]), ("d1", [None], [0])]
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_masks(p1, records)
        write_masks(p2, records)
        assert p1.read_bytes() == p2.read_bytes()

    def test_length_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_masks(tmp_path / "m.jsonl", [("d0", [None], [1, 0])])

    def test_roundtrip(self, tmp_path):
        records = [("d0", [[0, 1], None], [1, 1])]
        path = tmp_path / "m.jsonl"
        write_masks(path, records)
        assert list(read_masks(path)) == records


# strategy: spans tiling a prefix of the text with occasional gaps / zw tokens
@st.composite
def corpus_records(draw):
    text_len = draw(st.integers(min_value=0, max_value=30))

    def side(role):
        tokens = []
        pos = 0
        tid = 0
        while pos < text_len:
            if draw(st.booleans()) and draw(st.integers(0, 4)) == 0:
                tokens.append(TokenSpan(tid, pos, pos, zero_width=True))
                tid += 1
            step = draw(st.integers(min_value=1, max_value=5))
            ed = min(text_len, pos + step)
            if draw(st.integers(0, 4)) == 0:
                pos = ed  # gap
                continue
            tokens.append(TokenSpan(tid, pos, ed))
            tid += 1
            pos = ed
        seq = TokenizedSequence(role, tuple(tokens), "doc", text_len)
        losses = None
        if draw(st.booleans()):
            losses = [
                draw(st.floats(0, 10, allow_nan=False, allow_infinity=False))
                for _ in tokens
            ]
        return seq, losses

    student, s_losses = side(Role.STUDENT)
    teacher, t_losses = side(Role.TEACHER)
    return CorpusRecord("doc", text_len, student, teacher, s_losses, t_losses)


class TestRoundTrip:
    @settings(max_examples=100, deadline=None)
    @given(records=st.lists(corpus_records(), max_size=5))
    def test_read_of_write_is_identity(self, tmp_path_factory, records):
        path = tmp_path_factory.mktemp("rt") / "c.jsonl"
        write_corpus(path, records)
        back = list(read_corpus(path))
        assert back == records

    def test_write_is_byte_stable(self, tmp_path):
        seq = make_sequence([(0, 2), (2, 5)], 5)
        rec = CorpusRecord("d0", 5, seq, seq, [0.25, 0.5], None)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_corpus(p1, [rec])
        write_corpus(p2, [rec])
        assert p1.read_bytes() == p2.read_bytes()
