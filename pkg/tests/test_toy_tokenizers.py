import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vocagno.corpus_io import validate_sequence
from vocagno.toy_tokenizers import (
    EmptyCorpus,
    EmptyVocab,
    ToyVocab,
    VocabKind,
    encode,
    load_vocab,
    save_vocab,
    train_char,
    train_greedy_merge,
    train_whitespace,
    vocab_overlap,
)

texts_strategy = st.lists(
    st.text(alphabet="abc d", min_size=1, max_size=40), min_size=1, max_size=4
).filter(lambda ts: any(t for t in ts))


class TestTraining:
    def test_merge_loop_on_aaaa(self):
        vocab = train_greedy_merge(["aaaa"], 2)
        assert set(vocab.entries) == {"a", "aa"}

    def test_target_equal_to_char_count_means_no_merges(self):
        vocab = train_greedy_merge(["abcabc"], 3)
        assert set(vocab.entries) == {"a", "b", "c"}

    def test_deterministic(self):
        a = train_greedy_merge(["the cat sat", "the hat"], 12, seed=1)
        b = train_greedy_merge(["the cat sat", "the hat"], 12, seed=2)
        assert a == b

    def test_target_below_char_count_rejected(self):
        with pytest.raises(ValueError):
            train_greedy_merge(["abc"], 2)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            train_greedy_merge([""], 5)
        with pytest.raises(EmptyCorpus):
            train_char([])

    def test_duplicate_entries_rejected(self):
        with pytest.raises(ValueError):
            ToyVocab(("a", "a"), VocabKind.CHAR)


class TestEncode:
    def test_char_vocab_spans(self):
        seq = encode(train_char(["ab"]), "ab")
        assert [(t.st, t.ed) for t in seq.tokens] == [(0, 1), (1, 2)]

    def test_greedy_longest_match(self):
        vocab = ToyVocab(("a", "aa"), VocabKind.GREEDY_MERGE)
        seq = encode(vocab, "aaa")
        assert [t.surface for t in seq.tokens] == ["aa", "a"]
        assert [(t.st, t.ed) for t in seq.tokens] == [(0, 2), (2, 3)]

    def test_whitespace_gap(self):
        vocab = train_whitespace(["a b"])
        seq = encode(vocab, "a b")
        assert [(t.st, t.ed) for t in seq.tokens] == [(0, 1), (2, 3)]

    def test_empty_text(self):
        assert len(encode(train_char(["a"]), "")) == 0

    def test_oov_char_raises(self):
        with pytest.raises(ValueError):
            encode(train_char(["ab"]), "abz")

    def test_unknown_word_maps_to_unk(self):
        vocab = train_whitespace(["hello"])
        seq = encode(vocab, "world")
        assert seq.tokens[0].token_id == 0

    @settings(max_examples=150, deadline=None)
    @given(texts_strategy, st.integers(0, 15))
    def test_tiling_and_concatenation(self, texts, extra):
        n_chars = len({c for t in texts for c in t})
        vocab = train_greedy_merge(texts, n_chars + extra)
        for text in texts:
            seq = encode(vocab, text)
            assert "".join(t.surface for t in seq.tokens) == text
            pos = 0
            for t in seq.tokens:
                assert t.st == pos
                pos = t.ed
            assert pos == len(text)
            assert validate_sequence(seq) is None

    def test_char_vocab_distinguishes_texts(self):
        vocab = train_char(["ab"])
        a = encode(vocab, "ab")
        b = encode(vocab, "ba")
        assert [t.token_id for t in a.tokens] != [t.token_id for t in b.tokens]


class TestVocabOverlap:
    def test_identical(self):
        assert vocab_overlap({"a", "b"}, {"a", "b"}) == 1.0

    def test_disjoint(self):
        assert vocab_overlap({"a"}, {"b"}) == 0.0

    def test_partial(self):
        assert vocab_overlap({"a", "b"}, {"b", "c"}) == pytest.approx(1 / 3)

    def test_min_denominator(self):
        assert vocab_overlap({"a", "b"}, {"b"}, denominator="min") == 1.0

    def test_empty_raises(self):
        with pytest.raises(EmptyVocab):
            vocab_overlap(set(), {"a"})

    def test_accepts_vocab_objects(self):
        a = train_char(["ab"])
        b = train_char(["bc"])
        assert vocab_overlap(a, b) == pytest.approx(1 / 3)


class TestSaveLoad:
    def test_roundtrip_preserves_tokenization(self, tmp_path):
        vocab = train_greedy_merge(["banana band"], 10)
        path = tmp_path / "vocab.json"
        save_vocab(path, vocab)
        back = load_vocab(path)
        assert back.kind == vocab.kind
        assert set(back.entries) == set(vocab.entries)
        text = "banana"
        assert [(t.st, t.ed) for t in encode(back, text).tokens] == [
            (t.st, t.ed) for t in encode(vocab, text).tokens
        ]

    def test_byte_stable(self, tmp_path):
        vocab = train_greedy_merge(["abab"], 3)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_vocab(p1, vocab)
        save_vocab(p2, vocab)
        assert p1.read_bytes() == p2.read_bytes()

    def test_invalid_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"entries": ["a"]}')
        with pytest.raises(ValueError):
            load_vocab(path)
