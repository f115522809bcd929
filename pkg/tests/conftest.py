import random
import string

import pytest

from vocagno.corpus_io import Role, TokenSpan, TokenizedSequence
from vocagno.toy_tokenizers import encode, train_char, train_greedy_merge, train_whitespace

ALPHABET = "abcd "


def make_sequence(spans, text_len, role=Role.STUDENT, doc_id="d0"):
    """Build a sequence from (st, ed) or (st, ed, zero_width) tuples."""
    tokens = []
    for i, span in enumerate(spans):
        st, ed = span[0], span[1]
        zw = span[2] if len(span) > 2 else (st == ed)
        tokens.append(TokenSpan(i, st, ed, zero_width=zw))
    return TokenizedSequence(role, tuple(tokens), doc_id, text_len)


def random_text(rng: random.Random, max_len=60, alphabet=ALPHABET) -> str:
    n = rng.randint(1, max_len)
    return "".join(rng.choice(alphabet) for _ in range(n))


def random_solid_spans(rng: random.Random, text_len, allow_gaps=True, zw_prob=0.15):
    """Random ordered spans over [0, text_len): optional gaps and zero-width tokens."""
    spans = []
    pos = 0
    while pos < text_len:
        if rng.random() < zw_prob:
            spans.append((pos, pos, True))
        if allow_gaps and rng.random() < 0.25:
            pos = min(text_len, pos + rng.randint(1, 3))
            continue
        ed = min(text_len, pos + rng.randint(1, 5))
        spans.append((pos, ed, False))
        pos = ed
    if rng.random() < zw_prob:
        spans.append((text_len, text_len, True))
    return spans


def random_tokenizer(rng: random.Random, texts):
    kind = rng.choice(["char", "merge", "whitespace"])
    if kind == "char":
        return train_char(texts)
    if kind == "whitespace":
        try:
            return train_whitespace(texts)
        except ValueError:
            return train_char(texts)
    n_chars = len({c for t in texts for c in t})
    return train_greedy_merge(texts, n_chars + rng.randint(1, 12))


def random_doc_pair(rng: random.Random, doc_id="d0"):
    """A fuzzed (student, teacher) pair: tokenizer output or synthetic spans."""
    text = random_text(rng)
    if rng.random() < 0.5:
        student = encode(random_tokenizer(rng, [text]), text, Role.STUDENT, doc_id)
        teacher = encode(random_tokenizer(rng, [text]), text, Role.TEACHER, doc_id)
    else:
        student = make_sequence(
            random_solid_spans(rng, len(text)), len(text), Role.STUDENT, doc_id
        )
        teacher = make_sequence(
            random_solid_spans(rng, len(text)), len(text), Role.TEACHER, doc_id
        )
    return student, teacher


def random_words_text(rng: random.Random, n_words: int) -> str:
    words = []
    for _ in range(n_words):
        k = rng.randint(1, 6)
        words.append("".join(rng.choice(string.ascii_lowercase[:6]) for _ in range(k)))
    return " ".join(words)


@pytest.fixture
def rng():
    return random.Random(12345)
