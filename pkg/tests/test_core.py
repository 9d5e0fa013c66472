import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentstress.core import (
    ContractViolation,
    ManifestRecord,
    Rejected,
    StressAnnotatedSentence,
    TokenAlignment,
    WordPrediction,
    aggregate_token_to_word,
    align_stress_labels,
    detokenize,
    read_manifest,
    split_into_sentences,
    tokenize,
    word_index_from_tokens,
    words_of,
    write_manifest,
)


def sent(words, stress, sid="s"):
    return StressAnnotatedSentence(sid, " ".join(words), words, stress)


# -- sentence splitting -------------------------------------------------------

def test_short_sentences_dropped():
    assert split_into_sentences("Hi. Tom ran home fast. Go!") == ["Tom ran home fast."]


def test_empty_text():
    assert split_into_sentences("") == []


def test_abbreviation_is_not_a_boundary():
    assert split_into_sentences("She saw Mr. Smith today.") == ["She saw Mr. Smith today."]
    assert split_into_sentences("Dr. Who ran off. Then it rained hard!") == [
        "Dr. Who ran off.", "Then it rained hard!"]


def test_apostrophe_words():
    assert words_of("We don't know, Tom's dog.") == ["We", "don't", "know", "Tom's", "dog"]


@given(st.lists(st.sampled_from(["a", "bb", "cat", "dogs", "Mr.", "ran", "x1"]), min_size=0, max_size=12),
       st.sampled_from([".", "!", "?"]))
def test_every_split_has_three_words(words, stop):
    text = " ".join(words) + stop
    for s in split_into_sentences(text):
        assert len(words_of(s)) >= 3


# -- tokenization -------------------------------------------------------------

@pytest.mark.parametrize("text, tokens, index", [
    ("The cat ran.", ["The", " cat", " ran", "."], [0, 1, 2, -1]),
    ("unbelievable", ["unbe", "liev", "able"], [0, 0, 0]),
    ("Go!", ["Go", "!"], [0, -1]),
])
def test_tokenize_examples(text, tokens, index):
    assert tokenize(text) == (tokens, index)


def test_tokenize_blank_raises():
    with pytest.raises(ContractViolation):
        tokenize("   ")


_text = st.text(alphabet=st.sampled_from(list("abcdefgh XY'.,!?\t")), min_size=1, max_size=60)


@given(_text)
def test_tokenize_roundtrip(text):
    if not text.strip():
        return
    tokens, index = tokenize(text)
    assert detokenize(tokens) == text
    assert len(tokens) == len(index)
    words = [i for i in index if i >= 0]
    # non-decreasing and gap-free
    assert words == sorted(words)
    assert sorted(set(words)) == list(range(len(set(words))))
    assert len(set(words)) == len(words_of(text))
    for tok in tokens:
        assert len(tok.strip()) <= 6 or tok.strip() in text


@given(_text)
def test_index_recovered_from_tokens(text):
    if not text.strip():
        return
    tokens, index = tokenize(text)
    assert word_index_from_tokens(tokens) == index


# -- alignment ----------------------------------------------------------------

def test_align_simple():
    gold = sent(["the", "cat", "ran"], [0, 1, 0])
    tokens, index = tokenize("the cat ran")
    assert align_stress_labels(gold, tokens, index).token_labels == (0, 1, 0)


def test_align_rejects_word_count_mismatch():
    gold = sent(["the", "cat", "ran"], [0, 1, 0])
    out = align_stress_labels(gold, *tokenize("the ran"))
    assert out == Rejected(3, 2)
    assert not out


def test_align_broadcasts_within_word():
    gold = sent(["it", "was", "unbelievable"], [0, 0, 1])
    out = align_stress_labels(gold, *tokenize("it was unbelievable"))
    assert out.tokens[2:] == (" unbe", "liev", "able")
    assert out.token_labels == (0, 0, 1, 1, 1)


def test_align_punctuation_unstressed():
    gold = sent(["the", "cat", "ran"], [1, 1, 1])
    out = align_stress_labels(gold, *tokenize("the cat ran ."))
    assert out.token_labels[-1] == 0


def test_align_tolerates_spelling():
    gold = sent(["the", "cat", "ran"], [0, 1, 0])
    assert align_stress_labels(gold, *tokenize("a kat run")).token_labels == (0, 1, 0)


def brute_force_aggregate(labels, index):
    n = max(index, default=-1) + 1
    return [int(any(l for l, i in zip(labels, index) if i == w)) for w in range(n)]


def index_maps(n_tokens):
    """All valid token->word maps of a given length (-1 anywhere, words contiguous)."""
    for kinds in itertools.product((-1, 0, 1), repeat=n_tokens):
        # 0 = continue current word, 1 = new word, -1 = punctuation
        index, w, prev_word = [], -1, False
        ok = True
        for k in kinds:
            if k == -1:
                index.append(-1)
                prev_word = False
            elif k == 1 or w < 0:
                if k == 0:
                    ok = False
                    break
                w += 1
                index.append(w)
                prev_word = True
            else:
                if not prev_word:
                    ok = False
                    break
                index.append(w)
        if ok:
            yield index


def test_aggregate_exhaustive_small():
    # every index map and every labeling up to 6 tokens, exhaustively
    count = 0
    for n in range(0, 7):
        for index in index_maps(n):
            for labels in itertools.product((0, 1), repeat=n):
                assert aggregate_token_to_word(labels, index) == brute_force_aggregate(labels, index)
                count += 1
    assert count > 10_000


_index = st.integers(0, 10).flatmap(
    lambda n: st.lists(st.sampled_from((-1, 0, 1)), min_size=n, max_size=n))


def _to_index(kinds):
    index, w = [], -1
    for k in kinds:
        if k == -1:
            index.append(-1)
        elif k == 1 or w < 0:
            w += 1
            index.append(w)
        else:
            index.append(w)
    return index


@settings(max_examples=300)
@given(_index, st.data())
def test_aggregate_matches_oracle_up_to_ten_tokens(kinds, data):
    index = _to_index(kinds)
    labels = data.draw(st.lists(st.integers(0, 1), min_size=len(index), max_size=len(index)))
    assert aggregate_token_to_word(labels, index) == brute_force_aggregate(labels, index)


@settings(max_examples=300)
@given(_index, st.data())
def test_align_then_aggregate_recovers_gold(kinds, data):
    index = _to_index(kinds)
    n_hyp = max(index, default=-1) + 1
    n_gold = data.draw(st.integers(3, 8))
    stress = data.draw(st.lists(st.integers(0, 1), min_size=n_gold, max_size=n_gold))
    gold = sent([f"w{i}" for i in range(n_gold)], stress)
    tokens = ["t"] * len(index)
    out = align_stress_labels(gold, tokens, index)
    if n_hyp != n_gold:
        assert out == Rejected(n_gold, n_hyp)
        return
    assert isinstance(out, TokenAlignment)
    assert aggregate_token_to_word(out.token_labels, out.word_index) == list(stress)
    for lab, w in zip(out.token_labels, out.word_index):
        if w < 0:
            assert lab == 0
        else:
            assert lab == stress[w]


def test_aggregate_examples():
    assert aggregate_token_to_word([0, 1, 0], [0, 1, 1]) == [0, 1]
    assert aggregate_token_to_word([0, 0, 0], [0, 1, 2]) == [0, 0, 0]
    assert aggregate_token_to_word([1, 0, 0], [0, 0, -1]) == [1]


def test_aggregate_length_mismatch():
    with pytest.raises(ContractViolation):
        aggregate_token_to_word([0, 1], [0])


# -- types ---------------------------------------------------------------------

@pytest.mark.parametrize("words, stress", [
    (["a", "b"], [0, 1]),
    (["a", "b", "c"], [0, 1]),
    (["a", "", "c"], [0, 1, 0]),
    (["a b", "c", "d"], [0, 1, 0]),
    (["a", "b", "c"], [0, 2, 0]),
])
def test_sentence_invariants(words, stress):
    with pytest.raises(ContractViolation):
        StressAnnotatedSentence("x", "", words, stress)


def test_word_prediction_lengths():
    with pytest.raises(ContractViolation):
        WordPrediction(["a", "b"], [1])
    with pytest.raises(ContractViolation):
        WordPrediction(["a", "b"], [1, 0], [1])


def test_manifest_roundtrip(tmp_path):
    rec = ManifestRecord("s1-v0", "Tom ran home.", ["Tom", "ran", "home"], [0, 1, 0], 0,
                         "audio/train/s1-v0.wav", [0.08, 0.4, 0.8], "F1")
    path = write_manifest(tmp_path / "m.jsonl", [rec, rec])
    line = path.read_text().splitlines()[0]
    assert set(json.loads(line)) == {"id", "text", "words", "stress", "variant", "audio",
                                     "word_start_s", "voice"}
    assert read_manifest(path) == [rec, rec]
    assert rec.sentence().stress == (0, 1, 0)


def test_manifest_missing_field(tmp_path):
    (tmp_path / "m.jsonl").write_text('{"id": "x"}\n')
    with pytest.raises(ContractViolation):
        read_manifest(tmp_path / "m.jsonl")
