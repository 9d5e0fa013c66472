"""Domain types and text plumbing shared by every other module.

Words are maximal alphanumeric runs (internal apostrophes kept, so
``don't`` is one word).  Everything else that is not whitespace is a
punctuation token carrying word index -1.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

WORD_RE = re.compile(r"[A-Za-z0-9]+(?:'[A-Za-z0-9]+)*")
_TOKEN_RE = re.compile(r"(\s*)([A-Za-z0-9]+(?:'[A-Za-z0-9]+)*|\S)")

ABBREVIATIONS = frozenset({"Mr.", "Mrs.", "Dr.", "Ms.", "St."})
MIN_WORDS = 3
SPLIT_THRESHOLD = 6
CHUNK_LEN = 4


class ContractViolation(ValueError):
    """An operation was called with inputs that break its preconditions."""


@dataclass(frozen=True)
class StressAnnotatedSentence:
    id: str
    text: str
    words: tuple[str, ...]
    stress: tuple[int, ...]
    variant: int = 0

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "stress", tuple(int(s) for s in self.stress))
        if len(self.words) != len(self.stress):
            raise ContractViolation(
                f"{self.id}: {len(self.words)} words but {len(self.stress)} labels")
        if any(not w for w in self.words):
            raise ContractViolation(f"{self.id}: empty word")
        if " ".join(self.words).split(" ") != list(self.words):
            raise ContractViolation(f"{self.id}: words contain whitespace")
        if len(self.words) < MIN_WORDS:
            raise ContractViolation(f"{self.id}: fewer than {MIN_WORDS} words")
        if any(s not in (0, 1) for s in self.stress):
            raise ContractViolation(f"{self.id}: stress labels must be 0/1")
        if self.variant not in (0, 1):
            raise ContractViolation(f"{self.id}: variant must be 0 or 1")


@dataclass(frozen=True)
class TokenAlignment:
    tokens: tuple[str, ...]
    word_index: tuple[int, ...]
    token_labels: tuple[int, ...]


@dataclass(frozen=True)
class Rejected:
    """Word-count filter outcome: the hypothesis cannot carry gold labels."""

    gold_words: int
    hyp_words: int

    def __bool__(self):
        return False


@dataclass
class WordPrediction:
    words: list[str]
    predicted: list[int]
    gold: list[int] | None = None
    sample_id: str = ""

    def __post_init__(self):
        if len(self.words) != len(self.predicted):
            raise ContractViolation("words and predicted labels differ in length")
        if self.gold is not None and len(self.gold) != len(self.words):
            raise ContractViolation("words and gold labels differ in length")


@dataclass
class ManifestRecord:
    """One line of a dataset manifest (JSONL)."""

    id: str
    text: str
    words: list[str]
    stress: list[int]
    variant: int
    audio: str
    word_start_s: list[float]
    voice: str
    extra: dict = field(default_factory=dict, repr=False)

    _FIELDS = ("id", "text", "words", "stress", "variant", "audio", "word_start_s", "voice")

    def to_json(self) -> str:
        d = {k: getattr(self, k) for k in self._FIELDS}
        return json.dumps(d, ensure_ascii=False, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestRecord":
        missing = [k for k in cls._FIELDS if k not in d]
        if missing:
            raise ContractViolation(f"manifest record missing fields {missing}")
        extra = {k: v for k, v in d.items() if k not in cls._FIELDS}
        return cls(
            id=str(d["id"]), text=d["text"], words=list(d["words"]),
            stress=[int(s) for s in d["stress"]], variant=int(d["variant"]),
            audio=d["audio"], word_start_s=[float(t) for t in d["word_start_s"]],
            voice=str(d["voice"]), extra=extra)

    def sentence(self) -> StressAnnotatedSentence:
        return StressAnnotatedSentence(self.id, self.text, self.words, self.stress, self.variant)


def read_manifest(path: str | Path) -> list[ManifestRecord]:
    path = Path(path)
    records = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(ManifestRecord.from_dict(json.loads(line)))
    return records


def write_manifest(path: str | Path, records: Iterable[ManifestRecord]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")
    return path


def words_of(text: str) -> list[str]:
    return WORD_RE.findall(text)


def split_into_sentences(text: str) -> list[str]:
    """Split prose at ``.``, ``!`` and ``?``, dropping sentences under three words.

    A period that ends one of :data:`ABBREVIATIONS` is not a boundary.
    """
    sentences = []
    start = 0
    for m in re.finditer(r"[.!?]+", text):
        end = m.end()
        if m.group() == ".":
            preceding = text[start:end].split()
            if preceding and preceding[-1] in ABBREVIATIONS:
                continue
        # boundary only when followed by whitespace or end of text
        if end < len(text) and not text[end].isspace() and text[end] not in "\"')":
            continue
        while end < len(text) and text[end] in "\"')":
            end += 1
        sentences.append(text[start:end].strip())
        start = end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return [s for s in sentences if len(words_of(s)) >= MIN_WORDS]


def _chunk(word: str) -> list[str]:
    if len(word) <= SPLIT_THRESHOLD:
        return [word]
    return [word[i:i + CHUNK_LEN] for i in range(0, len(word), CHUNK_LEN)]


def tokenize(text: str) -> tuple[list[str], list[int]]:
    """Split ``text`` into subword tokens with a token-to-word index map.

    Whitespace preceding a token is kept as that token's prefix, so
    ``"".join(tokens) == text`` (trailing whitespace rides on the last token).
    """
    if not text.strip():
        raise ContractViolation("tokenize needs non-blank text")
    tokens: list[str] = []
    word_index: list[int] = []
    pos = 0
    n_words = 0
    for m in _TOKEN_RE.finditer(text):
        space, body = m.group(1), m.group(2)
        pos = m.end()
        if WORD_RE.fullmatch(body):
            chunks = _chunk(body)
            tokens.append(space + chunks[0])
            tokens.extend(chunks[1:])
            word_index.extend([n_words] * len(chunks))
            n_words += 1
        else:
            tokens.append(space + body)
            word_index.append(-1)
    if pos < len(text):
        tokens[-1] += text[pos:]
    return tokens, word_index


def detokenize(tokens: Sequence[str]) -> str:
    return "".join(tokens)


def word_index_from_tokens(tokens: Sequence[str]) -> list[int]:
    """Recover the word index map of a generated token sequence.

    A token opens a new word when it starts (after optional whitespace) with
    an alphanumeric character and either carries leading whitespace or
    follows a non-word token; otherwise an alphanumeric token continues the
    previous word.
    """
    index = []
    n_words = 0
    prev_word = False
    for tok in tokens:
        body = tok.lstrip()
        if prev_word and body == tok and len(body) > 1 and body[0] == "'" and body[1].isalnum():
            index.append(n_words - 1)   # chunk boundary landed on an apostrophe
        elif body and body[0].isascii() and body[0].isalnum():
            if prev_word and body == tok:
                index.append(n_words - 1)
            else:
                index.append(n_words)
                n_words += 1
            prev_word = True
        else:
            index.append(-1)
            prev_word = False
    return index


def n_words_in(word_index: Sequence[int]) -> int:
    return max(word_index, default=-1) + 1


def align_stress_labels(gold: StressAnnotatedSentence, hyp_tokens: Sequence[str],
                        word_index: Sequence[int]) -> TokenAlignment | Rejected:
    """Transfer gold word labels onto hypothesis tokens by word position.

    Spelling differences are tolerated; only the word count must match.
    """
    if len(hyp_tokens) != len(word_index):
        raise ContractViolation("tokens and word_index differ in length")
    hyp_words = n_words_in(word_index)
    if hyp_words != len(gold.words):
        return Rejected(len(gold.words), hyp_words)
    labels = tuple(0 if w < 0 else gold.stress[w] for w in word_index)
    return TokenAlignment(tuple(hyp_tokens), tuple(word_index), labels)


def aggregate_token_to_word(token_labels: Sequence[int], word_index: Sequence[int]) -> list[int]:
    """A word is stressed iff at least one of its tokens is."""
    if len(token_labels) != len(word_index):
        raise ContractViolation(
            f"{len(token_labels)} token labels for {len(word_index)} index entries")
    out = [0] * n_words_in(word_index)
    for lab, w in zip(token_labels, word_index):
        if w >= 0 and lab:
            out[w] = 1
    return out

