"""Choosing which words to stress: a deterministic rule-based provider and
a client for a remote chat-completion model behind a pluggable transport."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from ..core import StressAnnotatedSentence, words_of

log = logging.getLogger(__name__)

STOPWORDS = frozenset("""
a an the and or but so if then than as of to in on at by for from with into onto
up down out over under about after before again all any both each few more most
other some such no nor not only own same too very can will just don should now
is am are was were be been being have has had having do does did doing would
could it its it's he him his she her hers they them their theirs i me my we us
our you your yours this that these those there here when where who whom which
what why how one day
""".split())


class ProviderError(RuntimeError):
    """A remote labeling request failed; safe to retry later."""

    retryable = True

    def __init__(self, sentence_id: str, message: str):
        super().__init__(f"{sentence_id}: {message}")
        self.sentence_id = sentence_id


class SkipSample(Exception):
    """The sentence cannot be labeled; carries a short machine-readable reason."""

    def __init__(self, sentence_id: str, reason: str):
        super().__init__(f"{sentence_id}: {reason}")
        self.sentence_id = sentence_id
        self.reason = reason


class StressLabelProvider(Protocol):
    def propose(self, sentence_id: str, words: Sequence[str]) -> tuple[list[int], list[int]]:
        """Return two distinct binary labelings of ``words``."""


class RuleBasedProvider:
    """Variant 0 stresses the longest content word, variant 1 the last
    content word other than that one (ties go to the earliest position)."""

    def __init__(self, stopwords: frozenset[str] = STOPWORDS):
        self.stopwords = stopwords

    def propose(self, sentence_id, words):
        content = [i for i, w in enumerate(words) if w.lower() not in self.stopwords]
        if not content:
            raise SkipSample(sentence_id, "no_stressable_word")
        first = max(content, key=lambda i: (len(words[i]), -i))
        rest = [i for i in content if i != first]
        if not rest:
            raise SkipSample(sentence_id, "single_stressable_word")
        second = rest[-1]
        v0 = [int(i == first) for i in range(len(words))]
        v1 = [int(i == second) for i in range(len(words))]
        return v0, v1


@dataclass(frozen=True)
class LabelRequest:
    sentence_id: str
    model: str
    prompt: str


@dataclass(frozen=True)
class LabelResponse:
    sentence_id: str
    content: str


PROMPT_TEMPLATE = (
    "Give two different options for which words a speaker would stress in the "
    "sentence below so that the stress changes its interpretation in a "
    "semantically meaningful way. Answer with JSON of the form "
    '{{"options": [[word, ...], [word, ...]]}}.\nSentence: {sentence}'
)


class RemoteLLMProvider:
    """Chat-model labeling client.

    ``transport`` takes a :class:`LabelRequest` and returns a
    :class:`LabelResponse` (or raises).  No transport ships with the package;
    callers wire in their own HTTP client.
    """

    def __init__(self, transport: Callable[[LabelRequest], LabelResponse], *,
                 model: str = "gpt-4o-mini", max_retries: int = 3,
                 backoff_s: float = 1.0, sleep: Callable[[float], None] = time.sleep):
        self.transport = transport
        self.model = model
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.sleep = sleep

    def _call(self, request: LabelRequest) -> LabelResponse:
        delay = self.backoff_s
        for attempt in range(self.max_retries + 1):
            try:
                return self.transport(request)
            except Exception as exc:  # transport errors are opaque to us
                if attempt == self.max_retries:
                    raise ProviderError(request.sentence_id, f"transport failed: {exc}") from exc
                log.warning("label request %s failed (%s), retrying in %.1fs",
                            request.sentence_id, exc, delay)
                self.sleep(delay)
                delay *= 2
        raise AssertionError("unreachable")

    def propose(self, sentence_id, words):
        request = LabelRequest(sentence_id, self.model,
                               PROMPT_TEMPLATE.format(sentence=" ".join(words)))
        response = self._call(request)
        try:
            options = json.loads(response.content)["options"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(sentence_id, f"unparseable response: {exc}") from exc
        lowered = [w.lower() for w in words]
        labelings = []
        for option in options[:2]:
            picked = {str(w).lower() for w in option}
            labelings.append([int(w in picked) for w in lowered])
        if len(labelings) < 2:
            raise ProviderError(sentence_id, "fewer than two options returned")
        return labelings[0], labelings[1]


def select_stress_words(sentence: str, provider: StressLabelProvider,
                        sentence_id: str = "") -> tuple[StressAnnotatedSentence, StressAnnotatedSentence]:
    """Label ``sentence`` twice; raises :class:`SkipSample` when unusable."""
    words = words_of(sentence)
    if len(words) < 3:
        raise SkipSample(sentence_id, "too_few_words")
    v0, v1 = provider.propose(sentence_id, words)
    if not any(v0) or not any(v1):
        raise SkipSample(sentence_id, "empty_labeling")
    if v0 == v1:
        raise SkipSample(sentence_id, "identical_labelings")
    return (StressAnnotatedSentence(f"{sentence_id}-v0", sentence, words, v0, 0),
            StressAnnotatedSentence(f"{sentence_id}-v1", sentence, words, v1, 1))
