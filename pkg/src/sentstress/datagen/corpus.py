"""A small template grammar that writes children's-story style prose.

Stands in for a real story corpus so that dataset generation runs offline.
Paragraphs deliberately include short exclamations that the sentence
filter must drop.
"""

from __future__ import annotations

import numpy as np

NAMES = ["Tom", "Lily", "Ben", "Mia", "Sam", "Anna", "Max", "Sue", "Timmy", "Lucy"]
ANIMALS = ["cat", "dog", "bird", "fox", "bear", "frog", "bunny", "puppy", "kitten", "elephant"]
THINGS = ["ball", "kite", "box", "cake", "hat", "boat", "flower", "balloon", "treasure", "blanket"]
PLACES = ["park", "garden", "forest", "house", "river", "school", "kitchen", "playground"]
ADJS = ["big", "red", "small", "happy", "shiny", "soft", "little", "beautiful", "colorful", "magnificent"]
FEELINGS = ["happy", "sad", "tired", "scared", "excited", "proud", "hungry", "surprised"]
VERBS_T = ["found", "saw", "liked", "wanted", "painted", "carried", "dropped", "discovered"]
VERBS_I = ["ran", "jumped", "played", "danced", "slept", "laughed", "waited", "swam"]
ADVERBS = ["fast", "slowly", "quietly", "happily", "together", "outside", "again", "carefully"]
DETS = ["a", "the", "his", "her"]
EXCLAIM = ["Oh no!", "Yes!", "Wow!", "Look!", "Hi.", "The end."]

TEMPLATES = [
    "{Name} {vt} {det} {adj} {thing}.",
    "The {adj} {animal} {vi} {adv}.",
    "{Name} and {Name2} {vi} in the {place}.",
    "{Name} {vt} {det} {animal} near the {place}.",
    "{Name} was very {feel}.",
    "The {animal} {vt} a {adj} {thing} {adv}.",
    "One day {Name} {vi} to the {place}.",
    "{Name} gave {Name2} a {adj} {thing}.",
]


def _pick(rng: np.random.Generator, items):
    return items[int(rng.integers(len(items)))]


def story_sentence(rng: np.random.Generator) -> str:
    name = _pick(rng, NAMES)
    name2 = _pick(rng, [n for n in NAMES if n != name])
    return _pick(rng, TEMPLATES).format(
        Name=name, Name2=name2, vt=_pick(rng, VERBS_T), vi=_pick(rng, VERBS_I),
        det=_pick(rng, DETS), adj=_pick(rng, ADJS), thing=_pick(rng, THINGS),
        animal=_pick(rng, ANIMALS), place=_pick(rng, PLACES), adv=_pick(rng, ADVERBS),
        feel=_pick(rng, FEELINGS))


def toy_story_text(n_sentences: int, seed: int = 0, per_paragraph: int = 5) -> str:
    """Prose with ``n_sentences`` usable sentences plus filler exclamations."""
    rng = np.random.default_rng(seed)
    paragraphs, current = [], []
    for i in range(n_sentences):
        current.append(story_sentence(rng))
        if rng.random() < 0.3:
            current.append(_pick(rng, EXCLAIM))
        if len(current) >= per_paragraph:
            paragraphs.append(" ".join(current))
            current = []
    if current:
        paragraphs.append(" ".join(current))
    return "\n\n".join(paragraphs) + "\n"
