"""Six-slot command-sentence vocabulary and transcript validation.

Every utterance follows the fixed syntax `command colour preposition letter
digit adverb` (e.g. "place red at C 4 please"). The letter slot excludes W
because it is the only multi-syllable letter name; colour, letter, and digit
are the keyword slots scored in listening tests.
"""

from __future__ import annotations

import string

import numpy as np

COMMANDS = ("bin", "lay", "place", "set")
COLOURS = ("blue", "green", "red", "white")
PREPOSITIONS = ("at", "by", "in", "with")
LETTERS = tuple(c for c in string.ascii_uppercase if c != "W")
DIGITS = tuple(str(d) for d in range(10))
ADVERBS = ("again", "now", "please", "soon")

SLOTS = ("command", "colour", "preposition", "letter", "digit", "adverb")
KEYWORD_SLOTS = ("colour", "letter", "digit")

VOCABULARY: dict[str, tuple[str, ...]] = {
    "command": COMMANDS,
    "colour": COLOURS,
    "preposition": PREPOSITIONS,
    "letter": LETTERS,
    "digit": DIGITS,
    "adverb": ADVERBS,
}


class TranscriptError(ValueError):
    """Raised when a transcript does not fit the six-slot sentence syntax."""


def validate_transcript(words) -> tuple[str, ...]:
    """Check a six-word transcript against the slot vocabularies.

    Accepts a sequence of words or a single space-separated string; returns
    the normalized word tuple. Raises TranscriptError naming the first slot
    whose word is out of vocabulary.
    """
    if isinstance(words, str):
        words = words.split()
    words = tuple(str(w) for w in words)
    if len(words) != len(SLOTS):
        raise TranscriptError(
            f"transcript must have exactly {len(SLOTS)} words "
            f"({' '.join(SLOTS)}), got {len(words)}: {' '.join(words)!r}")
    for slot, word in zip(SLOTS, words):
        if word not in VOCABULARY[slot]:
            raise TranscriptError(
                f"{word!r} is not a valid {slot}; "
                f"choices are {', '.join(VOCABULARY[slot])}")
    return words


def keywords(transcript) -> dict[str, str]:
    """Extract the scored keyword slots (colour, letter, digit)."""
    words = validate_transcript(transcript)
    by_slot = dict(zip(SLOTS, words))
    return {slot: by_slot[slot] for slot in KEYWORD_SLOTS}


def random_transcript(rng: np.random.Generator) -> tuple[str, ...]:
    """Draw one word per slot uniformly from its vocabulary."""
    return tuple(VOCABULARY[slot][int(rng.integers(len(VOCABULARY[slot])))]
                 for slot in SLOTS)
