"""Keyword correctness scoring for the play-once intelligibility test."""

from __future__ import annotations

from ..harness.grid import COLOURS, DIGITS, LETTERS

KEYWORD_FIELDS = ("colour", "letter", "digit")


def score_keywords(response: dict, truth: dict) -> dict[str, bool]:
    """Per-field correctness of one keyword response.

    Colour and digit are exact matches on their closed sets; the letter is a
    case-insensitive single-character match against the valid alphabet
    (which excludes W), so unparseable or excluded letters simply score
    incorrect rather than erroring.
    """
    for key in KEYWORD_FIELDS:
        if key not in truth:
            raise ValueError(f"truth lacks the {key!r} keyword")
    colour_ok = (response.get("colour") in COLOURS
                 and response["colour"] == truth["colour"])
    digit_ok = (str(response.get("digit")) in DIGITS
                and str(response["digit"]) == truth["digit"])
    letter_raw = response.get("letter")
    letter_norm = letter_raw.strip().upper() if isinstance(letter_raw, str) \
        else ""
    letter_ok = (len(letter_norm) == 1 and letter_norm in LETTERS
                 and letter_norm == truth["letter"].upper())
    return {"colour": colour_ok, "letter": letter_ok, "digit": digit_ok}
