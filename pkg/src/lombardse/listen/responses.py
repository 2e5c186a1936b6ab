"""Response payload validation and immutable storage records.

MUSHRA payloads carry exactly one integer rating in [0, 100] per rated slot;
keyword payloads carry a colour and digit from their closed option lists and
a free-text letter (scored later, so nonsense letters are stored but marked
incorrect at scoring time). A trial accepts one response, ever; a retry with
the same idempotency token is acknowledged without storing a duplicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..harness.grid import COLOURS, DIGITS
from .stimuli import MUSHRA_CONDITIONS

MAX_LETTER_LENGTH = 4  # free text, but reject essays


class ResponseError(ValueError):
    """Raised when a response payload fails validation."""


class DuplicateResponseError(ResponseError):
    """Raised when a trial that already has a response receives another."""


@dataclass(frozen=True)
class StoredResponse:
    """One validated, immutable subject response."""

    trial_id: str
    payload: dict
    timestamp: str
    token: str = ""

    def to_dict(self) -> dict:
        return {"trial_id": self.trial_id, "payload": dict(self.payload),
                "timestamp": self.timestamp, "token": self.token}


def validate_mushra_payload(payload: dict) -> dict:
    """Normalize {"ratings": [...]} to exactly 7 integers in [0, 100]."""
    if not isinstance(payload, dict) or "ratings" not in payload:
        raise ResponseError("payload must carry a 'ratings' list")
    ratings = payload["ratings"]
    if not isinstance(ratings, (list, tuple)):
        raise ResponseError("'ratings' must be a list")
    if len(ratings) != len(MUSHRA_CONDITIONS):
        raise ResponseError(
            f"expected {len(MUSHRA_CONDITIONS)} ratings, got {len(ratings)}")
    clean = []
    for index, value in enumerate(ratings):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ResponseError(
                f"rating {index} must be an integer, got {value!r}")
        if not 0 <= value <= 100:
            raise ResponseError(
                f"rating {index} is {value}; the scale is 0 to 100")
        clean.append(int(value))
    return {"ratings": clean}


def validate_intelligibility_payload(payload: dict) -> dict:
    """Normalize {colour, digit, letter}; colour/digit are closed choices."""
    if not isinstance(payload, dict):
        raise ResponseError("payload must be an object")
    missing = {"colour", "digit", "letter"} - set(payload)
    if missing:
        raise ResponseError(f"payload lacks {', '.join(sorted(missing))}")
    colour = payload["colour"]
    if colour not in COLOURS:
        raise ResponseError(
            f"colour {colour!r} is not one of {', '.join(COLOURS)}")
    digit = str(payload["digit"])
    if digit not in DIGITS:
        raise ResponseError(f"digit {payload['digit']!r} is not 0-9")
    letter = payload["letter"]
    if not isinstance(letter, str):
        raise ResponseError("letter must be a string")
    if len(letter.strip()) > MAX_LETTER_LENGTH:
        raise ResponseError("letter entry is too long")
    return {"colour": colour, "digit": digit, "letter": letter.strip()}
