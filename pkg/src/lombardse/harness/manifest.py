"""Corpus manifests: one JSON record per utterance, line-delimited.

A record carries identity (utterance/speaker), gender, speaking style, the
audio/video/landmark file paths (relative to the manifest's directory), and
the six-word transcript. Loading validates every field and reports errors by
utterance id and line number so a broken corpus is diagnosable.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

from ..noise import SPEAKING_STYLES
from .grid import TranscriptError, validate_transcript

logger = logging.getLogger(__name__)

GENDERS = ("f", "m")

# a speaker needs at least this many utterances of each style to support
# style-contrast analysis (feature deltas, per-speaker scatter)
MIN_UTTERANCES_PER_STYLE = 5


class ManifestError(ValueError):
    """Raised when a manifest file or record is malformed."""


@dataclass(frozen=True)
class UtteranceRecord:
    """One corpus utterance: identity, style, media paths, transcript."""

    utterance_id: str
    speaker_id: str
    gender: str
    style: str
    audio_path: str
    frames_path: str
    landmarks_path: str
    transcript: tuple[str, ...]

    def __post_init__(self):
        for field_name in ("utterance_id", "speaker_id", "audio_path"):
            if not getattr(self, field_name):
                raise ManifestError(f"{field_name} must be non-empty")
        if self.gender not in GENDERS:
            raise ManifestError(
                f"utterance {self.utterance_id!r}: gender must be one of "
                f"{GENDERS}, got {self.gender!r}")
        if self.style not in SPEAKING_STYLES:
            raise ManifestError(
                f"utterance {self.utterance_id!r}: style must be one of "
                f"{SPEAKING_STYLES}, got {self.style!r}")
        try:
            words = validate_transcript(self.transcript)
        except TranscriptError as exc:
            raise ManifestError(
                f"utterance {self.utterance_id!r}: {exc}") from exc
        object.__setattr__(self, "transcript", words)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["transcript"] = " ".join(self.transcript)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "UtteranceRecord":
        required = {"utterance_id", "speaker_id", "gender", "style",
                    "audio_path", "transcript"}
        missing = required - set(d)
        if missing:
            raise ManifestError(
                f"record {d.get('utterance_id', '?')!r} is missing "
                f"fields: {', '.join(sorted(missing))}")
        return cls(
            utterance_id=str(d["utterance_id"]),
            speaker_id=str(d["speaker_id"]),
            gender=str(d["gender"]),
            style=str(d["style"]),
            audio_path=str(d["audio_path"]),
            frames_path=str(d.get("frames_path", "")),
            landmarks_path=str(d.get("landmarks_path", "")),
            transcript=d["transcript"],
        )


def load_manifest(path: str | Path) -> list[UtteranceRecord]:
    """Read a line-delimited JSON manifest, validating every record.

    Utterance ids must be unique and each speaker's gender consistent across
    their records; violations raise ManifestError naming the offender.
    """
    path = Path(path)
    records: list[UtteranceRecord] = []
    seen_ids: set[str] = set()
    speaker_gender: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(
                    f"{path} line {lineno}: invalid JSON ({exc})") from exc
            try:
                record = UtteranceRecord.from_dict(payload)
            except ManifestError as exc:
                raise ManifestError(f"{path} line {lineno}: {exc}") from exc
            if record.utterance_id in seen_ids:
                raise ManifestError(
                    f"{path} line {lineno}: duplicate utterance id "
                    f"{record.utterance_id!r}")
            seen_ids.add(record.utterance_id)
            previous = speaker_gender.setdefault(record.speaker_id,
                                                 record.gender)
            if previous != record.gender:
                raise ManifestError(
                    f"{path} line {lineno}: speaker {record.speaker_id!r} "
                    f"listed as {record.gender!r} but earlier records say "
                    f"{previous!r}")
            records.append(record)
    if not records:
        raise ManifestError(f"{path}: manifest contains no records")
    return records


def save_manifest(path: str | Path, records: list[UtteranceRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict()) + "\n")


def records_by_speaker(records: list[UtteranceRecord]
                       ) -> dict[str, list[UtteranceRecord]]:
    by_speaker: dict[str, list[UtteranceRecord]] = {}
    for record in records:
        by_speaker.setdefault(record.speaker_id, []).append(record)
    return by_speaker


def evaluable_speakers(records: list[UtteranceRecord],
                       min_per_style: int = MIN_UTTERANCES_PER_STYLE
                       ) -> tuple[list[str], list[str]]:
    """Split speakers into (evaluable, flagged) by per-style utterance count.

    A speaker supports style-contrast analysis only with at least
    min_per_style utterances of *each* speaking style; the rest are flagged
    (and logged) so downstream analyses can exclude them.
    """
    evaluable: list[str] = []
    flagged: list[str] = []
    for speaker, recs in sorted(records_by_speaker(records).items()):
        counts = {style: 0 for style in SPEAKING_STYLES}
        for record in recs:
            counts[record.style] += 1
        if all(count >= min_per_style for count in counts.values()):
            evaluable.append(speaker)
        else:
            flagged.append(speaker)
            logger.warning(
                "speaker %s flagged: %s utterances per style, need >= %d "
                "of each", speaker,
                {s: counts[s] for s in SPEAKING_STYLES}, min_per_style)
    return evaluable, flagged
