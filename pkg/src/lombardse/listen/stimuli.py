"""Normalized stimulus stores for listening tests.

prepare_stimuli takes per-utterance condition renderings, loudness-normalizes
every audio stimulus to a common target (two-pass measurement, one linear
gain), generates the anchor as the unprocessed mixture at -10 dB SNR, and
writes everything into a directory-backed store with full normalization
provenance. Stimuli whose loudness is unmeasurable are excluded and logged
rather than crashing the batch.
"""

from __future__ import annotations

import json
import logging
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..dsp import Waveform
from ..loudness import UnmeasurableLoudnessError, loudness_normalize
from ..noise import mix_at_snr
from ..wavio import read_wav, write_wav

logger = logging.getLogger(__name__)

ANCHOR_SNR_DB = -10
DEFAULT_TARGET_LUFS = -23.0

# the seven rated MUSHRA conditions (the hidden reference is the clean
# signal itself; the anchor is the unprocessed mixture at -10 dB)
SYSTEM_CONDITIONS = ("AO-L", "AO-NL", "AV-L", "AV-NL")
MUSHRA_CONDITIONS = ("reference",) + SYSTEM_CONDITIONS + ("unprocessed",
                                                          "anchor")
INTELLIGIBILITY_CONDITIONS = ("unprocessed",) + SYSTEM_CONDITIONS

INTELLIGIBILITY_SNRS_DB = (-20, -15, -10, -5)
MUSHRA_SNRS_DB = (-5, 5)


@dataclass(frozen=True)
class StimulusRecord:
    """One stored stimulus with its loudness provenance.

    snr_db is the stimulus's own mixing SNR (None for the clean reference);
    trial_snr_db is the SNR of the trial the stimulus belongs to — they
    differ only for the anchor, which is mixed at -10 dB but rated inside
    trials at other SNRs.
    """

    stimulus_id: str
    utterance_id: str
    speaker_id: str
    condition: str
    snr_db: int | None
    audio_path: str
    frames_path: str = ""
    truth: dict | None = None  # keyword ground truth, intelligibility only
    loudness: dict = field(default_factory=dict)
    trial_snr_db: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "StimulusRecord":
        return cls(**d)


@dataclass
class CandidateUnit:
    """All condition renderings of one utterance at one SNR, pre-normalization.

    `conditions` maps condition name -> waveform; the clean reference and the
    anchor are derived by prepare_stimuli, not supplied here.
    """

    utterance_id: str
    speaker_id: str
    snr_db: int
    clean: Waveform
    conditions: dict[str, Waveform]
    frames: np.ndarray | None = None
    truth: dict | None = None


class StimulusStore:
    """Directory of normalized stimuli plus their records."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.records: dict[str, StimulusRecord] = {}

    def add(self, record: StimulusRecord, audio: Waveform,
            frames: np.ndarray | None = None) -> None:
        if record.stimulus_id in self.records:
            raise ValueError(f"duplicate stimulus id {record.stimulus_id!r}")
        (self.root / "audio").mkdir(parents=True, exist_ok=True)
        write_wav(self.root / record.audio_path, audio)
        if frames is not None:
            if not record.frames_path:
                raise ValueError("frames given but record has no frames_path")
            (self.root / "video").mkdir(parents=True, exist_ok=True)
            np.savez_compressed(self.root / record.frames_path,
                                frames=frames, fps=np.array(25))
        self.records[record.stimulus_id] = record

    def audio(self, stimulus_id: str) -> Waveform:
        return read_wav(self.root / self.record(stimulus_id).audio_path)

    def video(self, stimulus_id: str) -> tuple[np.ndarray, int] | None:
        record = self.record(stimulus_id)
        if not record.frames_path:
            return None
        with np.load(self.root / record.frames_path,
                     allow_pickle=False) as archive:
            return archive["frames"], int(archive["fps"])

    def record(self, stimulus_id: str) -> StimulusRecord:
        try:
            return self.records[stimulus_id]
        except KeyError:
            raise KeyError(f"unknown stimulus {stimulus_id!r}") from None

    def save(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.root / "store.jsonl", "w", encoding="utf-8") as fh:
            for stimulus_id in sorted(self.records):
                fh.write(json.dumps(self.records[stimulus_id].to_dict()) + "\n")

    @classmethod
    def load(cls, root: str | Path) -> "StimulusStore":
        store = cls(root)
        index = store.root / "store.jsonl"
        with open(index, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = StimulusRecord.from_dict(json.loads(line))
                store.records[record.stimulus_id] = record
        if not store.records:
            raise ValueError(f"{index}: store is empty")
        return store

    # --- views used by the session builders -------------------------------

    def mushra_units(self) -> dict[tuple[str, int], dict[str, str]]:
        """(utterance, trial snr) -> {condition: stimulus_id}, complete sets."""
        grouped: dict[tuple[str, int], dict[str, str]] = {}
        for record in self.records.values():
            if record.condition == "reference" or record.trial_snr_db is None:
                continue
            grouped.setdefault((record.utterance_id, record.trial_snr_db), {})[
                record.condition] = record.stimulus_id
        complete = {}
        for (utt, snr), conditions in grouped.items():
            ref = self._reference_id(utt)
            if ref is None:
                continue
            conditions = dict(conditions, reference=ref)
            if set(conditions) >= set(MUSHRA_CONDITIONS):
                complete[(utt, snr)] = conditions
        return complete

    def _reference_id(self, utterance_id: str) -> str | None:
        for record in self.records.values():
            if record.condition == "reference" and \
                    record.utterance_id == utterance_id:
                return record.stimulus_id
        return None

    def intelligibility_cells(self) -> dict[tuple[str, int, str], list[str]]:
        """(speaker, snr, condition) -> stimulus ids with keyword truth."""
        cells: dict[tuple[str, int, str], list[str]] = {}
        for stimulus_id in sorted(self.records):
            record = self.records[stimulus_id]
            if record.condition not in INTELLIGIBILITY_CONDITIONS:
                continue
            if record.snr_db is None or record.truth is None:
                continue
            cells.setdefault(
                (record.speaker_id, record.snr_db, record.condition),
                []).append(stimulus_id)
        return cells

    def speakers(self) -> list[str]:
        return sorted({r.speaker_id for r in self.records.values()})


def _normalize(name: str, audio: Waveform, target_lufs: float
               ) -> tuple[Waveform, dict] | None:
    try:
        normalized, report = loudness_normalize(audio, target_lufs)
    except UnmeasurableLoudnessError:
        logger.warning("stimulus %s has unmeasurable loudness; excluded",
                       name)
        return None
    provenance = {
        "target_lufs": target_lufs,
        "output_lufs": report.integrated_lufs,
        "gain_applied_db": report.gain_applied_db,
        "method": "two-pass: measure, single linear gain, re-measure",
    }
    return normalized, provenance


def prepare_stimuli(units: list[CandidateUnit], store_root: str | Path,
                    noise: Waveform | None = None,
                    target_lufs: float = DEFAULT_TARGET_LUFS,
                    kind: str = "mushra") -> StimulusStore:
    """Build a normalized stimulus store from condition renderings.

    kind="mushra": each unit must render every system condition plus
    "unprocessed"; the clean reference is stored once per utterance and the
    anchor (unprocessed at -10 dB) is generated here from `noise`.
    kind="intelligibility": each unit carries the five test conditions plus
    keyword truth; no reference or anchor is added.
    """
    if kind not in ("mushra", "intelligibility"):
        raise ValueError(f"unknown stimulus-set kind {kind!r}")
    if kind == "mushra" and noise is None:
        raise ValueError("mushra preparation needs noise to build the anchor")
    store = StimulusStore(store_root)
    references_done: set[str] = set()

    for unit in units:
        required = (set(SYSTEM_CONDITIONS) | {"unprocessed"}
                    if kind == "mushra" else set(INTELLIGIBILITY_CONDITIONS))
        missing = required - set(unit.conditions)
        if missing:
            raise ValueError(
                f"unit {unit.utterance_id}@{unit.snr_db} is missing "
                f"conditions: {', '.join(sorted(missing))}")
        if kind == "intelligibility" and unit.truth is None:
            raise ValueError(
                f"unit {unit.utterance_id}@{unit.snr_db} lacks keyword truth")

        renderings = dict(unit.conditions)
        if kind == "mushra":
            anchor_seed = zlib.crc32(f"anchor:{unit.utterance_id}".encode())
            renderings["anchor"] = mix_at_snr(unit.clean, noise,
                                              ANCHOR_SNR_DB, seed=anchor_seed)
            if unit.utterance_id not in references_done:
                _store_one(store, unit, "reference", None, unit.clean,
                           target_lufs)
                references_done.add(unit.utterance_id)

        for condition, audio in sorted(renderings.items()):
            snr = ANCHOR_SNR_DB if condition == "anchor" else unit.snr_db
            _store_one(store, unit, condition, snr, audio, target_lufs)

    if not store.records:
        raise ValueError("every stimulus was excluded; nothing to store")
    store.save()
    return store


def _store_one(store: StimulusStore, unit: CandidateUnit, condition: str,
               snr_db: int | None, audio: Waveform,
               target_lufs: float) -> None:
    is_reference = condition == "reference"
    suffix = "ref" if is_reference else f"{unit.snr_db}_{condition}"
    stimulus_id = f"{unit.utterance_id}__{suffix}"
    normalized = _normalize(stimulus_id, audio, target_lufs)
    if normalized is None:
        return
    audio_out, provenance = normalized
    frames = unit.frames
    record = StimulusRecord(
        stimulus_id=stimulus_id,
        utterance_id=unit.utterance_id,
        speaker_id=unit.speaker_id,
        condition=condition,
        snr_db=snr_db,
        audio_path=f"audio/{stimulus_id}.wav",
        frames_path=f"video/{unit.utterance_id}.npz" if frames is not None
        else "",
        truth=unit.truth,
        loudness=provenance,
        trial_snr_db=None if is_reference else unit.snr_db,
    )
    video_path = store.root / record.frames_path if record.frames_path else None
    already = video_path is not None and video_path.exists()
    store.add(record, audio_out, None if already else frames)
