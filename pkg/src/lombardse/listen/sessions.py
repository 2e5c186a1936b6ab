"""Listening-test session construction: trials, sequences, permutations.

A MUSHRA session is 2 sequences x 8 trials (4 at -5 dB, 4 at +5 dB per
sequence, material from 4 randomly chosen speakers per sequence); each trial
presents an open reference plus 7 rated stimuli — the hidden reference, the
four systems, the unprocessed mixture, and the -10 dB anchor — in a seeded
random permutation. An intelligibility session is 2 sequences, each a
complete speakers x SNRs x conditions factorial in seeded random order, so
every (SNR, condition) cell appears once per speaker per sequence. All
builders are pure functions of (store contents, seed).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..seeding import rng_for
from .stimuli import (INTELLIGIBILITY_CONDITIONS, INTELLIGIBILITY_SNRS_DB,
                      MUSHRA_CONDITIONS, MUSHRA_SNRS_DB, StimulusStore)

MUSHRA_TRIALS_PER_SNR = 4
MUSHRA_SEQUENCES = 2
MUSHRA_SPEAKERS_PER_SEQUENCE = 4
INTELLIGIBILITY_SEQUENCES = 2
INTELLIGIBILITY_SPEAKERS = 8
TRAINING_TRIALS = 40


class SessionBuildError(ValueError):
    """Raised when the stimulus store cannot support the requested protocol."""


@dataclass(frozen=True)
class MushraTrial:
    """One multi-stimulus rating screen."""

    trial_id: str
    sequence_index: int
    snr_db: int
    utterance_id: str
    speaker_id: str
    reference_id: str
    rated_ids: tuple[str, ...]        # presentation order
    rated_conditions: tuple[str, ...]  # server-side identity of each slot

    def __post_init__(self):
        if len(self.rated_ids) != len(MUSHRA_CONDITIONS):
            raise ValueError(f"a trial rates exactly "
                             f"{len(MUSHRA_CONDITIONS)} stimuli")
        if sorted(self.rated_conditions) != sorted(MUSHRA_CONDITIONS):
            raise ValueError("rated conditions must be a permutation of "
                             f"{MUSHRA_CONDITIONS}")
        hidden = [i for i, c in enumerate(self.rated_conditions)
                  if c == "reference"]
        if len(hidden) != 1:
            raise ValueError("exactly one hidden reference per trial")
        if self.rated_ids[hidden[0]] != self.reference_id:
            raise ValueError("hidden reference must be the open reference "
                             "stimulus itself")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IntelligibilityTrial:
    """One play-once keyword-report trial."""

    trial_id: str
    sequence_index: int
    stimulus_id: str
    speaker_id: str
    snr_db: int
    condition: str
    truth: dict

    def __post_init__(self):
        for key in ("colour", "letter", "digit"):
            if key not in self.truth:
                raise ValueError(f"trial {self.trial_id}: truth lacks {key!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Session:
    """An ordered trial sequence for one subject."""

    session_id: str
    kind: str  # "mushra" | "intelligibility" | "intelligibility_training"
    seed: int
    trials: tuple = ()
    subject: str = "anonymous"

    def trial(self, trial_id: str):
        for trial in self.trials:
            if trial.trial_id == trial_id:
                return trial
        raise KeyError(f"session {self.session_id} has no trial "
                       f"{trial_id!r}")

    def to_dict(self) -> dict:
        return {"session_id": self.session_id, "kind": self.kind,
                "seed": self.seed, "subject": self.subject,
                "trials": [t.to_dict() for t in self.trials]}


def _trial_from_dict(kind: str, d: dict):
    if kind == "mushra":
        return MushraTrial(
            trial_id=d["trial_id"], sequence_index=d["sequence_index"],
            snr_db=d["snr_db"], utterance_id=d["utterance_id"],
            speaker_id=d["speaker_id"], reference_id=d["reference_id"],
            rated_ids=tuple(d["rated_ids"]),
            rated_conditions=tuple(d["rated_conditions"]))
    return IntelligibilityTrial(
        trial_id=d["trial_id"], sequence_index=d["sequence_index"],
        stimulus_id=d["stimulus_id"], speaker_id=d["speaker_id"],
        snr_db=d["snr_db"], condition=d["condition"], truth=dict(d["truth"]))


def session_from_dict(d: dict) -> Session:
    """Rebuild a stored session (inverse of Session.to_dict)."""
    trials = tuple(_trial_from_dict(d["kind"], t) for t in d["trials"])
    return Session(session_id=d["session_id"], kind=d["kind"],
                   seed=int(d["seed"]), trials=trials,
                   subject=d.get("subject", "anonymous"))


def build_mushra_session(store: StimulusStore, seed: int,
                         session_id: str | None = None,
                         subject: str = "anonymous") -> Session:
    """2 sequences x 8 rating trials from 4 random speakers per sequence."""
    units = store.mushra_units()
    by_speaker: dict[str, dict[int, list[tuple[str, int]]]] = {}
    for (utt, snr), conditions in sorted(units.items()):
        speaker = store.record(conditions["unprocessed"]).speaker_id
        by_speaker.setdefault(speaker, {}).setdefault(snr, []).append(
            (utt, snr))
    eligible = sorted(s for s, by_snr in by_speaker.items()
                      if all(by_snr.get(snr) for snr in MUSHRA_SNRS_DB))
    if len(eligible) < MUSHRA_SPEAKERS_PER_SEQUENCE:
        raise SessionBuildError(
            f"need {MUSHRA_SPEAKERS_PER_SEQUENCE} speakers with complete "
            f"rating material at {MUSHRA_SNRS_DB} dB, found {len(eligible)}")

    trials = []
    for sequence in range(MUSHRA_SEQUENCES):
        rng = rng_for(seed, 41, sequence)
        chosen = [eligible[i] for i in
                  rng.choice(len(eligible), MUSHRA_SPEAKERS_PER_SEQUENCE,
                             replace=False)]
        sequence_units = []
        for speaker in chosen:
            for snr in MUSHRA_SNRS_DB:
                options = by_speaker[speaker][snr]
                sequence_units.append(
                    options[int(rng.integers(len(options)))])
        order = rng.permutation(len(sequence_units))
        for position, unit_index in enumerate(order):
            utt, snr = sequence_units[int(unit_index)]
            conditions = units[(utt, snr)]
            slots = rng.permutation(len(MUSHRA_CONDITIONS))
            rated_conditions = tuple(MUSHRA_CONDITIONS[int(i)] for i in slots)
            rated_ids = tuple(conditions[c] for c in rated_conditions)
            trials.append(MushraTrial(
                trial_id=f"m{sequence}-{position}",
                sequence_index=sequence,
                snr_db=snr,
                utterance_id=utt,
                speaker_id=store.record(conditions["unprocessed"]).speaker_id,
                reference_id=conditions["reference"],
                rated_ids=rated_ids,
                rated_conditions=rated_conditions,
            ))
    session_id = session_id or f"mushra-{seed}"
    return Session(session_id=session_id, kind="mushra", seed=seed,
                   trials=tuple(trials), subject=subject)


def _intelligibility_speakers(store: StimulusStore, seed: int) -> list[str]:
    cells = store.intelligibility_cells()
    speakers = sorted({speaker for speaker, _, _ in cells})
    if len(speakers) < INTELLIGIBILITY_SPEAKERS:
        raise SessionBuildError(
            f"keyword test needs {INTELLIGIBILITY_SPEAKERS} speakers with "
            f"material, found {len(speakers)}")
    rng = rng_for(seed, 43)
    chosen = sorted(speakers[i] for i in
                    rng.choice(len(speakers), INTELLIGIBILITY_SPEAKERS,
                               replace=False))
    for speaker in chosen:
        for snr in INTELLIGIBILITY_SNRS_DB:
            for condition in INTELLIGIBILITY_CONDITIONS:
                if not cells.get((speaker, snr, condition)):
                    raise SessionBuildError(
                        f"no stimulus for speaker {speaker} at {snr} dB "
                        f"in condition {condition}")
    return chosen


def build_intelligibility_session(store: StimulusStore, seed: int,
                                  session_id: str | None = None,
                                  subject: str = "anonymous") -> Session:
    """2 sequences, each one complete speakers x SNRs x conditions factorial."""
    cells = store.intelligibility_cells()
    speakers = _intelligibility_speakers(store, seed)

    trials = []
    for sequence in range(INTELLIGIBILITY_SEQUENCES):
        rng = rng_for(seed, 47, sequence)
        sequence_cells = [(speaker, snr, condition)
                          for speaker in speakers
                          for snr in INTELLIGIBILITY_SNRS_DB
                          for condition in INTELLIGIBILITY_CONDITIONS]
        order = rng.permutation(len(sequence_cells))
        for position, cell_index in enumerate(order):
            speaker, snr, condition = sequence_cells[int(cell_index)]
            options = cells[(speaker, snr, condition)]
            stimulus_id = options[int(rng.integers(len(options)))]
            record = store.record(stimulus_id)
            trials.append(IntelligibilityTrial(
                trial_id=f"i{sequence}-{position}",
                sequence_index=sequence,
                stimulus_id=stimulus_id,
                speaker_id=speaker,
                snr_db=snr,
                condition=condition,
                truth=dict(record.truth),
            ))
    session_id = session_id or f"intelligibility-{seed}"
    return Session(session_id=session_id, kind="intelligibility", seed=seed,
                   trials=tuple(trials), subject=subject)


def build_training_session(store: StimulusStore, seed: int,
                           session_id: str | None = None,
                           subject: str = "anonymous") -> Session:
    """A 40-trial familiarization run; its responses are discarded later."""
    candidates = sorted(
        stimulus_id for stimulus_id, record in store.records.items()
        if record.condition in INTELLIGIBILITY_CONDITIONS
        and record.truth is not None)
    if len(candidates) < TRAINING_TRIALS:
        raise SessionBuildError(
            f"training needs {TRAINING_TRIALS} distinct stimuli, found "
            f"{len(candidates)}")
    rng = rng_for(seed, 53)
    picked = rng.choice(len(candidates), TRAINING_TRIALS, replace=False)
    trials = []
    for position, index in enumerate(picked):
        record = store.record(candidates[int(index)])
        trials.append(IntelligibilityTrial(
            trial_id=f"t0-{position}",
            sequence_index=0,
            stimulus_id=record.stimulus_id,
            speaker_id=record.speaker_id,
            snr_db=record.snr_db,
            condition=record.condition,
            truth=dict(record.truth),
        ))
    session_id = session_id or f"training-{seed}"
    return Session(session_id=session_id, kind="intelligibility_training",
                   seed=seed, trials=tuple(trials), subject=subject)
