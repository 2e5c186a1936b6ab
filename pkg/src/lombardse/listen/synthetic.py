"""Fabricated listening-test material for desk-scale runs and demos.

Builds stimulus stores from synthetic speech-like signals without any corpus,
trained systems, or human subjects: "system outputs" are simply mixtures at
offset SNRs, which is enough for everything downstream — the protocols,
service, and UI never look inside the audio, they only need distinct,
loudness-measurable renderings per condition. Quality-rating material gets
five speakers with every condition at both trial SNRs; keyword material gets
eight speakers covering the full SNR x condition factorial with ground-truth
keywords.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..dsp import Waveform
from ..harness.grid import keywords, random_transcript
from ..noise import fit_lpc, generate_ssn, mix_at_snr, synth_speechlike
from ..seeding import rng_for
from .stimuli import (INTELLIGIBILITY_CONDITIONS, INTELLIGIBILITY_SNRS_DB,
                      MUSHRA_SNRS_DB, SYSTEM_CONDITIONS, CandidateUnit,
                      StimulusStore, prepare_stimuli)

DEMO_QUALITY_SPEAKERS = 5
DEMO_KEYWORD_SPEAKERS = 8
_VIDEO_FRAMES = 18
_VIDEO_SIZE = 16


def demo_noise(seed: int = 0, duration_s: float = 2.0) -> Waveform:
    """Speech-shaped noise fit on three fabricated talkers."""
    talkers = [synth_speechlike(seed=seed * 1000 + 900 + i, duration_s=1.0,
                                f0_hz=140.0 + 30.0 * i, style="non_lombard")
               for i in range(3)]
    return generate_ssn(fit_lpc(talkers), duration_s, seed=seed * 1000 + 901)


def _video(seed_key) -> np.ndarray:
    rng = rng_for(*seed_key)
    return rng.integers(0, 256, size=(_VIDEO_FRAMES, _VIDEO_SIZE,
                                      _VIDEO_SIZE)).astype(np.uint8)


def demo_quality_units(noise: Waveform,
                       n_speakers: int = DEMO_QUALITY_SPEAKERS,
                       seed: int = 0,
                       duration_s: float = 0.7) -> list[CandidateUnit]:
    """One rating unit per (speaker, trial SNR), all conditions rendered."""
    units = []
    for sp in range(n_speakers):
        for j, snr in enumerate(MUSHRA_SNRS_DB):
            utterance = f"sp{sp}_u{j}"
            clean = synth_speechlike(seed=seed * 10000 + 37 + 10 * sp + j,
                                     duration_s=duration_s,
                                     f0_hz=120.0 + 25.0 * sp,
                                     style="non_lombard")
            conditions = {"unprocessed": mix_at_snr(
                clean, noise, snr, seed=seed * 10000 + 7000 + 10 * sp + j)}
            for k, condition in enumerate(SYSTEM_CONDITIONS):
                conditions[condition] = mix_at_snr(
                    clean, noise, snr + 2 + k,
                    seed=seed * 10000 + 7100 + 10 * sp + j + k)
            units.append(CandidateUnit(
                utterance_id=utterance, speaker_id=f"sp{sp}", snr_db=snr,
                clean=clean, conditions=conditions,
                frames=_video((seed, 5, sp, j))))
    return units


def demo_keyword_units(noise: Waveform,
                       n_speakers: int = DEMO_KEYWORD_SPEAKERS,
                       seed: int = 0,
                       duration_s: float = 0.7) -> list[CandidateUnit]:
    """One keyword unit per (speaker, SNR): five conditions plus truth."""
    units = []
    for sp in range(n_speakers):
        for j, snr in enumerate(INTELLIGIBILITY_SNRS_DB):
            utterance = f"k{sp}_u{j}"
            clean = synth_speechlike(seed=seed * 10000 + 61 + 10 * sp + j,
                                     duration_s=duration_s,
                                     f0_hz=110.0 + 20.0 * sp,
                                     style="non_lombard")
            conditions = {
                condition: mix_at_snr(
                    clean, noise, snr,
                    seed=seed * 10000 + 7300 + 100 * sp + 10 * j + k)
                for k, condition in enumerate(INTELLIGIBILITY_CONDITIONS)}
            truth = keywords(random_transcript(rng_for(seed, 17, sp, j)))
            units.append(CandidateUnit(
                utterance_id=utterance, speaker_id=f"k{sp}", snr_db=snr,
                clean=clean, conditions=conditions,
                frames=_video((seed, 6, sp, j)), truth=truth))
    return units


def build_demo_store(root: str | Path, kind: str,
                     seed: int = 0) -> StimulusStore:
    """Fabricate a complete stimulus store for one protocol.

    kind "quality" makes rating material (reference + systems + anchor);
    kind "keyword" makes the play-once test material with truth labels.
    """
    noise = demo_noise(seed)
    if kind == "quality":
        units = demo_quality_units(noise, seed=seed)
        return prepare_stimuli(units, root, noise=noise, kind="mushra")
    if kind == "keyword":
        units = demo_keyword_units(noise, seed=seed)
        return prepare_stimuli(units, root, kind="intelligibility")
    raise ValueError(f"unknown demo store kind {kind!r}; "
                     f"expected 'quality' or 'keyword'")
