"""Fabricated desk-scale corpus: speech-like audio, mouth video, landmarks.

Each speaker gets a base F0 (alternating female/male registers), each
utterance a deterministic speech-like waveform, a random six-word transcript,
a procedurally rendered 25 fps mouth video whose opening tracks the audio
envelope, and mouth landmarks at the aligned-face resolution. Lombard
utterances get the synthesizer's raised F0/flattened tilt plus exaggerated
mouth aperture and spreading, so feature deltas have the expected sign.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..dsp import Waveform
from ..features import FACE_SIZE, LandmarkFrame, write_landmarks
from ..noise import SPEAKING_STYLES, synth_speechlike
from ..seeding import rng_for
from ..wavio import write_wav
from .grid import random_transcript
from .manifest import UtteranceRecord, save_manifest

VIDEO_FPS = 25
DEFAULT_VIDEO_SIZE = 32

# mouth geometry at the 256x256 face scale, modulated by the audio envelope
_MOUTH_CENTER_XY = (128.0, 192.0)
_APERTURE_BASE_PX = 6.0
_APERTURE_SWING_PX = 26.0
_SPREAD_BASE_PX = 44.0
_SPREAD_SWING_PX = 14.0
_LOMBARD_APERTURE_GAIN = 1.35
_LOMBARD_SPREAD_GAIN = 1.12

_FEMALE_BASE_F0 = 205.0
_MALE_BASE_F0 = 120.0


def speaker_profiles(n_speakers: int) -> list[dict]:
    """Alternating female/male speakers with distinct base F0s."""
    if n_speakers < 1:
        raise ValueError("need at least one speaker")
    profiles = []
    for i in range(n_speakers):
        gender = "f" if i % 2 == 0 else "m"
        base = _FEMALE_BASE_F0 if gender == "f" else _MALE_BASE_F0
        f0 = min(base + 8.0 * (i // 2), 450.0)
        profiles.append({"speaker_id": f"s{i + 1:02d}", "gender": gender,
                         "f0_hz": f0})
    return profiles


def frame_envelope(audio: Waveform, n_frames: int,
                   fps: int = VIDEO_FPS) -> np.ndarray:
    """Per-video-frame RMS energy, normalized to [0, 1]."""
    window = max(1, int(round(audio.sample_rate / fps)))
    env = np.zeros(n_frames)
    for i in range(n_frames):
        chunk = audio.samples[i * window:(i + 1) * window]
        if chunk.size:
            env[i] = np.sqrt(np.mean(chunk ** 2))
    peak = env.max()
    return env / peak if peak > 0 else env


def mouth_geometry(envelope: np.ndarray, style: str
                   ) -> tuple[np.ndarray, np.ndarray]:
    """(aperture, spread) pixel tracks at face scale for an envelope track."""
    if style not in SPEAKING_STYLES:
        raise ValueError(f"unknown speaking style {style!r}")
    aperture = _APERTURE_BASE_PX + _APERTURE_SWING_PX * envelope
    spread = _SPREAD_BASE_PX + _SPREAD_SWING_PX * envelope
    if style == "lombard":
        aperture = aperture * _LOMBARD_APERTURE_GAIN
        spread = spread * _LOMBARD_SPREAD_GAIN
    return aperture, spread


def landmarks_from_geometry(aperture: np.ndarray, spread: np.ndarray
                            ) -> list[LandmarkFrame]:
    cx, cy = _MOUTH_CENTER_XY
    frames = []
    for i, (ap, sp) in enumerate(zip(aperture, spread)):
        points = {
            "mouth_top": (cx, cy - ap / 2.0),
            "mouth_bottom": (cx, cy + ap / 2.0),
            "mouth_left": (cx - sp / 2.0, cy),
            "mouth_right": (cx + sp / 2.0, cy),
        }
        frames.append(LandmarkFrame(frame_index=i, points=points,
                                    resolution=(FACE_SIZE, FACE_SIZE)))
    return frames


def render_mouth_video(audio: Waveform, style: str,
                       size: int = DEFAULT_VIDEO_SIZE, fps: int = VIDEO_FPS
                       ) -> tuple[np.ndarray, list[LandmarkFrame]]:
    """Draw a (frames, size, size) uint8 mouth-region clip plus landmarks.

    The clip covers the lower-face crop (a 128x128 region of the aligned
    face) downsampled to `size`; the dark mouth ellipse opens and widens with
    the audio envelope.
    """
    n_frames = max(1, int(round(audio.duration * fps)))
    envelope = frame_envelope(audio, n_frames, fps)
    aperture, spread = mouth_geometry(envelope, style)
    landmarks = landmarks_from_geometry(aperture, spread)

    crop_px = 128  # lower-face crop side length at face scale
    if crop_px % size != 0:
        raise ValueError(f"video size {size} must divide {crop_px}")
    block = crop_px // size
    rows = np.arange(crop_px, dtype=np.float64)[:, None]
    cols = np.arange(crop_px, dtype=np.float64)[None, :]
    # face-crop coordinates of the mouth center: crop starts at row 128/col 64
    center_row = _MOUTH_CENTER_XY[1] - 128.0
    center_col = _MOUTH_CENTER_XY[0] - 64.0

    clip = np.empty((n_frames, size, size), dtype=np.uint8)
    for i in range(n_frames):
        half_ap = max(aperture[i] / 2.0, 1.0)
        half_sp = max(spread[i] / 2.0, 1.0)
        dist2 = (((rows - center_row) / half_ap) ** 2
                 + ((cols - center_col) / half_sp) ** 2)
        face = np.full((crop_px, crop_px), 0.55)
        face[dist2 <= 1.6] = 0.75   # lip ring
        face[dist2 <= 1.0] = 0.08   # mouth opening
        small = face.reshape(size, block, size, block).mean(axis=(1, 3))
        clip[i] = np.clip(np.round(small * 255.0), 0, 255).astype(np.uint8)
    return clip, landmarks


def save_video(path: str | Path, frames: np.ndarray,
               fps: int = VIDEO_FPS) -> None:
    frames = np.asarray(frames)
    if frames.ndim != 3 or frames.dtype != np.uint8:
        raise ValueError("video frames must be a uint8 (frames, H, W) array")
    np.savez_compressed(Path(path), frames=frames, fps=np.array(fps))


def load_video(path: str | Path) -> tuple[np.ndarray, int]:
    with np.load(Path(path), allow_pickle=False) as archive:
        return archive["frames"], int(archive["fps"])


def make_corpus(root: str | Path, n_speakers: int = 4,
                utterances_per_style: int = 6, duration_s: float = 1.0,
                seed: int = 0, video_size: int = DEFAULT_VIDEO_SIZE) -> Path:
    """Generate a complete on-disk corpus; returns the manifest path.

    Layout under `root`: audio/<utt>.wav, video/<utt>.npz,
    landmarks/<utt>.jsonl, manifest.jsonl. Fully deterministic in `seed`.
    """
    root = Path(root)
    for sub in ("audio", "video", "landmarks"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    records = []
    for sp_index, profile in enumerate(speaker_profiles(n_speakers)):
        for style_index, style in enumerate(SPEAKING_STYLES):
            for j in range(utterances_per_style):
                tag = "l" if style == "lombard" else "n"
                utt_id = f"{profile['speaker_id']}_{tag}{j + 1:02d}"
                synth_seed = int(rng_for(seed, 7, sp_index, style_index,
                                         j).integers(2 ** 31))
                audio = synth_speechlike(synth_seed, duration_s,
                                         f0_hz=profile["f0_hz"], style=style)
                clip, landmarks = render_mouth_video(audio, style,
                                                     size=video_size)
                transcript = random_transcript(
                    rng_for(seed, 11, sp_index, style_index, j))

                audio_rel = f"audio/{utt_id}.wav"
                video_rel = f"video/{utt_id}.npz"
                marks_rel = f"landmarks/{utt_id}.jsonl"
                write_wav(root / audio_rel, audio)
                save_video(root / video_rel, clip)
                write_landmarks(root / marks_rel, landmarks)
                records.append(UtteranceRecord(
                    utterance_id=utt_id,
                    speaker_id=profile["speaker_id"],
                    gender=profile["gender"],
                    style=style,
                    audio_path=audio_rel,
                    frames_path=video_rel,
                    landmarks_path=marks_rel,
                    transcript=transcript,
                ))

    manifest_path = root / "manifest.jsonl"
    save_manifest(manifest_path, records)
    return manifest_path
