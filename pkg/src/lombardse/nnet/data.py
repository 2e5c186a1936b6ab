"""Segment pairing and feature standardization for estimator training.

One training row pairs 20 consecutive audio frames (200 ms at the 160-sample
hop) with the 5 video frames covering the same span at 25 fps. Features are
standardized with statistics computed on the training set only: per-frequency
mean/std for audio magnitudes, global mean/std for video pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dsp import ComplexSpectrogram
from ..masking import segment_spectrogram_frames, segment_video_frames
from .network import N_BINS, SEGMENT_FRAMES, VIDEO_FRAMES

AUDIO_FRAMES_PER_VIDEO_FRAME = 4  # 100 Hz frame rate over 25 fps


@dataclass
class SegmentBatch:
    """Rows of paired training/inference features.

    audio: (N, 321, 20) magnitudes; video: (N, 5, H, W) grayscale or None;
    target: (N, 321, 20) mask targets or None for inference rows.
    """

    audio: np.ndarray
    video: np.ndarray | None = None
    target: np.ndarray | None = None

    def __post_init__(self):
        if self.audio.ndim != 3 or self.audio.shape[1:] != (N_BINS, SEGMENT_FRAMES):
            raise ValueError(f"audio must be (N, {N_BINS}, {SEGMENT_FRAMES}), "
                             f"got {self.audio.shape}")
        n = self.audio.shape[0]
        if self.video is not None:
            if self.video.ndim != 4 or self.video.shape[:2] != (n, VIDEO_FRAMES):
                raise ValueError(f"video must be (N, {VIDEO_FRAMES}, H, W) with "
                                 f"N={n}, got {self.video.shape}")
        if self.target is not None and self.target.shape != self.audio.shape:
            raise ValueError("target shape must match audio shape")

    def __len__(self) -> int:
        return self.audio.shape[0]

    def rows(self, idx: np.ndarray) -> "SegmentBatch":
        return SegmentBatch(
            self.audio[idx],
            self.video[idx] if self.video is not None else None,
            self.target[idx] if self.target is not None else None,
        )


def concat_batches(batches: list[SegmentBatch]) -> SegmentBatch:
    if not batches:
        raise ValueError("no batches to concatenate")
    has_video = batches[0].video is not None
    has_target = batches[0].target is not None
    return SegmentBatch(
        np.concatenate([b.audio for b in batches]),
        np.concatenate([b.video for b in batches]) if has_video else None,
        np.concatenate([b.target for b in batches]) if has_target else None,
    )


def pair_segments(spec: ComplexSpectrogram,
                  frames: np.ndarray | None) -> SegmentBatch:
    """Cut a spectrogram (and aligned 25 fps video) into paired segments.

    Segment i holds audio frames [20i, 20i+20) and video frames [5i, 5i+5);
    the tail is zero-padded (audio) / last-frame-repeated (video). Streams
    whose lengths disagree by more than one segment are rejected as
    misaligned rather than silently truncated.
    """
    audio_segments = segment_spectrogram_frames(spec.magnitude())
    n_seg = audio_segments.shape[0]
    if frames is None:
        return SegmentBatch(audio_segments)
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 3 or frames.shape[0] == 0:
        raise ValueError("video must be a non-empty (frames, H, W) array")
    expected_audio = frames.shape[0] * AUDIO_FRAMES_PER_VIDEO_FRAME
    if abs(expected_audio - spec.n_frames) > SEGMENT_FRAMES:
        raise ValueError(
            f"{frames.shape[0]} video frames cover ~{expected_audio} audio "
            f"frames but the spectrogram has {spec.n_frames}; streams are "
            "misaligned by more than one segment")
    return SegmentBatch(audio_segments, segment_video_frames(frames, n_seg))


@dataclass(frozen=True)
class NormalizationStats:
    audio_mean: np.ndarray  # (321,)
    audio_std: np.ndarray   # (321,)
    video_mean: float = 0.0
    video_std: float = 1.0

    def to_dict(self) -> dict:
        return {"audio_mean": self.audio_mean.tolist(),
                "audio_std": self.audio_std.tolist(),
                "video_mean": self.video_mean,
                "video_std": self.video_std}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(np.asarray(d["audio_mean"]), np.asarray(d["audio_std"]),
                   float(d["video_mean"]), float(d["video_std"]))


def compute_norm_stats(train_set: SegmentBatch) -> NormalizationStats:
    """Training-set feature statistics; never feed validation/test rows here."""
    mean = train_set.audio.mean(axis=(0, 2))
    std = train_set.audio.std(axis=(0, 2))
    std = np.maximum(std, 1e-8)
    if train_set.video is not None:
        vmean = float(train_set.video.mean())
        vstd = max(float(train_set.video.std()), 1e-8)
    else:
        vmean, vstd = 0.0, 1.0
    return NormalizationStats(mean, std, vmean, vstd)


def standardize_audio(audio: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    return (audio - stats.audio_mean[None, :, None]) / stats.audio_std[None, :, None]


def standardize_video(video: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    return (video - stats.video_mean) / stats.video_std
