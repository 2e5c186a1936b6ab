"""Amplitude masks: ideal-mask targets, the training loss, mask application,
and segment-wise utterance enhancement.

Estimation operates on non-overlapping segments of 20 audio frames paired
with 5 video frames (100 Hz frame rate against 25 fps video); an utterance's
segment masks are concatenated, applied to the noisy spectrogram, and
inverted back to a waveform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from .dsp import ComplexSpectrogram, StftConfig, Waveform, istft, stft

MASK_CEILING = 10.0
SEGMENT_AUDIO_FRAMES = 20
SEGMENT_VIDEO_FRAMES = 5

MODALITIES = ("ao", "vo", "av")


@dataclass(frozen=True)
class AmplitudeMask:
    """F x T nonnegative gain field.

    Targets are clipped into [0, ceiling]; raw estimator outputs may exceed
    the ceiling (construct with clip=False) and can be bounded later.
    """

    values: np.ndarray
    ceiling: float = MASK_CEILING

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 2:
            raise ValueError(f"mask must be 2-D (F x T), got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("mask contains non-finite values")
        if np.any(v < 0.0):
            raise ValueError("mask values must be nonnegative")
        if self.ceiling <= 0:
            raise ValueError("ceiling must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    def clipped(self) -> "AmplitudeMask":
        return AmplitudeMask(np.minimum(self.values, self.ceiling), self.ceiling)

    def is_bounded(self) -> bool:
        return bool(np.all(self.values <= self.ceiling))


def ideal_amplitude_mask(clean: ComplexSpectrogram, noisy: ComplexSpectrogram,
                         ceiling: float = MASK_CEILING) -> AmplitudeMask:
    """Target mask |X|/|Y|, clipped to [0, ceiling]; |Y|=0 cells map to ceiling."""
    if clean.bins.shape != noisy.bins.shape:
        raise ValueError(f"shape mismatch: {clean.bins.shape} vs {noisy.bins.shape}")
    return AmplitudeMask(iam_from_magnitudes(clean.magnitude(), noisy.magnitude(),
                                             ceiling), ceiling)


def iam_from_magnitudes(clean_mag: np.ndarray, noisy_mag: np.ndarray,
                        ceiling: float = MASK_CEILING) -> np.ndarray:
    if clean_mag.shape != noisy_mag.shape:
        raise ValueError(f"shape mismatch: {clean_mag.shape} vs {noisy_mag.shape}")
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.where(noisy_mag > 0.0, clean_mag / np.maximum(noisy_mag, 1e-300),
                       np.inf)
    return np.minimum(raw, ceiling)


def mask_loss(target: AmplitudeMask | np.ndarray,
              estimate: AmplitudeMask | np.ndarray) -> float:
    """Mean squared error over all time-frequency cells."""
    m = target.values if isinstance(target, AmplitudeMask) else np.asarray(target)
    m_hat = estimate.values if isinstance(estimate, AmplitudeMask) else np.asarray(estimate)
    if m.shape != m_hat.shape:
        raise ValueError(f"shape mismatch: {m.shape} vs {m_hat.shape}")
    return float(np.mean((m - m_hat) ** 2))


def apply_mask(mask: AmplitudeMask, noisy: ComplexSpectrogram) -> ComplexSpectrogram:
    """Point-wise multiply; the noisy phase is carried through untouched."""
    if mask.values.shape != noisy.bins.shape:
        raise ValueError(f"shape mismatch: mask {mask.values.shape} vs "
                         f"spectrogram {noisy.bins.shape}")
    return ComplexSpectrogram(mask.values * noisy.bins, noisy.config)


def segment_count(n_frames: int, segment_frames: int = SEGMENT_AUDIO_FRAMES) -> int:
    if n_frames < 1:
        raise ValueError("need at least one frame")
    return -(-n_frames // segment_frames)


def segment_spectrogram_frames(values: np.ndarray,
                               segment_frames: int = SEGMENT_AUDIO_FRAMES) -> np.ndarray:
    """(F, T) -> (n_seg, F, segment_frames), zero-padding the tail segment."""
    n_bins, n_frames = values.shape
    n_seg = segment_count(n_frames, segment_frames)
    padded = np.zeros((n_bins, n_seg * segment_frames), dtype=values.dtype)
    padded[:, :n_frames] = values
    return padded.reshape(n_bins, n_seg, segment_frames).transpose(1, 0, 2)


def segment_video_frames(frames: np.ndarray, n_segments: int,
                         segment_frames: int = SEGMENT_VIDEO_FRAMES) -> np.ndarray:
    """(N, H, W) -> (n_seg, segment_frames, H, W); tail repeats the last frame."""
    if frames.ndim != 3 or frames.shape[0] < 1:
        raise ValueError("video must be a non-empty (frames, H, W) array")
    needed = n_segments * segment_frames
    if frames.shape[0] < needed:
        pad = np.repeat(frames[-1:], needed - frames.shape[0], axis=0)
        frames = np.concatenate([frames, pad], axis=0)
    return frames[:needed].reshape(n_segments, segment_frames, *frames.shape[1:])


@runtime_checkable
class MaskEstimator(Protocol):
    """Batch segment-mask estimator.

    modality: "ao" (audio only), "vo" (video only), or "av" (both).
    estimate() maps (n_seg, F, 20) noisy magnitudes — plus (n_seg, 5, H, W)
    video when the modality consumes it — to (n_seg, F, 20) masks.
    """

    modality: str

    def estimate(self, noisy_segments: np.ndarray,
                 video_segments: np.ndarray | None = None) -> np.ndarray: ...


@dataclass
class UnitMaskEstimator:
    """Pass-through estimator; enhancement returns the input (identity check)."""

    modality: str = "ao"

    def estimate(self, noisy_segments: np.ndarray,
                 video_segments: np.ndarray | None = None) -> np.ndarray:
        return np.ones_like(noisy_segments)


@dataclass
class OracleIamEstimator:
    """Upper-bound estimator that looks at the clean reference.

    Recomputes the clean magnitude with the same analysis settings and emits
    the clipped ideal mask for each segment.
    """

    clean: Waveform
    config: StftConfig = field(default_factory=StftConfig)
    ceiling: float = MASK_CEILING
    modality: str = "ao"

    def estimate(self, noisy_segments: np.ndarray,
                 video_segments: np.ndarray | None = None) -> np.ndarray:
        clean_mag = stft(self.clean, self.config).magnitude()
        clean_segments = segment_spectrogram_frames(clean_mag)
        if clean_segments.shape != noisy_segments.shape:
            raise ValueError("clean reference does not segment like the noisy input")
        return iam_from_magnitudes(clean_segments, noisy_segments, self.ceiling)


def enhance_utterance(estimator: MaskEstimator, noisy: Waveform,
                      video: np.ndarray | None = None,
                      config: StftConfig | None = None,
                      clip_mask: bool = False) -> Waveform:
    """Segment-wise mask estimation, concatenation, application, inversion.

    clip_mask bounds the estimated mask at the target ceiling before
    application; off by default since estimator outputs are legitimate gains.
    """
    cfg = config or StftConfig()
    if estimator.modality not in MODALITIES:
        raise ValueError(f"unknown estimator modality {estimator.modality!r}")
    needs_video = estimator.modality in ("av", "vo")
    if needs_video and video is None:
        raise ValueError(f"{estimator.modality} estimator requires video frames")

    noisy_spec = stft(noisy, cfg)
    n_frames = noisy_spec.n_frames
    noisy_segments = segment_spectrogram_frames(noisy_spec.magnitude())
    n_seg = noisy_segments.shape[0]
    video_segments = (segment_video_frames(np.asarray(video), n_seg)
                      if needs_video else None)

    masks = np.asarray(estimator.estimate(noisy_segments, video_segments))
    if masks.shape != noisy_segments.shape:
        raise ValueError(f"estimator returned {masks.shape}, "
                         f"expected {noisy_segments.shape}")
    # undo segmentation, drop the zero-padded tail frames
    full = masks.transpose(1, 0, 2).reshape(noisy_spec.n_bins, -1)[:, :n_frames]
    mask = AmplitudeMask(full)
    if clip_mask:
        mask = mask.clipped()
    enhanced = apply_mask(mask, noisy_spec)
    return istft(enhanced, length=len(noisy), sample_rate=noisy.sample_rate)
