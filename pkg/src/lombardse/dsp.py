"""Core signal primitives: waveforms, peak normalization, STFT analysis/synthesis.

All processing is mono, double precision, 16 kHz canonical. The STFT uses a
640-sample periodic Hamming window with a 160-sample hop and keeps the 321
non-negative-frequency bins; synthesis is weighted overlap-add with
sum-of-squared-window compensation, which reconstructs the interior of the
signal exactly (edges are attenuated because no padding is applied at
analysis time).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateSignalError(ValueError):
    """Raised when an operation receives a signal it cannot meaningfully process."""


@dataclass(frozen=True)
class Waveform:
    """Mono audio: float64 samples with a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.samples.size else 0.0

    def power(self) -> float:
        """Mean-square power over the full signal."""
        if self.samples.size == 0:
            return 0.0
        return float(np.mean(self.samples ** 2))


def _periodic_hamming(length: int) -> np.ndarray:
    n = np.arange(length, dtype=np.float64)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / length)


@dataclass(frozen=True)
class StftConfig:
    """Framing plan for analysis and synthesis.

    Defaults give the 640/640/160 Hamming plan with 321 retained bins. The
    frame count for a signal of N samples is floor((N - window) / hop) + 1:
    frames never extend past the signal, so no padding is ever applied.
    """

    fft_size: int = 640
    window_length: int = 640
    hop: int = 160
    window: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not (0 < self.hop <= self.window_length <= self.fft_size):
            raise ValueError(
                f"need 0 < hop <= window_length <= fft_size, got "
                f"hop={self.hop} window={self.window_length} fft={self.fft_size}"
            )
        window = self.window
        if window is None:
            window = _periodic_hamming(self.window_length)
        window = np.asarray(window, dtype=np.float64)
        if window.shape != (self.window_length,):
            raise ValueError("window length does not match window_length")
        object.__setattr__(self, "window", window)

    @property
    def retained_bins(self) -> int:
        return self.fft_size // 2 + 1

    def frame_count(self, n_samples: int) -> int:
        if n_samples < self.window_length:
            return 0
        return (n_samples - self.window_length) // self.hop + 1


@dataclass(frozen=True)
class ComplexSpectrogram:
    """Complex STFT coefficients on an F x T grid (F = retained bins)."""

    bins: np.ndarray
    config: StftConfig

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.ndim != 2:
            raise ValueError(f"expected 2-D bin array, got shape {bins.shape}")
        if bins.shape[0] != self.config.retained_bins:
            raise ValueError(
                f"expected {self.config.retained_bins} frequency rows, got {bins.shape[0]}"
            )
        if bins.size and not np.all(np.isfinite(bins)):
            raise ValueError("spectrogram contains non-finite values")
        object.__setattr__(self, "bins", bins)

    @property
    def n_frames(self) -> int:
        return self.bins.shape[1]

    @property
    def n_bins(self) -> int:
        return self.bins.shape[0]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)


def peak_normalize(w: Waveform) -> Waveform:
    """Scale linearly so the largest absolute sample equals 1."""
    peak = w.peak()
    if peak == 0.0:
        raise DegenerateSignalError("cannot peak-normalize an all-zero signal")
    return Waveform(w.samples / peak, w.sample_rate)


def stft(w: Waveform, cfg: StftConfig | None = None) -> ComplexSpectrogram:
    """Analyze a waveform into windowed DFT frames.

    Frame l covers samples [l*hop, l*hop + window_length); trailing samples
    that do not fill a whole window are dropped.
    """
    cfg = cfg or StftConfig()
    x = w.samples
    n_frames = cfg.frame_count(x.size)
    if n_frames == 0:
        raise DegenerateSignalError(
            f"signal of {x.size} samples is shorter than one window ({cfg.window_length})"
        )
    idx = np.arange(cfg.window_length)[None, :] + cfg.hop * np.arange(n_frames)[:, None]
    frames = x[idx] * cfg.window[None, :]
    spectrum = np.fft.rfft(frames, n=cfg.fft_size, axis=1)
    return ComplexSpectrogram(spectrum.T, cfg)


def istft(s: ComplexSpectrogram, length: int | None = None,
          sample_rate: int = 16000) -> Waveform:
    """Weighted overlap-add synthesis.

    Each frame is inverse-transformed, multiplied by the analysis window, and
    accumulated; the result is divided by the summed squared window. On the
    fully overlapped interior this inverts ``stft`` exactly.
    """
    cfg = s.config
    if s.n_frames == 0:
        raise DegenerateSignalError("cannot synthesize from an empty spectrogram")
    frames = np.fft.irfft(s.bins.T, n=cfg.fft_size, axis=1)[:, : cfg.window_length]
    frames *= cfg.window[None, :]

    total = cfg.window_length + cfg.hop * (s.n_frames - 1)
    out = np.zeros(total)
    norm = np.zeros(total)
    wsq = cfg.window ** 2
    for l in range(s.n_frames):
        start = l * cfg.hop
        out[start : start + cfg.window_length] += frames[l]
        norm[start : start + cfg.window_length] += wsq
    # Edge samples covered by few windows keep a tiny norm; clamp to avoid blowup.
    floor = norm.max() * 1e-10
    out /= np.maximum(norm, floor)

    if length is not None:
        if length <= total:
            out = out[:length]
        else:
            out = np.concatenate([out, np.zeros(length - total)])
    return Waveform(out, sample_rate=sample_rate)


def interior_reconstruction_snr(original: Waveform, reconstructed: Waveform,
                                cfg: StftConfig | None = None) -> float:
    """SNR in dB between a signal and its round-trip, skipping one window at each edge."""
    cfg = cfg or StftConfig()
    n = min(len(original), len(reconstructed))
    lo, hi = cfg.window_length, n - cfg.window_length
    if hi <= lo:
        raise DegenerateSignalError("signal too short to have an interior")
    ref = original.samples[lo:hi]
    err = ref - reconstructed.samples[lo:hi]
    err_power = np.sum(err ** 2)
    if err_power == 0.0:
        return np.inf
    return float(10.0 * np.log10(np.sum(ref ** 2) / err_power))
