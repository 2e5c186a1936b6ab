"""WAV file I/O: mono 16-bit PCM or 32-bit float, 16 kHz canonical."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .dsp import Waveform

CANONICAL_RATE = 16000


class WavFormatError(ValueError):
    pass


def read_wav(path: str | Path, allow_any_rate: bool = False) -> Waveform:
    """Read a mono WAV file into a float64 waveform in [-1, 1].

    Rejects sample rates other than 16 kHz unless ``allow_any_rate`` is set
    (resampling is out of scope for this toolkit).
    """
    rate, data = wavfile.read(str(path))
    if data.ndim != 1:
        raise WavFormatError(f"{path}: expected mono audio, got shape {data.shape}")
    if rate != CANONICAL_RATE and not allow_any_rate:
        raise WavFormatError(
            f"{path}: sample rate {rate} Hz is not the canonical {CANONICAL_RATE} Hz; "
            "pass allow_any_rate=True to read it unresampled"
        )
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        samples = data.astype(np.float64)
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    else:
        raise WavFormatError(f"{path}: unsupported sample format {data.dtype}")
    return Waveform(samples, rate)


def write_wav(path: str | Path, w: Waveform, fmt: str = "float32") -> None:
    """Write a waveform as ``float32`` (default) or ``pcm16``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "float32":
        wavfile.write(str(path), w.sample_rate, w.samples.astype(np.float32))
    elif fmt == "pcm16":
        clipped = np.clip(w.samples, -1.0, 32767.0 / 32768.0)
        wavfile.write(str(path), w.sample_rate, np.round(clipped * 32768.0).astype(np.int16))
    else:
        raise WavFormatError(f"unknown format {fmt!r}; use 'float32' or 'pcm16'")
