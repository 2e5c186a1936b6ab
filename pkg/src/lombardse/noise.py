"""Speech-shaped noise, SNR-controlled mixing, and synthetic speech-like audio.

The noise model is a low-order all-pole (LPC) fit to reference speech; SSN is
seeded white Gaussian noise through that filter. Mixing scales the noise so
the requested SNR holds exactly on full-signal mean power. A procedural
speech-like generator stands in for recorded corpora in desk-scale runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import signal

from .dsp import DegenerateSignalError, Waveform
from .seeding import rng_for

NARROW_SNRS_DB: tuple[int, ...] = (-20, -15, -10, -5, 0, 5)
WIDE_SNRS_DB: tuple[int, ...] = NARROW_SNRS_DB + (10, 15, 20, 25, 30)

SPEAKING_STYLES = ("lombard", "non_lombard")
LOMBARD_F0_OFFSET_HZ = 40.0
LOMBARD_TILT_BOOST_DB = 6.0
LOMBARD_TILT_CORNER_HZ = 1000.0

DEFAULT_LPC_ORDER = 12  # conventional envelope order at 16 kHz


def snr_grid(kind: str) -> tuple[int, ...]:
    if kind == "narrow":
        return NARROW_SNRS_DB
    if kind == "wide":
        return WIDE_SNRS_DB
    raise ValueError(f"unknown SNR grid {kind!r}; expected 'narrow' or 'wide'")


@dataclass(frozen=True)
class MixSpec:
    """Recipe for one noisy mixture."""

    snr_db: float
    seed: int
    noise_kind: str = "ssn"
    speaking_style: str = "non_lombard"

    def __post_init__(self) -> None:
        if not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.noise_kind != "ssn":
            raise ValueError(f"unsupported noise kind {self.noise_kind!r}")
        if self.speaking_style not in SPEAKING_STYLES:
            raise ValueError(f"unknown speaking style {self.speaking_style!r}")


@dataclass(frozen=True)
class LpcModel:
    """All-pole spectral model: H(z) = gain / (1 - sum_k a_k z^-k).

    ``coefficients`` holds the predictor taps a_1..a_p (no leading 1).
    """

    coefficients: np.ndarray
    gain: float
    sample_rate: int

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=np.float64)
        object.__setattr__(self, "coefficients", coeffs)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise ValueError("coefficients must be a non-empty 1-D vector")
        if not np.all(np.isfinite(coeffs)) or not np.isfinite(self.gain):
            raise ValueError("model parameters must be finite")
        if self.gain <= 0:
            raise ValueError("gain must be positive")

    @property
    def order(self) -> int:
        return int(self.coefficients.size)

    def denominator(self) -> np.ndarray:
        return np.concatenate(([1.0], -self.coefficients))

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(np.roots(self.denominator())) < 1.0))

    def magnitude_response_db(self, freqs_hz: np.ndarray) -> np.ndarray:
        _, h = signal.freqz([self.gain], self.denominator(),
                            worN=np.asarray(freqs_hz, dtype=np.float64),
                            fs=self.sample_rate)
        return 20.0 * np.log10(np.maximum(np.abs(h), 1e-300))


def save_lpc_model(model: LpcModel, path: str | Path) -> None:
    record = {
        "order": model.order,
        "coefficients": model.coefficients.tolist(),
        "gain": model.gain,
        "sample_rate": model.sample_rate,
    }
    Path(path).write_text(json.dumps(record, indent=2) + "\n")


def load_lpc_model(path: str | Path) -> LpcModel:
    record = json.loads(Path(path).read_text())
    model = LpcModel(np.asarray(record["coefficients"], dtype=np.float64),
                     float(record["gain"]), int(record["sample_rate"]))
    if model.order != int(record["order"]):
        raise ValueError(f"{path}: order field disagrees with coefficient count")
    return model


def _levinson_durbin(r: np.ndarray, order: int) -> tuple[np.ndarray, float]:
    """Solve the Yule-Walker normal equations; returns (predictor taps, error power)."""
    a = np.zeros(order)
    err = float(r[0])
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        k = acc / err
        if i:
            a[:i] -= k * a[:i][::-1].copy()
        a[i] = k
        err *= 1.0 - k * k
        if err <= 0.0:
            raise DegenerateSignalError(
                "prediction error collapsed; input is too close to deterministic"
            )
    return a, err


def fit_lpc(reference: Sequence[Waveform] | Waveform,
            order: int = DEFAULT_LPC_ORDER,
            frame_length: int = 640, hop: int = 320) -> LpcModel:
    """Fit an all-pole model to pooled, Hamming-windowed reference frames.

    Requires at least 1 s of total reference audio; all waveforms must share
    one sample rate.
    """
    if isinstance(reference, Waveform):
        reference = [reference]
    if order < 1:
        raise ValueError("order must be >= 1")
    if not reference:
        raise ValueError("reference set is empty")
    rates = {w.sample_rate for w in reference}
    if len(rates) != 1:
        raise ValueError(f"reference waveforms mix sample rates: {sorted(rates)}")
    sample_rate = rates.pop()
    if sum(len(w) for w in reference) < sample_rate:
        raise ValueError("need at least 1 s of reference audio in total")

    window = np.hamming(frame_length)
    nfft = int(2 ** np.ceil(np.log2(2 * frame_length)))  # linear, not circular, lags
    pooled = np.zeros(nfft // 2 + 1)
    n_frames = 0
    for w in reference:
        count = (len(w) - frame_length) // hop + 1
        if count < 1:
            continue
        idx = np.arange(frame_length)[None, :] + hop * np.arange(count)[:, None]
        spectra = np.fft.rfft(w.samples[idx] * window, n=nfft, axis=1)
        pooled += np.sum(np.abs(spectra) ** 2, axis=0)
        n_frames += count
    if n_frames == 0:
        raise ValueError("reference utterances are all shorter than one frame")

    r = np.fft.irfft(pooled)[: order + 1] / (n_frames * frame_length)
    if r[0] <= 0.0:
        raise DegenerateSignalError("all-zero reference; autocorrelation is degenerate")
    coeffs, err = _levinson_durbin(r, order)
    model = LpcModel(coeffs, float(np.sqrt(err)), sample_rate)
    if not model.is_stable():
        raise ValueError("fitted model is unstable (poles on or outside the unit circle)")
    return model


def generate_ssn(model: LpcModel, duration_s: float, seed: int) -> Waveform:
    """Speech-shaped noise: seeded unit-variance white noise through the model."""
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    if not model.is_stable():
        raise ValueError("refusing to excite an unstable model")
    n = int(round(duration_s * model.sample_rate))
    burn_in = 50 * model.order  # let the filter transient die out
    white = rng_for(seed).standard_normal(n + burn_in)
    shaped = signal.lfilter([model.gain], model.denominator(), white)[burn_in:]
    return Waveform(shaped, model.sample_rate)


def noise_excerpt(noise: Waveform, n_samples: int, seed: int) -> Waveform:
    """Seeded random aligned excerpt; noise must be at least n_samples long."""
    if len(noise) < n_samples:
        raise ValueError(f"noise is {len(noise)} samples; need >= {n_samples}")
    offset = int(rng_for(seed).integers(0, len(noise) - n_samples + 1))
    return Waveform(noise.samples[offset:offset + n_samples], noise.sample_rate)


def snr_scale(clean: Waveform, noise: Waveform, snr_db: float) -> float:
    """Gain for the noise so 10*log10(P_clean/P_noise) = snr_db on mean powers."""
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    p_clean, p_noise = clean.power(), noise.power()
    if p_clean == 0.0 or p_noise == 0.0:
        raise DegenerateSignalError("zero-power signal; SNR is undefined")
    return float(np.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0))))


def mix_at_snr(clean: Waveform, noise: Waveform, snr_db: float, seed: int = 0) -> Waveform:
    """Additive mixture y = x + scale * d at an exact full-power SNR.

    The noise excerpt is a seeded random aligned slice, so repeated mixes of
    one utterance against one long noise realization stay uncorrelated.
    """
    if clean.sample_rate != noise.sample_rate:
        raise ValueError("clean and noise sample rates differ")
    d = noise_excerpt(noise, len(clean), seed)
    scale = snr_scale(clean, d, snr_db)
    return Waveform(clean.samples + scale * d.samples, clean.sample_rate)


def synth_speechlike(seed: int, duration_s: float, f0_hz: float = 180.0,
                     style: str = "non_lombard", sample_rate: int = 16000) -> Waveform:
    """Deterministic speech-like signal: harmonic source, drifting formant
    envelope, syllabic amplitude modulation.

    "lombard" raises F0 by LOMBARD_F0_OFFSET_HZ and boosts harmonics above
    LOMBARD_TILT_CORNER_HZ by LOMBARD_TILT_BOOST_DB (flatter tilt). Purely a
    desk-scale stand-in for recorded speech; no perceptual claims.
    """
    if not 50.0 <= f0_hz <= 500.0:
        raise ValueError(f"f0 {f0_hz} Hz outside supported range [50, 500]")
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    if style not in SPEAKING_STYLES:
        raise ValueError(f"unknown speaking style {style!r}")

    rng = rng_for(seed)
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    f0_eff = f0_hz + (LOMBARD_F0_OFFSET_HZ if style == "lombard" else 0.0)

    # gentle vibrato, zero-mean so the median F0 stays on target
    vib_rate = float(rng.uniform(4.0, 6.0))
    vib_phase = float(rng.uniform(0.0, 2.0 * np.pi))
    f0_track = f0_eff * (1.0 + 0.015 * np.sin(2.0 * np.pi * vib_rate * t + vib_phase))
    phase = 2.0 * np.pi * np.cumsum(f0_track) / sample_rate

    # three formant-like resonance tracks that meander slowly
    centers = np.array([500.0, 1500.0, 2500.0]) * rng.uniform(0.9, 1.1, size=3)
    widths = np.array([150.0, 220.0, 320.0])
    heights = np.array([1.0, 0.5, 0.3])
    drift_rate = rng.uniform(0.3, 1.0, size=3)
    drift_phase = rng.uniform(0.0, 2.0 * np.pi, size=3)
    tracks = centers[:, None] * (
        1.0 + 0.15 * np.sin(2.0 * np.pi * drift_rate[:, None] * t[None, :]
                            + drift_phase[:, None]))

    tilt_boost = 10.0 ** (LOMBARD_TILT_BOOST_DB / 20.0)
    out = np.zeros(n)
    n_harm = max(int(0.45 * sample_rate / f0_eff), 3)
    for k in range(1, n_harm + 1):
        freq_k = k * f0_track
        envelope = np.full(n, 0.12)
        for c, wdt, h in zip(tracks, widths, heights):
            envelope += h * np.exp(-((freq_k - c) ** 2) / (2.0 * wdt ** 2))
        amp = envelope / k
        if style == "lombard" and k * f0_eff > LOMBARD_TILT_CORNER_HZ:
            amp = amp * tilt_boost
        out += amp * np.sin(k * phase + float(rng.uniform(0.0, 2.0 * np.pi)))

    syl_rate = float(rng.uniform(2.5, 4.5))
    syl_phase = float(rng.uniform(0.0, 2.0 * np.pi))
    am = 0.3 + 0.7 * (0.5 + 0.5 * np.sin(2.0 * np.pi * syl_rate * t + syl_phase))
    out *= am
    out += 0.002 * rng.standard_normal(n)  # faint aspiration floor
    out *= 0.5 / np.max(np.abs(out))
    return Waveform(out, sample_rate)
