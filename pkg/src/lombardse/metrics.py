"""Objective intelligibility scoring and score aggregation.

The intelligibility metric follows the extended short-time objective
intelligibility algorithm: both signals are resampled to 10 kHz, frames in
which the clean signal is more than 40 dB below its loudest frame are removed,
one-third-octave band envelopes are computed from 256-sample Hann frames, and
the score is the average spectral correlation of row/column mean-variance
normalized 384 ms segments. Quality metrics without an internal implementation
(e.g. wideband PESQ) are reached through a subprocess adapter that parses a
scalar from the tool's output and never substitutes a fabricated score.
"""

import re
import shlex
import subprocess
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .dsp import Waveform

ESTOI_RATE = 10_000
ESTOI_FRAME = 256
ESTOI_HOP = 128
ESTOI_NFFT = 512
ESTOI_BANDS = 15
ESTOI_MIN_FREQ_HZ = 150.0
ESTOI_SEGMENT_FRAMES = 30   # 30 frames x 12.8 ms hop = 384 ms
ESTOI_DYN_RANGE_DB = 40.0

METRIC_NAMES = ("estoi", "external")


@dataclass(frozen=True)
class MetricScore:
    name: str
    value: float
    pair_id: str = ""
    provenance: str | None = None

    def __post_init__(self):
        if self.name not in METRIC_NAMES:
            raise ValueError(f"metric name must be one of {METRIC_NAMES}")


@dataclass(frozen=True)
class ConditionAggregate:
    mean: float
    ci95_halfwidth: float
    n: int
    degenerate: bool = False  # True when n == 1 (halfwidth 0 by convention)


class ExternalMetricError(RuntimeError):
    """The external tool was missing, failed, or produced no parseable score."""


def _hann(length: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)


def _resample_to_metric_rate(samples: np.ndarray, rate: int) -> np.ndarray:
    if rate == ESTOI_RATE:
        return np.asarray(samples, dtype=np.float64)
    g = np.gcd(int(rate), ESTOI_RATE)
    return signal.resample_poly(samples, ESTOI_RATE // g, rate // g)


def _frames(x: np.ndarray) -> np.ndarray:
    if x.size < ESTOI_FRAME:
        return np.empty((0, ESTOI_FRAME))
    view = np.lib.stride_tricks.sliding_window_view(x, ESTOI_FRAME)
    return view[::ESTOI_HOP].copy()


def _remove_silent_frames(clean: np.ndarray, processed: np.ndarray
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Drop frames where the clean signal is >40 dB below its loudest frame.

    Kept Hann-windowed frames are overlap-added back into time signals; with
    50% overlap the window pairs sum to one, so contiguous kept regions are
    reconstructed intact.
    """
    win = _hann(ESTOI_FRAME)
    cf = _frames(clean) * win
    pf = _frames(processed) * win
    if cf.shape[0] == 0:
        return np.empty(0), np.empty(0)
    energies_db = 20.0 * np.log10(np.linalg.norm(cf, axis=1) + 1e-20)
    keep = energies_db > energies_db.max() - ESTOI_DYN_RANGE_DB
    cf, pf = cf[keep], pf[keep]
    n_out = (cf.shape[0] - 1) * ESTOI_HOP + ESTOI_FRAME if cf.shape[0] else 0
    out_c = np.zeros(n_out)
    out_p = np.zeros(n_out)
    for i in range(cf.shape[0]):
        sl = slice(i * ESTOI_HOP, i * ESTOI_HOP + ESTOI_FRAME)
        out_c[sl] += cf[i]
        out_p[sl] += pf[i]
    return out_c, out_p


def third_octave_band_matrix() -> np.ndarray:
    """(15, 257) 0/1 matrix pooling DFT bins into one-third-octave bands."""
    freqs = np.linspace(0.0, ESTOI_RATE / 2.0, ESTOI_NFFT // 2 + 1)
    centers = ESTOI_MIN_FREQ_HZ * 2.0 ** (np.arange(ESTOI_BANDS) / 3.0)
    obm = np.zeros((ESTOI_BANDS, freqs.size))
    for i, cf in enumerate(centers):
        lo = int(np.argmin(np.abs(freqs - cf * 2.0 ** (-1.0 / 6.0))))
        hi = int(np.argmin(np.abs(freqs - cf * 2.0 ** (1.0 / 6.0))))
        obm[i, lo:hi] = 1.0
    return obm


def _band_envelopes(x: np.ndarray, obm: np.ndarray) -> np.ndarray:
    frames = _frames(x) * _hann(ESTOI_FRAME)
    spec = np.fft.rfft(frames, n=ESTOI_NFFT, axis=1)
    return np.sqrt(obm @ (np.abs(spec.T) ** 2))  # (bands, n_frames)


def _row_col_normalize(seg: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-norm each band row, then each frame column."""
    s = seg - seg.mean(axis=2, keepdims=True)
    s = s / np.maximum(np.linalg.norm(s, axis=2, keepdims=True), 1e-20)
    s = s - s.mean(axis=1, keepdims=True)
    s = s / np.maximum(np.linalg.norm(s, axis=1, keepdims=True), 1e-20)
    return s


def estoi(clean: Waveform, processed: Waveform, pair_id: str = "") -> MetricScore:
    """Average normalized spectral correlation over 384 ms segments."""
    if clean.sample_rate != processed.sample_rate:
        raise ValueError("clean and processed sample rates must match")
    n = min(clean.samples.size, processed.samples.size)
    if n == 0:
        raise ValueError("empty signal")
    x = _resample_to_metric_rate(clean.samples[:n], clean.sample_rate)
    y = _resample_to_metric_rate(processed.samples[:n], processed.sample_rate)
    x, y = _remove_silent_frames(x, y)

    obm = third_octave_band_matrix()
    xb = _band_envelopes(x, obm)
    yb = _band_envelopes(y, obm)
    if xb.shape[1] < ESTOI_SEGMENT_FRAMES:
        raise ValueError(
            f"signal too short after silence removal: {xb.shape[1]} frames "
            f"retained, {ESTOI_SEGMENT_FRAMES} (384 ms) needed")

    # all length-30 segments, sliding by one frame: (n_seg, bands, 30)
    xs = np.lib.stride_tricks.sliding_window_view(
        xb, ESTOI_SEGMENT_FRAMES, axis=1).transpose(1, 0, 2)
    ys = np.lib.stride_tricks.sliding_window_view(
        yb, ESTOI_SEGMENT_FRAMES, axis=1).transpose(1, 0, 2)
    xn = _row_col_normalize(xs)
    yn = _row_col_normalize(ys)
    corr = np.sum(xn * yn, axis=(1, 2)) / ESTOI_SEGMENT_FRAMES
    return MetricScore("estoi", float(corr.mean()), pair_id)


DEFAULT_SCORE_PATTERN = r"[-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?"


def external_metric(command_template: str, clean_path, processed_path, *,
                    pattern: str = DEFAULT_SCORE_PATTERN,
                    pair_id: str = "", timeout_s: float = 300.0) -> MetricScore:
    """Run an external scoring tool and parse one scalar from its stdout.

    ``command_template`` uses ``{clean}`` and ``{processed}`` placeholders.
    Any failure raises ExternalMetricError; a score is never fabricated.
    """
    cmd = command_template.format(clean=str(clean_path),
                                  processed=str(processed_path))
    argv = shlex.split(cmd)
    if not argv:
        raise ExternalMetricError("empty external metric command")
    try:
        proc = subprocess.run(argv, capture_output=True, text=True,
                              timeout=timeout_s)
    except FileNotFoundError as exc:
        raise ExternalMetricError(
            f"external metric tool not found: {argv[0]!r}") from exc
    except subprocess.TimeoutExpired as exc:
        raise ExternalMetricError(
            f"external metric tool timed out after {timeout_s} s") from exc
    if proc.returncode != 0:
        raise ExternalMetricError(
            f"external metric tool exited with {proc.returncode}: "
            f"{proc.stderr.strip()[:200]}")
    match = re.search(pattern, proc.stdout)
    if match is None:
        raise ExternalMetricError(
            f"tool output contains nothing matching pattern {pattern!r}: "
            f"{proc.stdout.strip()[:200]!r}")
    return MetricScore("external", float(match.group(0)), pair_id,
                       provenance=argv[0])


def aggregate(scores: list) -> ConditionAggregate:
    """Mean and normal-approximation 95% CI halfwidth (1.96 * s / sqrt(n))."""
    values = np.array([s.value if isinstance(s, MetricScore) else float(s)
                       for s in scores], dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot aggregate an empty score list")
    if values.size == 1:
        return ConditionAggregate(float(values[0]), 0.0, 1, degenerate=True)
    half = 1.96 * float(values.std(ddof=1)) / np.sqrt(values.size)
    return ConditionAggregate(float(values.mean()), half, int(values.size))
