"""Speaking-style features: fundamental frequency and mouth geometry.

F0 comes from frame-wise normalized autocorrelation with parabolic peak
interpolation inside a 75-600 Hz search range; frames whose best normalized
peak stays below the voicing threshold are unvoiced and excluded from the
average. Mouth aperture (MA) and spreading (MS) are Euclidean distances
between ingested landmark points — top/bottom and left/right of the mouth.
Per-speaker deltas contrast the two speaking styles feature-by-feature.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsp import Waveform

log = logging.getLogger(__name__)

MOUTH_POINTS = ("mouth_top", "mouth_bottom", "mouth_left", "mouth_right")
STYLES = ("lombard", "non_lombard")

F0_FLOOR_HZ = 75.0
F0_CEILING_HZ = 600.0
F0_FRAME_S = 0.040
F0_HOP_S = 0.010
VOICING_THRESHOLD = 0.45

FACE_SIZE = 256
MOUTH_ROWS = (128, 256)
MOUTH_COLS = (64, 192)


@dataclass(frozen=True)
class LandmarkFrame:
    """One video frame's ingested mouth landmarks (pixel coordinates)."""

    frame_index: int
    points: dict[str, tuple[float, float]] = field(default_factory=dict)
    resolution: tuple[int, int] = (FACE_SIZE, FACE_SIZE)

    @property
    def complete(self) -> bool:
        return all(
            name in self.points and np.all(np.isfinite(self.points[name]))
            for name in MOUTH_POINTS)


@dataclass(frozen=True)
class SpeakerFeatureDelta:
    """Lombard-minus-non-Lombard means for one speaker."""

    speaker_id: str
    delta_f0: float | None  # None when either style had no voiced speech
    delta_ma: float
    delta_ms: float
    delta_metric: dict[str, float] = field(default_factory=dict)


def estimate_f0(w: Waveform, floor_hz: float = F0_FLOOR_HZ,
                ceiling_hz: float = F0_CEILING_HZ) -> float | None:
    """Mean voiced F0 in Hz, or None when no frame is voiced."""
    if not 0.0 < floor_hz < ceiling_hz:
        raise ValueError("need 0 < floor_hz < ceiling_hz")
    fs = w.sample_rate
    x = np.asarray(w.samples, dtype=np.float64)
    if x.size < round(0.100 * fs):
        raise ValueError("need at least 100 ms of signal for pitch estimation")

    frame_len = int(round(F0_FRAME_S * fs))
    hop = int(round(F0_HOP_S * fs))
    lag_min = max(2, int(math.ceil(fs / ceiling_hz)))
    lag_max = int(fs // floor_hz)
    window = frame_len - lag_max  # correlation support valid for every lag
    if window < 16:
        raise ValueError("frame too short for the requested pitch floor")

    voiced: list[float] = []
    for start in range(0, x.size - frame_len + 1, hop):
        frame = x[start:start + frame_len]
        frame = frame - frame.mean()
        base = frame[:window]
        energy0 = float(base @ base)
        if energy0 < 1e-12:
            continue
        lags = np.arange(lag_min, lag_max + 1)
        # normalized cross-correlation of the frame head with each lagged copy
        shifted = np.lib.stride_tricks.sliding_window_view(frame, window)
        numer = shifted[lags] @ base
        denom = np.sqrt(energy0 * np.einsum("ij,ij->i", shifted[lags],
                                            shifted[lags]))
        ncc = numer / np.maximum(denom, 1e-20)
        peak = float(ncc.max())
        if peak <= VOICING_THRESHOLD:
            continue
        # lag multiples of the period correlate equally well; take the
        # shortest lag within noise margin of the peak to avoid octave drops
        k = int(np.flatnonzero(ncc >= peak - 0.01)[0])
        lag = float(lags[k])
        if 0 < k < ncc.size - 1:  # parabolic refinement around the peak
            a, b, c = ncc[k - 1], ncc[k], ncc[k + 1]
            denom2 = a - 2.0 * b + c
            if denom2 < 0.0:
                lag += 0.5 * (a - c) / denom2
        voiced.append(fs / lag)

    return float(np.mean(voiced)) if voiced else None


def mouth_metrics(frames: list[LandmarkFrame]) -> tuple[float, float]:
    """(mean mouth aperture, mean mouth spreading) in pixels."""
    if not frames:
        raise ValueError("need at least one landmark frame")
    apertures, spreads = [], []
    for frame in frames:
        if not frame.complete:
            continue
        top, bottom = frame.points["mouth_top"], frame.points["mouth_bottom"]
        left, right = frame.points["mouth_left"], frame.points["mouth_right"]
        apertures.append(math.dist(top, bottom))
        spreads.append(math.dist(left, right))
    if not apertures:
        raise ValueError("every frame was missing mouth points")
    return float(np.mean(apertures)), float(np.mean(spreads))


def crop_mouth(face: np.ndarray) -> np.ndarray:
    """Central lower-face rectangle of an aligned 256x256 image."""
    face = np.asarray(face)
    if face.shape[:2] != (FACE_SIZE, FACE_SIZE):
        raise ValueError(f"face image must be {FACE_SIZE}x{FACE_SIZE}, "
                         f"got {face.shape[:2]}")
    return face[MOUTH_ROWS[0]:MOUTH_ROWS[1], MOUTH_COLS[0]:MOUTH_COLS[1]]


def speaker_deltas(rows: list[dict]) -> tuple[list[SpeakerFeatureDelta], list[str]]:
    """Per-speaker style contrasts: mean(lombard) - mean(non_lombard).

    Each row describes one utterance:
    {speaker, style, f0 (Hz or None), ma, ms, metrics: {name: value}}.
    Returns (deltas, excluded speakers); a speaker missing either style is
    excluded and logged.
    """
    by_speaker: dict[str, dict[str, list[dict]]] = {}
    for row in rows:
        style = row["style"]
        if style not in STYLES:
            raise ValueError(f"unknown style {style!r}")
        by_speaker.setdefault(row["speaker"], {}).setdefault(style, []).append(row)

    deltas, excluded = [], []
    for speaker in sorted(by_speaker):
        groups = by_speaker[speaker]
        if set(groups) != set(STYLES):
            excluded.append(speaker)
            log.info("speaker %s lacks style %s; excluded from deltas",
                     speaker, set(STYLES) - set(groups))
            continue

        def style_mean(style: str, key: str) -> float | None:
            values = [r[key] for r in groups[style] if r.get(key) is not None]
            return float(np.mean(values)) if values else None

        f0_l, f0_nl = style_mean("lombard", "f0"), style_mean("non_lombard", "f0")
        metric_names = sorted(
            set().union(*(r.get("metrics", {}) for r in groups["lombard"]))
            & set().union(*(r.get("metrics", {}) for r in groups["non_lombard"])))
        delta_metric = {}
        for name in metric_names:
            per_style = [
                np.mean([r["metrics"][name] for r in groups[style]
                         if name in r.get("metrics", {})])
                for style in ("lombard", "non_lombard")]
            delta_metric[name] = float(per_style[0] - per_style[1])
        deltas.append(SpeakerFeatureDelta(
            speaker_id=speaker,
            delta_f0=(f0_l - f0_nl) if f0_l is not None and f0_nl is not None
            else None,
            delta_ma=style_mean("lombard", "ma") - style_mean("non_lombard", "ma"),
            delta_ms=style_mean("lombard", "ms") - style_mean("non_lombard", "ms"),
            delta_metric=delta_metric))
    return deltas, excluded


def read_landmarks(path: str | Path) -> list[LandmarkFrame]:
    """Load line-delimited landmark records."""
    frames = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        points = {}
        for name in MOUTH_POINTS:
            if name in record:
                xy = tuple(float(v) for v in record[name])
                if len(xy) != 2 or not all(math.isfinite(v) for v in xy):
                    raise ValueError(
                        f"{path}:{lineno}: {name} must be two finite numbers")
                points[name] = xy
        resolution = tuple(record.get("resolution", (FACE_SIZE, FACE_SIZE)))
        frames.append(LandmarkFrame(int(record["frame_index"]), points,
                                    resolution))
    return frames


def write_landmarks(path: str | Path, frames: list[LandmarkFrame]) -> None:
    with open(path, "w") as fh:
        for frame in frames:
            record = {"frame_index": frame.frame_index,
                      "resolution": list(frame.resolution)}
            for name, xy in frame.points.items():
                record[name] = [float(xy[0]), float(xy[1])]
            fh.write(json.dumps(record) + "\n")
