"""Result tables and figures from an experiment's metric rows.

Produces per-SNR tables with 95% confidence intervals, range-window averages
(the noisy -20..5 dB window and the quiet 10..30 dB window), per-gender
aggregates, and the per-speaker style-contrast analysis: production feature
deltas (F0, mouth aperture, mouth spreading) against the objective-metric
benefit of Lombard-trained over non-Lombard-trained enhancement, with
least-squares fits and rank/linear correlations. Everything is written as
CSV + JSON plus PNG figures rendered off-screen.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ..features import estimate_f0, mouth_metrics, read_landmarks, speaker_deltas
from ..metrics import aggregate
from ..stats import fit_line, pearson, spearman
from ..wavio import read_wav
from .conditions import NARROW_SNRS_DB, WIDE_HIGH_SNRS_DB
from .manifest import UtteranceRecord

logger = logging.getLogger(__name__)

SNR_WINDOWS = {
    "-20..5": NARROW_SNRS_DB,
    "10..30": WIDE_HIGH_SNRS_DB,
}

DELTA_FEATURES = ("delta_f0", "delta_ma", "delta_ms")


def _group(rows: list[dict], keys: tuple[str, ...]) -> dict[tuple, list[float]]:
    grouped: dict[tuple, list[float]] = {}
    for row in rows:
        grouped.setdefault(tuple(row[k] for k in keys), []).append(
            float(row["value"]))
    return grouped


def _stat_rows(rows: list[dict], keys: tuple[str, ...]) -> list[dict]:
    out = []
    for key, values in sorted(_group(rows, keys).items(),
                              key=lambda kv: tuple(map(str, kv[0]))):
        agg = aggregate(values)
        entry = dict(zip(keys, key))
        entry.update(mean=agg.mean, ci95=agg.ci95_halfwidth, n=agg.n)
        out.append(entry)
    return out


def _write_csv(path: Path, rows: list[dict], fields: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fields})


def _window_rows(rows: list[dict]) -> list[dict]:
    out = []
    for window, snrs in SNR_WINDOWS.items():
        in_window = [r for r in rows if r["snr_db"] in snrs]
        for entry in _stat_rows(in_window, ("system",)):
            entry["snr_window"] = window
            out.append(entry)
    return out


def _speaker_feature_rows(corpus_root: Path,
                          records: list[UtteranceRecord]) -> list[dict]:
    """Per-utterance production features for the style-contrast analysis."""
    rows = []
    for record in records:
        feature_row = {"speaker": record.speaker_id, "style": record.style}
        feature_row["f0"] = estimate_f0(read_wav(corpus_root / record.audio_path))
        if not record.landmarks_path:
            logger.info("utterance %s has no landmarks; skipped",
                        record.utterance_id)
            continue
        marks = read_landmarks(corpus_root / record.landmarks_path)
        ma, ms = mouth_metrics(marks)
        feature_row.update(ma=ma, ms=ms)
        rows.append(feature_row)
    return rows


def _system_speaker_means(rows: list[dict], system: str) -> dict[str, float]:
    grouped = _group([r for r in rows if r["system"] == system], ("speaker",))
    return {key[0]: float(np.mean(values)) for key, values in grouped.items()}


def _delta_rows(metric_rows: list[dict], corpus_root: Path,
                records: list[UtteranceRecord], lombard_system: str,
                plain_system: str) -> list[dict]:
    """Per-speaker feature deltas joined with the metric benefit of
    Lombard-trained enhancement (lombard_system minus plain_system)."""
    features, excluded = speaker_deltas(
        _speaker_feature_rows(corpus_root, records))
    if excluded:
        logger.info("speakers excluded from delta analysis: %s", excluded)
    lombard_means = _system_speaker_means(metric_rows, lombard_system)
    plain_means = _system_speaker_means(metric_rows, plain_system)
    out = []
    for delta in features:
        if delta.speaker_id not in lombard_means or \
                delta.speaker_id not in plain_means:
            continue
        out.append({
            "speaker": delta.speaker_id,
            "delta_f0": delta.delta_f0,
            "delta_ma": delta.delta_ma,
            "delta_ms": delta.delta_ms,
            "delta_metric": (lombard_means[delta.speaker_id]
                             - plain_means[delta.speaker_id]),
        })
    return out


def _delta_fits(delta_rows: list[dict]) -> dict[str, dict]:
    fits: dict[str, dict] = {}
    for feature in DELTA_FEATURES:
        paired = [(r[feature], r["delta_metric"]) for r in delta_rows
                  if r[feature] is not None]
        if len(paired) < 3:
            fits[feature] = {"n": len(paired)}
            continue
        x = np.array([p[0] for p in paired])
        y = np.array([p[1] for p in paired])
        entry: dict = {"n": len(paired)}
        try:
            slope, intercept = fit_line(x, y)
            entry.update(slope=slope, intercept=intercept,
                         pearson=pearson(x, y), spearman=spearman(x, y))
        except ValueError as exc:
            entry["error"] = str(exc)
        fits[feature] = entry
    return fits


def _figure_per_snr(stat_rows: list[dict], path: Path) -> None:
    systems = sorted({r["system"] for r in stat_rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for system in systems:
        entries = sorted((r for r in stat_rows if r["system"] == system),
                         key=lambda r: r["snr_db"])
        snrs = [r["snr_db"] for r in entries]
        means = [r["mean"] for r in entries]
        errs = [r["ci95"] for r in entries]
        ax.errorbar(snrs, means, yerr=errs, marker="o", capsize=2,
                    label=system)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("mean score")
    ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _figure_gender(gender_rows: list[dict], path: Path) -> None:
    systems = sorted({r["system"] for r in gender_rows})
    genders = sorted({r["gender"] for r in gender_rows})
    lookup = {(r["system"], r["gender"]): r for r in gender_rows}
    x = np.arange(len(systems))
    width = 0.8 / max(len(genders), 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    for gi, gender in enumerate(genders):
        means = [lookup.get((s, gender), {}).get("mean", 0.0) for s in systems]
        errs = [lookup.get((s, gender), {}).get("ci95", 0.0) for s in systems]
        ax.bar(x + gi * width, means, width, yerr=errs, capsize=2,
               label=gender)
    ax.set_xticks(x + width * (len(genders) - 1) / 2)
    ax.set_xticklabels(systems, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("mean score")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _figure_deltas(delta_rows: list[dict], fits: dict[str, dict],
                   path: Path) -> None:
    fig, axes = plt.subplots(1, len(DELTA_FEATURES), figsize=(11, 3.6))
    labels = {"delta_f0": "ΔF0 (Hz)", "delta_ma": "Δaperture (px)",
              "delta_ms": "Δspreading (px)"}
    for ax, feature in zip(np.atleast_1d(axes), DELTA_FEATURES):
        paired = [(r[feature], r["delta_metric"]) for r in delta_rows
                  if r[feature] is not None]
        if paired:
            x = np.array([p[0] for p in paired])
            y = np.array([p[1] for p in paired])
            ax.scatter(x, y, s=18)
            fit = fits.get(feature, {})
            if "slope" in fit:
                grid = np.linspace(x.min(), x.max(), 10)
                ax.plot(grid, fit["slope"] * grid + fit["intercept"], "--")
        ax.set_xlabel(labels[feature])
        ax.set_ylabel("Δ mean score")
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def make_report(results_rows: list[dict], corpus_root: str | Path,
                records: list[UtteranceRecord], out_dir: str | Path,
                lombard_system: str = "AV-L",
                plain_system: str = "AV-NL") -> dict:
    """Render every table and figure; returns the machine-readable summary.

    The summary (also written as report.json) carries the per-SNR, window,
    and gender tables, the per-speaker delta rows with least-squares fits,
    and the paths of every file written.
    """
    rows = [r for r in results_rows if r.get("metric") == "estoi"]
    if not rows:
        raise ValueError("no objective-metric rows to report on")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_root = Path(corpus_root)

    per_snr = _stat_rows(rows, ("system", "style", "snr_db"))
    windows = _window_rows(rows)
    gender = _stat_rows(rows, ("system", "gender"))

    systems_present = {r["system"] for r in rows}
    if {lombard_system, plain_system} <= systems_present:
        deltas = _delta_rows(rows, corpus_root, records, lombard_system,
                             plain_system)
    else:
        logger.warning(
            "systems %s and %s not both present; skipping delta analysis",
            lombard_system, plain_system)
        deltas = []
    fits = _delta_fits(deltas) if deltas else {}

    paths = {
        "per_snr_csv": out_dir / "per_snr.csv",
        "windows_csv": out_dir / "windows.csv",
        "gender_csv": out_dir / "gender.csv",
        "deltas_csv": out_dir / "speaker_deltas.csv",
        "per_snr_png": out_dir / "per_snr.png",
        "gender_png": out_dir / "gender.png",
        "deltas_png": out_dir / "speaker_deltas.png",
        "report_json": out_dir / "report.json",
    }

    _write_csv(paths["per_snr_csv"], per_snr,
               ["system", "style", "snr_db", "mean", "ci95", "n"])
    _write_csv(paths["windows_csv"], windows,
               ["system", "snr_window", "mean", "ci95", "n"])
    _write_csv(paths["gender_csv"], gender,
               ["system", "gender", "mean", "ci95", "n"])
    _write_csv(paths["deltas_csv"], deltas,
               ["speaker", "delta_f0", "delta_ma", "delta_ms", "delta_metric"])

    _figure_per_snr(per_snr, paths["per_snr_png"])
    _figure_gender(gender, paths["gender_png"])
    if deltas:
        _figure_deltas(deltas, fits, paths["deltas_png"])

    summary = {
        "per_snr": per_snr,
        "windows": windows,
        "gender": gender,
        "speaker_deltas": deltas,
        "delta_fits": fits,
        "systems": sorted(systems_present),
        "files": {k: str(v) for k, v in paths.items()
                  if v.exists() or k == "report_json"},
    }
    with open(paths["report_json"], "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary
