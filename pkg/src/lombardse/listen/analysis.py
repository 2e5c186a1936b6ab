"""Statistical analysis of collected listening-test sessions.

MUSHRA ratings become per-condition box-plot summaries (median, quartiles,
1.5-IQR whiskers, outliers) and six planned pairwise comparisons per SNR —
Lombard vs non-Lombard training within each modality, audio-visual vs
audio-only within each style, and the two Lombard systems against the
unprocessed mixture — each tested with the paired two-sided signed-rank test
at a Bonferroni-corrected threshold (alpha/6) plus a dominance effect size.
Keyword responses become per-(SNR, condition) percent-correct tables per
field and averaged over the three fields. Training sessions are excluded;
the analysis is a pure function of the stored responses.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..stats import cliffs_delta, wilcoxon_signed_rank
from .scoring import KEYWORD_FIELDS, score_keywords
from .sessions import Session
from .stimuli import MUSHRA_CONDITIONS

logger = logging.getLogger(__name__)

# the six planned quality contrasts; each is (a, b) tested as a - b
MUSHRA_COMPARISONS = (
    ("AO-L", "AO-NL"),
    ("AV-L", "AV-NL"),
    ("AV-L", "AO-L"),
    ("AV-NL", "AO-NL"),
    ("AO-L", "unprocessed"),
    ("AV-L", "unprocessed"),
)
COMPARISON_ALPHA = 0.05


@dataclass(frozen=True)
class ComparisonResult:
    """One planned pairwise contrast at one SNR."""

    condition_a: str
    condition_b: str
    snr_db: int
    n_pairs: int
    p_value: float
    significant: bool
    corrected_threshold: float
    d_c: float
    magnitude: str
    degenerate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def boxplot_stats(values) -> dict:
    """Median, quartiles, 1.5-IQR whiskers, and the points beyond them."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no values to summarize")
    q1, median, q3 = (float(q) for q in np.percentile(arr, (25, 50, 75)))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    outliers = arr[(arr < lo_fence) | (arr > hi_fence)]
    return {
        "median": median, "q1": q1, "q3": q3,
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "outliers": sorted(float(v) for v in outliers),
        "n": int(arr.size),
    }


def _mushra_ratings(pairs) -> dict[tuple[int, str], dict[tuple[str, str], int]]:
    """(snr, condition) -> {(session, trial): rating} over answered trials."""
    ratings: dict[tuple[int, str], dict[tuple[str, str], int]] = {}
    for session, responses in pairs:
        for trial in session.trials:
            response = responses.get(trial.trial_id)
            if response is None:
                continue
            values = response["payload"]["ratings"]
            for condition, value in zip(trial.rated_conditions, values):
                ratings.setdefault((trial.snr_db, condition), {})[
                    (session.session_id, trial.trial_id)] = int(value)
    return ratings


def analyze_mushra(pairs: list[tuple[Session, dict[str, dict]]]) -> dict:
    """Box plots and the six planned comparisons per SNR."""
    ratings = _mushra_ratings(pairs)
    if not ratings:
        return {"boxplots": {}, "comparisons": [], "n_sessions": len(pairs)}

    snrs = sorted({snr for snr, _ in ratings})
    boxplots = {
        str(snr): {condition: boxplot_stats(list(
            ratings[(snr, condition)].values()))
            for condition in MUSHRA_CONDITIONS
            if (snr, condition) in ratings}
        for snr in snrs}

    comparisons = []
    for snr in snrs:
        for condition_a, condition_b in MUSHRA_COMPARISONS:
            a = ratings.get((snr, condition_a), {})
            b = ratings.get((snr, condition_b), {})
            shared = sorted(set(a) & set(b))
            if not shared:
                logger.warning(
                    "no paired ratings for %s vs %s at %d dB; comparison "
                    "skipped", condition_a, condition_b, snr)
                continue
            paired = np.array([(a[key], b[key]) for key in shared],
                              dtype=np.float64)
            test = wilcoxon_signed_rank(paired, alpha=COMPARISON_ALPHA,
                                        m_comparisons=len(MUSHRA_COMPARISONS))
            effect = cliffs_delta(paired[:, 0], paired[:, 1])
            comparisons.append(ComparisonResult(
                condition_a=condition_a, condition_b=condition_b,
                snr_db=snr, n_pairs=len(shared), p_value=test.p_value,
                significant=test.significant,
                corrected_threshold=test.corrected_threshold,
                d_c=effect.d_c, magnitude=effect.magnitude,
                degenerate=test.degenerate).to_dict())
    return {"boxplots": boxplots, "comparisons": comparisons,
            "n_sessions": len(pairs)}


def analyze_intelligibility(pairs: list[tuple[Session, dict[str, dict]]]
                            ) -> dict:
    """Percent-correct per keyword field and on average, per (SNR, condition)."""
    cells: dict[tuple[int, str], list[dict]] = {}
    for session, responses in pairs:
        for trial in session.trials:
            response = responses.get(trial.trial_id)
            if response is None:
                continue
            marks = score_keywords(response["payload"], trial.truth)
            cells.setdefault((trial.snr_db, trial.condition), []).append(marks)

    rows = []
    for (snr, condition), marks in sorted(cells.items()):
        row = {"snr_db": snr, "condition": condition, "n": len(marks)}
        field_pcts = []
        for field in KEYWORD_FIELDS:
            pct = 100.0 * np.mean([m[field] for m in marks])
            row[f"{field}_pct"] = float(pct)
            field_pcts.append(pct)
        row["mean_pct"] = float(np.mean(field_pcts))
        rows.append(row)
    return {"table": rows, "n_sessions": len(pairs)}


def analyze_sessions(pairs: list[tuple[Session, dict[str, dict]]]) -> dict:
    """Dispatch stored sessions to their protocol's analysis.

    `pairs` holds (session, {trial_id: stored response dict}); training
    sessions are dropped here so familiarization never contaminates results.
    """
    mushra = [(s, r) for s, r in pairs if s.kind == "mushra"]
    keyword = [(s, r) for s, r in pairs if s.kind == "intelligibility"]
    dropped = len(pairs) - len(mushra) - len(keyword)
    if dropped:
        logger.info("excluded %d training/unknown sessions from analysis",
                    dropped)
    return {
        "mushra": analyze_mushra(mushra),
        "intelligibility": analyze_intelligibility(keyword),
    }
