"""The twelve-system condition matrix: modality x training style x SNR range.

Modalities are audio-only (AO), video-only (VO), and audio-visual (AV); each
is trained either on Lombard (L) or non-Lombard (NL) speech, over either the
narrow SNR grid (-20..5 dB, where Lombard speech naturally occurs) or the
wide grid that extends to +30 dB. Since talkers only produce Lombard speech
when noise is audible, wide-range L systems substitute non-Lombard speech at
the quiet SNRs (>= 10 dB) while keeping Lombard speech at the noisy end;
wide-range NL systems train on non-Lombard speech throughout.

Evaluation mirrors that: narrow-range systems are tested on Lombard speech
over the narrow grid; wide-range systems additionally face non-Lombard
speech at the quiet SNRs.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..noise import NARROW_SNRS_DB, WIDE_SNRS_DB

WIDE_HIGH_SNRS_DB: tuple[int, ...] = tuple(
    s for s in WIDE_SNRS_DB if s not in NARROW_SNRS_DB)

MODALITIES = ("vo", "ao", "av")
STYLE_LABELS = ("L", "NL")
SNR_RANGES = ("narrow", "wide")

_STYLE_WORD = {"L": "lombard", "NL": "non_lombard"}


@dataclass(frozen=True)
class SystemSpec:
    """One enhancement system in the condition matrix."""

    modality: str
    training_style: str  # "L" or "NL"
    snr_range: str       # "narrow" or "wide"

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.training_style not in STYLE_LABELS:
            raise ValueError(
                f"training style must be 'L' or 'NL', got "
                f"{self.training_style!r}")
        if self.snr_range not in SNR_RANGES:
            raise ValueError(f"unknown SNR range {self.snr_range!r}")

    @property
    def name(self) -> str:
        suffix = "(w)" if self.snr_range == "wide" else ""
        return f"{self.modality.upper()}-{self.training_style}{suffix}"

    @property
    def style_word(self) -> str:
        return _STYLE_WORD[self.training_style]

    def training_pairs(self) -> tuple[tuple[str, int], ...]:
        """(speaking_style, snr_db) pairs this system trains on."""
        if self.snr_range == "narrow":
            return tuple((self.style_word, snr) for snr in NARROW_SNRS_DB)
        if self.training_style == "NL":
            return tuple(("non_lombard", snr) for snr in WIDE_SNRS_DB)
        # wide-range L: Lombard speech at the noisy end, non-Lombard at the
        # quiet end where talkers would not be Lombard-speaking
        return (tuple(("lombard", snr) for snr in NARROW_SNRS_DB)
                + tuple(("non_lombard", snr) for snr in WIDE_HIGH_SNRS_DB))

    def evaluation_pairs(self) -> tuple[tuple[str, int], ...]:
        return evaluation_pairs(self.snr_range)


def evaluation_pairs(snr_range: str) -> tuple[tuple[str, int], ...]:
    """(speaking_style, snr_db) pairs systems of this range are tested on."""
    if snr_range not in SNR_RANGES:
        raise ValueError(f"unknown SNR range {snr_range!r}")
    pairs = tuple(("lombard", snr) for snr in NARROW_SNRS_DB)
    if snr_range == "wide":
        pairs += tuple(("non_lombard", snr) for snr in WIDE_HIGH_SNRS_DB)
    return pairs


def condition_matrix() -> tuple[SystemSpec, ...]:
    """All twelve systems in a stable order."""
    return tuple(SystemSpec(modality, style, snr_range)
                 for modality in MODALITIES
                 for style in STYLE_LABELS
                 for snr_range in SNR_RANGES)


def system_by_name(name: str) -> SystemSpec:
    for spec in condition_matrix():
        if spec.name == name:
            return spec
    known = ", ".join(s.name for s in condition_matrix())
    raise ValueError(f"unknown system {name!r}; known systems: {known}")
