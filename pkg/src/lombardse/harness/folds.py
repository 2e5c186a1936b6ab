"""Speaker-dependent cross-validation folds.

Every speaker appears in train, validation, and test of every fold; what
rotates across folds is *which utterances* of each speaker are held out. Per
speaker and speaking style, a seeded shuffle is split into k nearly equal
disjoint test blocks (together covering everything); per fold, roughly 10%
of the non-test utterances of each style (at least one) go to validation and
the rest train. Stratifying by style keeps both speaking styles represented
in every split, which style-specific training recipes rely on. With 50
utterances per speaker and k=5 this yields the ~35/5/10 per-speaker split.

Speakers with fewer than k utterances cannot give every fold a test item;
they are demoted to train-only (logged) rather than dropped.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from ..noise import SPEAKING_STYLES
from ..seeding import rng_for
from .manifest import UtteranceRecord, records_by_speaker

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FoldSplit:
    """Utterance ids for one fold."""

    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]

    def __post_init__(self):
        sets = [set(self.train), set(self.validation), set(self.test)]
        total = sum(len(s) for s in sets)
        if len(set().union(*sets)) != total:
            raise ValueError("train/validation/test overlap within a fold")


@dataclass(frozen=True)
class FoldPlan:
    """A complete k-fold partition plus the speakers demoted to train-only."""

    k: int
    seed: int
    folds: tuple[FoldSplit, ...]
    train_only_speakers: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "train_only_speakers": list(self.train_only_speakers),
            "folds": [{"train": list(f.train),
                       "validation": list(f.validation),
                       "test": list(f.test)} for f in self.folds],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FoldPlan":
        return cls(
            k=int(d["k"]),
            seed=int(d["seed"]),
            folds=tuple(FoldSplit(tuple(f["train"]), tuple(f["validation"]),
                                  tuple(f["test"])) for f in d["folds"]),
            train_only_speakers=tuple(d.get("train_only_speakers", ())),
        )


def _split_blocks(items: list[str], k: int) -> list[list[str]]:
    """Partition items into k nearly equal contiguous blocks."""
    n = len(items)
    base, extra = divmod(n, k)
    blocks, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        blocks.append(items[start:start + size])
        start += size
    return blocks


def make_folds(records: list[UtteranceRecord], k: int = 5,
               seed: int = 0) -> FoldPlan:
    """Build a deterministic speaker-dependent k-fold plan.

    Per speaker and style: shuffle that style's utterances with a seeded
    generator, split into k disjoint test blocks, then per fold take ~10%
    of the style's non-test utterances (at least one) for validation and
    train on the rest, rotating the validation window so folds do not keep
    reusing the same validation items.
    """
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if not records:
        raise ValueError("no records to fold")
    by_speaker = records_by_speaker(records)
    speakers = sorted(by_speaker)

    train_only: list[str] = []
    fold_train: list[list[str]] = [[] for _ in range(k)]
    fold_val: list[list[str]] = [[] for _ in range(k)]
    fold_test: list[list[str]] = [[] for _ in range(k)]

    for speaker_index, speaker in enumerate(speakers):
        recs = by_speaker[speaker]
        if len(recs) < k:
            train_only.append(speaker)
            logger.warning(
                "speaker %s has %d utterances (< k=%d); using them for "
                "training only", speaker, len(recs), k)
            for i in range(k):
                fold_train[i].extend(sorted(r.utterance_id for r in recs))
            continue
        for style_index, style in enumerate(SPEAKING_STYLES):
            utt_ids = sorted(r.utterance_id for r in recs
                             if r.style == style)
            if not utt_ids:
                continue
            rng = rng_for(seed, speaker_index, style_index)
            order = [utt_ids[j] for j in rng.permutation(len(utt_ids))]
            blocks = _split_blocks(order, k)
            n_val = max(1, round(0.1 * len(utt_ids)))
            for i in range(k):
                test = blocks[i]
                fold_test[i].extend(test)
                rest = [u for u in order if u not in set(test)]
                if not rest:
                    continue
                shift = (i * n_val) % len(rest)
                rotated = rest[shift:] + rest[:shift]
                n_val_i = min(n_val, len(rest))
                fold_val[i].extend(rotated[:n_val_i])
                fold_train[i].extend(rotated[n_val_i:])

    folds = tuple(FoldSplit(tuple(fold_train[i]), tuple(fold_val[i]),
                            tuple(fold_test[i])) for i in range(k))
    return FoldPlan(k=k, seed=seed, folds=folds,
                    train_only_speakers=tuple(train_only))


def save_fold_plan(path: str | Path, plan: FoldPlan) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plan.to_dict(), fh, indent=2)
        fh.write("\n")


def load_fold_plan(path: str | Path) -> FoldPlan:
    with open(Path(path), encoding="utf-8") as fh:
        return FoldPlan.from_dict(json.load(fh))
