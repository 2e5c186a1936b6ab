"""Adam training loop: LR halving on validation regression, best-epoch return.

The learning rate starts at 4e-4 and is halved after any epoch whose
validation loss exceeds the previous epoch's (a flag switches the comparison
to best-so-far). The parameters returned are those of the epoch with minimum
validation loss. With a fixed seed and single-threaded numerics the whole run
is bit-reproducible: shuffles and dropout masks are pure functions of
(seed, epoch) and (seed, step).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..seeding import rng_for
from .adam import AdamState, adam_step
from .data import (
    NormalizationStats,
    SegmentBatch,
    compute_norm_stats,
    standardize_audio,
    standardize_video,
)
from .network import MaskNet


class TrainingDivergedError(RuntimeError):
    def __init__(self, message: str, log: list[dict]):
        super().__init__(message)
        self.log = log


@dataclass(frozen=True)
class TrainingConfig:
    lr_init: float = 4e-4
    lr_factor: float = 0.5
    batch_size: int = 64
    max_epochs: int = 50
    seed: int = 0
    lr_compare: str = "previous"  # or "best"

    def __post_init__(self):
        if min(self.lr_init, self.lr_factor, self.batch_size, self.max_epochs) <= 0:
            raise ValueError("training hyperparameters must be positive")
        if self.lr_compare not in ("previous", "best"):
            raise ValueError("lr_compare must be 'previous' or 'best'")


@dataclass
class TrainingLog:
    entries: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float("inf")

    def to_dict(self) -> dict:
        return {"entries": self.entries, "best_epoch": self.best_epoch,
                "best_val_loss": self.best_val_loss}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingLog":
        return cls(list(d["entries"]), int(d["best_epoch"]),
                   float(d["best_val_loss"]))


def _standardized_arrays(batch: SegmentBatch, stats: NormalizationStats,
                         needs_audio: bool, needs_video: bool):
    audio = standardize_audio(batch.audio, stats) if needs_audio else None
    video = None
    if needs_video:
        if batch.video is None:
            raise ValueError("batch has no video but the model requires it")
        video = standardize_video(batch.video, stats)
    if batch.target is None:
        raise ValueError("training rows need mask targets")
    return audio, video, batch.target


def evaluate_loss(net: MaskNet, batch: SegmentBatch, stats: NormalizationStats,
                  chunk: int = 64) -> float:
    """Eval-mode mean squared mask error over a whole set."""
    audio, video, target = _standardized_arrays(
        batch, stats, net.cfg.uses_audio, net.cfg.uses_video)
    total_sq, total_n = 0.0, 0
    for lo in range(0, len(batch), chunk):
        sl = slice(lo, lo + chunk)
        est = net.forward(None if audio is None else audio[sl],
                          None if video is None else video[sl], train=False)
        residual = est - target[sl]
        total_sq += float(np.sum(residual ** 2))
        total_n += residual.size
    return total_sq / total_n


def train(net: MaskNet, tcfg: TrainingConfig, train_set: SegmentBatch,
          val_set: SegmentBatch,
          stats: NormalizationStats | None = None
          ) -> tuple[NormalizationStats, TrainingLog]:
    """Run the epoch loop; the network is left holding the best-epoch tensors."""
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("training and validation sets must be non-empty")
    stats = stats or compute_norm_stats(train_set)
    audio, video, target = _standardized_arrays(
        train_set, stats, net.cfg.uses_audio, net.cfg.uses_video)

    params = net.parameters()
    state = AdamState(params)
    lr = tcfg.lr_init
    log = TrainingLog()
    best_snapshot: dict[str, np.ndarray] | None = None
    prev_val = None
    step = 0

    for epoch in range(1, tcfg.max_epochs + 1):
        order = rng_for(tcfg.seed, 1_000_000 + epoch).permutation(len(train_set))
        epoch_sq, epoch_n = 0.0, 0
        for lo in range(0, len(order), tcfg.batch_size):
            idx = order[lo:lo + tcfg.batch_size]
            try:
                loss, _ = net.loss_and_gradients(
                    None if audio is None else audio[idx],
                    None if video is None else video[idx],
                    target[idx], step=step)
                if not np.isfinite(loss):
                    raise FloatingPointError(
                        f"non-finite training loss at epoch {epoch}")
                adam_step(params, net.gradients(), state, lr)
            except FloatingPointError as exc:
                raise TrainingDivergedError(str(exc), log.entries) from exc
            cells = idx.size * target.shape[1] * target.shape[2]
            epoch_sq += loss * cells
            epoch_n += cells
            step += 1

        val_loss = evaluate_loss(net, val_set, stats, chunk=tcfg.batch_size)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(
                f"non-finite validation loss at epoch {epoch}", log.entries)
        log.entries.append({"epoch": epoch, "lr": lr,
                            "train_loss": epoch_sq / epoch_n,
                            "val_loss": val_loss})
        if val_loss < log.best_val_loss:
            log.best_val_loss = val_loss
            log.best_epoch = epoch
            best_snapshot = {k: v.copy() for k, v in
                             {**net.parameters(), **net.buffers()}.items()}
        reference = (prev_val if tcfg.lr_compare == "previous"
                     else log.best_val_loss)
        if prev_val is not None and val_loss > reference:
            lr *= tcfg.lr_factor
        prev_val = val_loss

    assert best_snapshot is not None
    net.load_tensors(best_snapshot)
    return stats, log
