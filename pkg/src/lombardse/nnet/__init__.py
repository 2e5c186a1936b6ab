"""Hand-rolled numpy mask estimators: layers, wiring, optimizer, training."""

from .network import ArchitectureConfig, MaskNet, NeuralMaskEstimator  # noqa: F401
from .data import (NormalizationStats, SegmentBatch,  # noqa: F401
                   compute_norm_stats, pair_segments)
from .training import TrainingConfig, TrainingDivergedError, train  # noqa: F401
from .checkpoint import load_checkpoint, save_checkpoint  # noqa: F401
