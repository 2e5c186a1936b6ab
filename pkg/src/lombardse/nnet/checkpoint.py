"""Self-describing model checkpoints.

Format "mask-estimator-checkpoint" version 1: a single .npz holding every
parameter and buffer tensor under ``tensor.<name>``, plus a ``meta`` JSON
string with the architecture config, init seed, normalization statistics,
and the training log. Loading rebuilds the network from the config and
verifies the tensor inventory, so checkpoints are portable across processes.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .data import NormalizationStats
from .network import ArchitectureConfig, MaskNet
from .training import TrainingLog

FORMAT_NAME = "mask-estimator-checkpoint"
FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, net: MaskNet, stats: NormalizationStats,
                    log: TrainingLog | None = None) -> None:
    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "architecture": asdict(net.cfg),
        "init_seed": net.seed,
        "norm_stats": stats.to_dict(),
        "training_log": log.to_dict() if log is not None else None,
    }
    tensors = {f"tensor.{k}": v for k, v in
               {**net.parameters(), **net.buffers()}.items()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, meta=np.array(json.dumps(meta)), **tensors)


def load_checkpoint(path: str | Path
                    ) -> tuple[MaskNet, NormalizationStats, TrainingLog | None]:
    with np.load(Path(path), allow_pickle=False) as archive:
        meta = json.loads(str(archive["meta"]))
        if meta.get("format") != FORMAT_NAME:
            raise ValueError(f"{path}: not a {FORMAT_NAME} file")
        if meta.get("version") != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version "
                             f"{meta.get('version')}")
        arch = meta["architecture"]
        for key in ("audio_channels", "video_channels"):
            arch[key] = tuple(arch[key])
        if arch.get("fusion_widths") is not None:
            arch["fusion_widths"] = tuple(arch["fusion_widths"])
        cfg = ArchitectureConfig(**arch)
        net = MaskNet(cfg, seed=int(meta["init_seed"]))
        net.load_tensors({k[len("tensor."):]: archive[k]
                          for k in archive.files if k.startswith("tensor.")})
    stats = NormalizationStats.from_dict(meta["norm_stats"])
    log = (TrainingLog.from_dict(meta["training_log"])
           if meta["training_log"] is not None else None)
    return net, stats, log
