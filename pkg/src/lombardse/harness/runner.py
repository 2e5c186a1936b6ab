"""Cross-validated enhancement experiments over the condition matrix.

For every (fold, system) job: build mask-training batches from the fold's
training utterances mixed at the system's (style, SNR) pairs, train a
desk-scale mask estimator, enhance the fold's test utterances over the
system's evaluation pairs, and append one objective-metric row per test
mixture to a line-delimited results file. Per fold, an unprocessed baseline
and an oracle-mask upper bound are scored over the same mixtures (the
evaluation mixture for a given fold/style/SNR/utterance is identical across
systems, so rows pair up for later statistics).

Jobs are resumable: a sidecar run log records per-job status, finished jobs
are skipped on re-run, and a failed job marks that fold/system pair failed
without stopping the remaining jobs. Everything is seeded, so a re-run from
scratch reproduces the results file exactly.
"""

from __future__ import annotations

import json
import logging
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..dsp import Waveform, stft
from ..masking import (OracleIamEstimator, enhance_utterance,
                       iam_from_magnitudes)
from ..metrics import estoi
from ..nnet.data import SegmentBatch, concat_batches, pair_segments
from ..nnet.network import ArchitectureConfig, MaskNet, NeuralMaskEstimator
from ..nnet.training import TrainingConfig, TrainingDivergedError, train
from ..noise import fit_lpc, generate_ssn, mix_at_snr
from ..seeding import rng_for
from ..wavio import read_wav
from .conditions import SystemSpec, condition_matrix, evaluation_pairs, system_by_name
from .folds import FoldPlan
from .manifest import UtteranceRecord
from .synthetic import load_video

logger = logging.getLogger(__name__)

UNPROCESSED_SYSTEM = "unprocessed"
ORACLE_SYSTEM = "oracle_iam"

_STYLE_INDEX = {"lombard": 0, "non_lombard": 1}


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one experiment run."""

    corpus_root: str
    out_dir: str
    systems: tuple[str, ...] | None = None  # None = full condition matrix
    seed: int = 0
    epochs: int = 4
    batch_size: int = 16
    lr_init: float = 2e-3
    noise_seconds: float = 4.0
    noise_fit_utterances: int = 12
    include_oracle: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.lr_init <= 0:
            raise ValueError("lr_init must be positive")
        if self.noise_seconds <= 0:
            raise ValueError("noise_seconds must be positive")
        if self.systems is not None:
            for name in self.systems:
                system_by_name(name)  # raises on unknown names

    def system_specs(self) -> tuple[SystemSpec, ...]:
        if self.systems is None:
            return condition_matrix()
        return tuple(system_by_name(name) for name in self.systems)


def _utt_key(utterance_id: str) -> int:
    """Stable non-negative integer for seeding per-utterance generators."""
    return zlib.crc32(utterance_id.encode("utf-8"))


def _mix_seed(seed: int, purpose: int, fold: int, style: str, snr_db: int,
              utterance_id: str) -> int:
    rng = rng_for(seed, purpose, fold, _STYLE_INDEX[style], snr_db + 1000,
                  _utt_key(utterance_id))
    return int(rng.integers(2 ** 31))


class _Corpus:
    """Lazy loader for a manifest's audio and video files."""

    def __init__(self, root: Path, records: list[UtteranceRecord]):
        self.root = Path(root)
        self.by_id = {r.utterance_id: r for r in records}
        self._audio: dict[str, Waveform] = {}
        self._video: dict[str, np.ndarray] = {}

    def record(self, utterance_id: str) -> UtteranceRecord:
        try:
            return self.by_id[utterance_id]
        except KeyError:
            raise KeyError(f"utterance {utterance_id!r} is not in the "
                           "manifest") from None

    def audio(self, utterance_id: str) -> Waveform:
        if utterance_id not in self._audio:
            rec = self.record(utterance_id)
            self._audio[utterance_id] = read_wav(self.root / rec.audio_path)
        return self._audio[utterance_id]

    def video(self, utterance_id: str) -> np.ndarray:
        if utterance_id not in self._video:
            rec = self.record(utterance_id)
            if not rec.frames_path:
                raise ValueError(f"utterance {utterance_id!r} has no video")
            frames, _ = load_video(self.root / rec.frames_path)
            self._video[utterance_id] = frames.astype(np.float64) / 255.0
        return self._video[utterance_id]


def _fit_noise_model(corpus: _Corpus, records: list[UtteranceRecord],
                     cfg: ExperimentConfig):
    """All-pole speech-shape model from a deterministic manifest subset."""
    ids = sorted(r.utterance_id for r in records)[:cfg.noise_fit_utterances]
    waves = [corpus.audio(u) for u in ids]
    return fit_lpc(waves)


def _training_batch(corpus: _Corpus, utt_ids: list[str], system: SystemSpec,
                    noise: Waveform, fold: int, purpose: int,
                    cfg: ExperimentConfig) -> SegmentBatch:
    """Mixture segments + mask targets for one system over some utterances."""
    needs_video = system.modality in ("av", "vo")
    style_ids: dict[str, list[str]] = {"lombard": [], "non_lombard": []}
    for utt in utt_ids:
        style_ids[corpus.record(utt).style].append(utt)
    batches = []
    for style, snr_db in system.training_pairs():
        for utt in style_ids[style]:
            clean = corpus.audio(utt)
            noisy = mix_at_snr(clean, noise, snr_db,
                               seed=_mix_seed(cfg.seed, purpose, fold, style,
                                              snr_db, utt))
            noisy_spec = stft(noisy)
            video = corpus.video(utt) if needs_video else None
            paired = pair_segments(noisy_spec, video)
            clean_segments = pair_segments(stft(clean), None).audio
            target = iam_from_magnitudes(clean_segments, paired.audio)
            batches.append(SegmentBatch(paired.audio, paired.video, target))
    if not batches:
        raise ValueError(
            f"system {system.name} has no training utterances; the fold's "
            "training split lacks the required speaking styles")
    return concat_batches(batches)


def _score_rows(corpus: _Corpus, utt_ids: list[str], system_name: str,
                fold: int, pairs, noise: Waveform, enhance,
                cfg: ExperimentConfig) -> list[dict]:
    """Score `enhance(clean, noisy, utt)` over evaluation mixtures."""
    rows = []
    for style, snr_db in pairs:
        for utt in utt_ids:
            rec = corpus.record(utt)
            if rec.style != style:
                continue
            clean = corpus.audio(utt)
            noisy = mix_at_snr(clean, noise, snr_db,
                               seed=_mix_seed(cfg.seed, 23, fold, style,
                                              snr_db, utt))
            processed = enhance(clean, noisy, utt)
            score = estoi(clean, processed, pair_id=f"{fold}/{utt}@{snr_db}")
            rows.append({
                "fold": fold, "system": system_name, "style": style,
                "snr_db": snr_db, "speaker": rec.speaker_id,
                "gender": rec.gender, "utterance": utt,
                "metric": "estoi", "value": float(score.value),
            })
    return rows


def _append_rows(path: Path, rows: list[dict]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def load_results(path: str | Path) -> list[dict]:
    rows = []
    with open(Path(path), encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


class _RunLog:
    """Per-job status sidecar enabling resumption."""

    def __init__(self, path: Path, config: ExperimentConfig):
        self.path = path
        # normalize through JSON so tuples compare equal to reloaded lists
        config_doc = json.loads(json.dumps(asdict(config)))
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                self.state = json.load(fh)
            if self.state.get("config") != config_doc:
                raise ValueError(
                    f"{path} belongs to a run with different settings; "
                    "use a fresh output directory or matching settings")
        else:
            self.state = {"config": config_doc, "jobs": {}}

    def status(self, job: str) -> str | None:
        entry = self.state["jobs"].get(job)
        return entry["status"] if entry else None

    def record(self, job: str, status: str, **extra) -> None:
        self.state["jobs"][job] = {"status": status, **extra}
        tmp = self.path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.state, fh, indent=2)
        tmp.replace(self.path)


def run_experiment(records: list[UtteranceRecord], plan: FoldPlan,
                   config: ExperimentConfig) -> Path:
    """Run every (fold, system) job plus per-fold baselines; return results path.

    Re-running with the same output directory skips finished jobs and retries
    failed ones; re-running in a fresh directory reproduces the results file
    exactly.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.jsonl"
    run_log = _RunLog(out_dir / "run.json", config)

    corpus = _Corpus(Path(config.corpus_root), records)
    noise_model = _fit_noise_model(corpus, records, config)
    systems = config.system_specs()

    # all styles/ranges any requested system needs, for the baseline pairs
    ranges = {s.snr_range for s in systems}
    baseline_pairs = evaluation_pairs("wide" if "wide" in ranges else "narrow")

    for fold_index, split in enumerate(plan.folds):
        noise = generate_ssn(noise_model, config.noise_seconds,
                             seed=int(rng_for(config.seed, 3,
                                              fold_index).integers(2 ** 31)))
        test_ids = sorted(split.test)

        baseline_names = [UNPROCESSED_SYSTEM]
        if config.include_oracle:
            baseline_names.append(ORACLE_SYSTEM)
        for name in baseline_names:
            job = f"{fold_index}/{name}"
            if run_log.status(job) == "done":
                continue
            if name == UNPROCESSED_SYSTEM:
                enhance = lambda clean, noisy, utt: noisy
            else:
                enhance = lambda clean, noisy, utt: enhance_utterance(
                    OracleIamEstimator(clean), noisy)
            rows = _score_rows(corpus, test_ids, name, fold_index,
                               baseline_pairs, noise, enhance, config)
            _append_rows(results_path, rows)
            run_log.record(job, "done", rows=len(rows))
            logger.info("fold %d %s: %d rows", fold_index, name, len(rows))

        for system in systems:
            job = f"{fold_index}/{system.name}"
            if run_log.status(job) == "done":
                continue
            try:
                rows = _run_system_job(corpus, split, system, noise,
                                       fold_index, config)
            except (TrainingDivergedError, ValueError, FloatingPointError) as exc:
                logger.error("fold %d system %s failed: %s",
                             fold_index, system.name, exc)
                run_log.record(job, "failed", error=str(exc))
                continue
            _append_rows(results_path, rows)
            run_log.record(job, "done", rows=len(rows))
            logger.info("fold %d %s: %d rows", fold_index, system.name,
                        len(rows))
    return results_path


def _run_system_job(corpus: _Corpus, split, system: SystemSpec,
                    noise: Waveform, fold_index: int,
                    config: ExperimentConfig) -> list[dict]:
    train_set = _training_batch(corpus, sorted(split.train), system, noise,
                                fold_index, purpose=19, cfg=config)
    val_set = _training_batch(corpus, sorted(split.validation), system, noise,
                              fold_index, purpose=29, cfg=config)
    net = MaskNet(ArchitectureConfig.desk_scale(system.modality),
                  seed=int(rng_for(config.seed, 5, fold_index,
                                   _system_key(system)).integers(2 ** 31)))
    tcfg = TrainingConfig(lr_init=config.lr_init,
                          batch_size=config.batch_size,
                          max_epochs=config.epochs, seed=config.seed)
    stats, _ = train(net, tcfg, train_set, val_set)
    estimator = NeuralMaskEstimator(net, stats)

    needs_video = system.modality in ("av", "vo")

    def enhance(clean, noisy, utt):
        video = corpus.video(utt) if needs_video else None
        return enhance_utterance(estimator, noisy, video=video)

    return _score_rows(corpus, sorted(split.test), system.name, fold_index,
                       system.evaluation_pairs(), noise, enhance, config)


def _system_key(system: SystemSpec) -> int:
    return list(condition_matrix()).index(system)
