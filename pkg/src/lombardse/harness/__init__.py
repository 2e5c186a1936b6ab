"""Experiment harness: corpus manifests, folds, condition matrix, runner, report."""

from .conditions import (NARROW_SNRS_DB, WIDE_HIGH_SNRS_DB, SystemSpec,
                         condition_matrix, evaluation_pairs, system_by_name)
from .folds import FoldPlan, FoldSplit, load_fold_plan, make_folds, save_fold_plan
from .grid import (ADVERBS, COLOURS, COMMANDS, DIGITS, KEYWORD_SLOTS, LETTERS,
                   PREPOSITIONS, SLOTS, TranscriptError, keywords,
                   random_transcript, validate_transcript)
from .manifest import (UtteranceRecord, evaluable_speakers, load_manifest,
                       records_by_speaker, save_manifest)
from .report import make_report
from .runner import ExperimentConfig, load_results, run_experiment
from .synthetic import make_corpus

__all__ = [
    "ADVERBS", "COLOURS", "COMMANDS", "DIGITS", "KEYWORD_SLOTS", "LETTERS",
    "PREPOSITIONS", "SLOTS", "NARROW_SNRS_DB", "WIDE_HIGH_SNRS_DB",
    "ExperimentConfig", "FoldPlan", "FoldSplit", "SystemSpec",
    "TranscriptError", "UtteranceRecord", "condition_matrix",
    "evaluable_speakers", "evaluation_pairs", "keywords", "load_fold_plan",
    "load_manifest", "load_results", "make_corpus", "make_folds",
    "make_report", "random_transcript", "records_by_speaker", "run_experiment",
    "save_fold_plan", "save_manifest", "system_by_name", "validate_transcript",
]
