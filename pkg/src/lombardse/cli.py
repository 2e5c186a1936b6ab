"""Command-line interface.

One console entry point (``lombardse``) with a subcommand per workflow step:

  corpus-make      fabricate a synthetic audio-visual corpus with a manifest
  manifest-check   validate a manifest and report evaluable speakers
  folds-make       build a stratified cross-validation fold plan
  fit-ssn          fit speech-shaped noise to wav files and synthesize it
  mix              mix clean speech with noise at an exact SNR
  estoi            score a processed signal against its clean reference
  enhance          run a trained mask estimator over a noisy recording
  experiment-run   train/evaluate the condition matrix over a corpus
  report-make      turn experiment results into tables and figures
  listen-store     fabricate demo stimulus stores for listening tests
  serve            start the listening-test HTTP service
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

logger = logging.getLogger(__name__)


def cmd_corpus_make(args: argparse.Namespace) -> int:
    from .harness import make_corpus
    manifest = make_corpus(args.root, n_speakers=args.speakers,
                           utterances_per_style=args.per_style,
                           duration_s=args.duration, seed=args.seed,
                           video_size=args.video_size)
    print(manifest)
    return 0


def cmd_manifest_check(args: argparse.Namespace) -> int:
    from .harness import evaluable_speakers, load_manifest, records_by_speaker
    records = load_manifest(args.manifest)
    by_speaker = records_by_speaker(records)
    evaluable, flagged = evaluable_speakers(
        records, min_per_style=args.min_per_style)
    print(f"utterances: {len(records)}")
    print(f"speakers: {len(by_speaker)}")
    print(f"evaluable speakers: {len(evaluable)}")
    for speaker in flagged:
        print(f"flagged (too little material): {speaker}")
    return 0


def cmd_folds_make(args: argparse.Namespace) -> int:
    from .harness import load_manifest, make_folds, save_fold_plan
    records = load_manifest(args.manifest)
    plan = make_folds(records, k=args.k, seed=args.seed)
    save_fold_plan(args.out, plan)
    sizes = [(len(f.train), len(f.validation), len(f.test))
             for f in plan.folds]
    print(f"{args.out}: {plan.k} folds "
          f"(train/val/test per fold: {sizes})")
    if plan.train_only_speakers:
        print(f"train-only speakers: {', '.join(plan.train_only_speakers)}")
    return 0


def cmd_fit_ssn(args: argparse.Namespace) -> int:
    from .noise import fit_lpc, generate_ssn
    from .wavio import read_wav, write_wav
    waves = [read_wav(path) for path in args.wav]
    model = fit_lpc(waves)
    noise = generate_ssn(model, args.duration, seed=args.seed)
    write_wav(args.out, noise)
    print(f"{args.out}: {noise.duration:.2f} s of speech-shaped noise "
          f"(LPC order {len(model.coefficients) - 1})")
    return 0


def cmd_mix(args: argparse.Namespace) -> int:
    from .noise import mix_at_snr
    from .wavio import read_wav, write_wav
    clean = read_wav(args.clean)
    noise = read_wav(args.noise)
    mixture = mix_at_snr(clean, noise, args.snr, seed=args.seed)
    write_wav(args.out, mixture)
    print(f"{args.out}: mixed at {args.snr:+.1f} dB SNR")
    return 0


def cmd_estoi(args: argparse.Namespace) -> int:
    from .metrics import estoi
    from .wavio import read_wav
    clean = read_wav(args.clean)
    processed = read_wav(args.processed)
    score = estoi(clean, processed, pair_id=Path(args.processed).stem)
    print(f"{score.value:.4f}")
    return 0


def cmd_enhance(args: argparse.Namespace) -> int:
    import numpy as np

    from .harness.synthetic import load_video
    from .masking import enhance_utterance
    from .nnet import NeuralMaskEstimator, load_checkpoint
    from .wavio import read_wav, write_wav
    net, stats, _ = load_checkpoint(args.checkpoint)
    estimator = NeuralMaskEstimator(net, stats)
    noisy = read_wav(args.noisy)
    video = None
    if args.video is not None:
        frames, _ = load_video(args.video)
        video = frames.astype(np.float64) / 255.0
    enhanced = enhance_utterance(estimator, noisy, video=video)
    write_wav(args.out, enhanced)
    print(f"{args.out}: enhanced with a {net.cfg.modality} estimator")
    return 0


def cmd_experiment_run(args: argparse.Namespace) -> int:
    from .harness import (ExperimentConfig, load_fold_plan, load_manifest,
                          make_folds, run_experiment)
    records = load_manifest(Path(args.corpus) / "manifest.jsonl")
    if args.fold_plan is not None:
        plan = load_fold_plan(args.fold_plan)
    else:
        plan = make_folds(records, k=args.folds, seed=args.seed)
    config = ExperimentConfig(
        corpus_root=str(args.corpus), out_dir=str(args.out),
        systems=tuple(args.systems) if args.systems else None,
        seed=args.seed, epochs=args.epochs, batch_size=args.batch_size,
        lr_init=args.lr, noise_seconds=args.noise_seconds,
        include_oracle=not args.no_oracle)
    results = run_experiment(records, plan, config)
    print(results)
    return 0


def cmd_report_make(args: argparse.Namespace) -> int:
    from .harness import load_manifest, load_results, make_report
    results = Path(args.results)
    if results.is_dir():
        results = results / "results.jsonl"
    rows = load_results(results)
    records = load_manifest(Path(args.corpus) / "manifest.jsonl")
    summary = make_report(rows, args.corpus, records, args.out,
                          lombard_system=args.lombard_system,
                          plain_system=args.plain_system)
    print(json.dumps(sorted(summary["files"]), indent=2))
    return 0


def cmd_listen_store(args: argparse.Namespace) -> int:
    from .listen.synthetic import build_demo_store
    kinds = ("quality", "keyword") if args.kind == "both" else (args.kind,)
    root = Path(args.root)
    for kind in kinds:
        target = root / kind if args.kind == "both" else root
        store = build_demo_store(target, kind, seed=args.seed)
        print(f"{target}: {len(store.records)} stimuli ({kind})")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .listen.service import create_app
    from .listen.stimuli import StimulusStore
    store = StimulusStore.load(args.store)
    app = create_app(store, state_dir=args.state_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lombardse", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corpus-make",
                       help="fabricate a synthetic audio-visual corpus")
    p.add_argument("--root", required=True)
    p.add_argument("--speakers", type=int, default=4)
    p.add_argument("--per-style", type=int, default=6,
                   help="utterances per speaking style per speaker")
    p.add_argument("--duration", type=float, default=1.0,
                   help="seconds per utterance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--video-size", type=int, default=32)
    p.set_defaults(func=cmd_corpus_make)

    p = sub.add_parser("manifest-check",
                       help="validate a manifest and summarize speakers")
    p.add_argument("manifest")
    p.add_argument("--min-per-style", type=int, default=5)
    p.set_defaults(func=cmd_manifest_check)

    p = sub.add_parser("folds-make",
                       help="build a stratified cross-validation plan")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_folds_make)

    p = sub.add_parser("fit-ssn",
                       help="fit and synthesize speech-shaped noise")
    p.add_argument("wav", nargs="+", help="speech wav files to fit")
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_ssn)

    p = sub.add_parser("mix", help="mix clean speech and noise at an SNR")
    p.add_argument("--clean", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--snr", type=float, required=True, help="SNR in dB")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the noise excerpt position")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("estoi",
                       help="intelligibility score of processed vs clean")
    p.add_argument("--clean", required=True)
    p.add_argument("--processed", required=True)
    p.set_defaults(func=cmd_estoi)

    p = sub.add_parser("enhance",
                       help="enhance a noisy wav with a trained estimator")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--noisy", required=True)
    p.add_argument("--video", default=None,
                   help="mouth-region video (.npz) for visual estimators")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("experiment-run",
                       help="train and evaluate systems over a corpus")
    p.add_argument("--corpus", required=True,
                   help="corpus root containing manifest.jsonl")
    p.add_argument("--out", required=True)
    p.add_argument("--systems", nargs="*", default=None,
                   help="system names, e.g. AV-L AO-NL(w); default all 12")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--fold-plan", default=None,
                   help="reuse a saved fold plan instead of --folds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=4)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--noise-seconds", type=float, default=4.0)
    p.add_argument("--no-oracle", action="store_true",
                   help="skip the mask-oracle baseline")
    p.set_defaults(func=cmd_experiment_run)

    p = sub.add_parser("report-make",
                       help="tables and figures from experiment results")
    p.add_argument("--results", required=True,
                   help="experiment output directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lombard-system", default="AV-L")
    p.add_argument("--plain-system", default="AV-NL")
    p.set_defaults(func=cmd_report_make)

    p = sub.add_parser("listen-store",
                       help="fabricate demo listening-test stimuli")
    p.add_argument("--root", required=True)
    p.add_argument("--kind", choices=("quality", "keyword", "both"),
                   default="both")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_listen_store)

    p = sub.add_parser("serve", help="start the listening-test service")
    p.add_argument("--store", required=True,
                   help="stimulus store directory (see listen-store)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8900)
    p.add_argument("--state-dir", default=None,
                   help="persist sessions/responses here to survive restarts")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
