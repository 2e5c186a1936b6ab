"""Experiment runner and report generation over a small synthetic corpus."""

import json

import numpy as np
import pytest

from lombardse.harness import (ExperimentConfig, load_manifest, load_results,
                               make_corpus, make_folds, make_report,
                               run_experiment)
from lombardse.harness import runner as runner_module
from lombardse.nnet.training import TrainingDivergedError
from lombardse.noise import NARROW_SNRS_DB

N_SPEAKERS = 3
PER_STYLE = 4


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    manifest = make_corpus(root, n_speakers=N_SPEAKERS,
                           utterances_per_style=PER_STYLE,
                           duration_s=0.6, seed=0)
    return root, load_manifest(manifest)


@pytest.fixture(scope="module")
def run(corpus, tmp_path_factory):
    root, records = corpus
    plan = make_folds(records, k=2, seed=0)
    out_dir = tmp_path_factory.mktemp("run")
    config = ExperimentConfig(corpus_root=str(root), out_dir=str(out_dir),
                              systems=("AV-L", "AV-NL"), epochs=2,
                              batch_size=16, lr_init=2e-3, noise_seconds=3.0,
                              seed=0)
    results_path = run_experiment(records, plan, config)
    return {"root": root, "records": records, "plan": plan, "config": config,
            "results_path": results_path, "rows": load_results(results_path)}


class TestRunner:
    def test_row_schema_and_counts(self, run):
        rows = run["rows"]
        systems = {r["system"] for r in rows}
        assert systems == {"AV-L", "AV-NL", "unprocessed", "oracle_iam"}
        # narrow evaluation: every system scores each fold's Lombard test
        # utterances at each of the six narrow SNRs
        lombard_test = [
            [u for u in fold.test if "_l" in u] for fold in run["plan"].folds]
        for system in systems:
            for fold_index, fold_utts in enumerate(lombard_test):
                got = [r for r in rows if r["system"] == system
                       and r["fold"] == fold_index]
                assert len(got) == len(fold_utts) * len(NARROW_SNRS_DB)
        for row in rows:
            assert row["metric"] == "estoi"
            assert row["style"] == "lombard"
            assert row["snr_db"] in NARROW_SNRS_DB
            assert -1.0 <= row["value"] <= 1.0
            assert row["gender"] in ("f", "m")

    def test_rows_pair_across_systems(self, run):
        # the same (fold, utterance, snr) mixture is scored for every system,
        # so rows line up for paired statistics
        keys_by_system = {}
        for row in run["rows"]:
            keys_by_system.setdefault(row["system"], set()).add(
                (row["fold"], row["utterance"], row["snr_db"]))
        reference = keys_by_system["unprocessed"]
        for system, keys in keys_by_system.items():
            assert keys == reference, system

    def test_oracle_beats_unprocessed_at_every_snr(self, run):
        by = {}
        for row in run["rows"]:
            if row["system"] in ("unprocessed", "oracle_iam"):
                by.setdefault((row["system"], row["snr_db"]), []).append(
                    row["value"])
        for snr in NARROW_SNRS_DB:
            oracle = np.mean(by[("oracle_iam", snr)])
            unprocessed = np.mean(by[("unprocessed", snr)])
            assert oracle > unprocessed, snr

    def test_rerun_skips_finished_jobs(self, run):
        before = run["results_path"].read_bytes()
        again = run_experiment(run["records"], run["plan"], run["config"])
        assert again == run["results_path"]
        assert run["results_path"].read_bytes() == before

    def test_mismatched_settings_are_rejected(self, run):
        config = ExperimentConfig(
            corpus_root=run["config"].corpus_root,
            out_dir=run["config"].out_dir, systems=("AV-L", "AV-NL"),
            epochs=3, batch_size=16, lr_init=2e-3, noise_seconds=3.0, seed=0)
        with pytest.raises(ValueError, match="different settings"):
            run_experiment(run["records"], run["plan"], config)

    def test_fresh_rerun_reproduces_results_exactly(self, corpus, tmp_path):
        root, records = corpus
        plan = make_folds(records, k=2, seed=0)
        outputs = []
        for name in ("a", "b"):
            config = ExperimentConfig(
                corpus_root=str(root), out_dir=str(tmp_path / name),
                systems=("AO-L",), epochs=1, batch_size=16, lr_init=2e-3,
                noise_seconds=3.0, seed=0)
            outputs.append(run_experiment(records, plan, config).read_bytes())
        assert outputs[0] == outputs[1]

    def test_failed_job_is_recorded_and_others_continue(self, corpus,
                                                        tmp_path,
                                                        monkeypatch):
        root, records = corpus
        plan = make_folds(records, k=2, seed=0)
        real_train = runner_module.train

        def exploding_train(net, tcfg, train_set, val_set, stats=None):
            if net.cfg.modality == "vo":
                raise TrainingDivergedError("non-finite training loss", [])
            return real_train(net, tcfg, train_set, val_set, stats)

        monkeypatch.setattr(runner_module, "train", exploding_train)
        config = ExperimentConfig(
            corpus_root=str(root), out_dir=str(tmp_path / "run"),
            systems=("VO-L", "AO-L"), epochs=1, batch_size=16,
            lr_init=2e-3, noise_seconds=3.0, seed=0)
        results_path = run_experiment(records, plan, config)
        rows = load_results(results_path)
        assert {r["system"] for r in rows} == {"unprocessed", "oracle_iam",
                                               "AO-L"}
        run_log = json.loads((tmp_path / "run" / "run.json").read_text())
        statuses = {job: entry["status"]
                    for job, entry in run_log["jobs"].items()}
        assert statuses["0/VO-L"] == "failed"
        assert statuses["1/VO-L"] == "failed"
        assert statuses["0/AO-L"] == "done"
        assert "non-finite" in run_log["jobs"]["0/VO-L"]["error"]

    def test_unknown_system_name_is_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="AV-X"):
            ExperimentConfig(corpus_root=".", out_dir=str(tmp_path),
                             systems=("AV-X",))


@pytest.fixture(scope="module")
def report(run, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("report")
    summary = make_report(run["rows"], run["root"], run["records"], out_dir)
    return out_dir, summary


class TestReport:
    def test_files_are_written(self, report):
        out_dir, summary = report
        for name in ("per_snr.csv", "windows.csv", "gender.csv",
                     "speaker_deltas.csv", "per_snr.png", "gender.png",
                     "speaker_deltas.png", "report.json"):
            assert (out_dir / name).exists(), name
        reloaded = json.loads((out_dir / "report.json").read_text())
        assert reloaded["systems"] == summary["systems"]

    def test_per_snr_table_covers_every_system_and_snr(self, report):
        _, summary = report
        cells = {(r["system"], r["snr_db"]) for r in summary["per_snr"]}
        for system in ("AV-L", "AV-NL", "unprocessed", "oracle_iam"):
            for snr in NARROW_SNRS_DB:
                assert (system, snr) in cells
        for row in summary["per_snr"]:
            assert row["n"] >= 2
            assert row["ci95"] >= 0.0

    def test_window_averages_use_the_narrow_window(self, report):
        _, summary = report
        windows = {r["snr_window"] for r in summary["windows"]}
        assert windows == {"-20..5"}  # no quiet-window rows in a narrow run
        narrow = {r["system"]: r for r in summary["windows"]}
        assert narrow["oracle_iam"]["mean"] > narrow["unprocessed"]["mean"]

    def test_gender_aggregates_cover_both_genders(self, report):
        _, summary = report
        pairs = {(r["system"], r["gender"]) for r in summary["gender"]}
        for system in ("AV-L", "AV-NL", "unprocessed", "oracle_iam"):
            assert (system, "f") in pairs
            assert (system, "m") in pairs

    def test_speaker_deltas_have_the_synthetic_signatures(self, report):
        _, summary = report
        deltas = summary["speaker_deltas"]
        assert len(deltas) == N_SPEAKERS
        for row in deltas:
            assert row["delta_ma"] > 0.0
            assert row["delta_ms"] > 0.0
            assert 25.0 < row["delta_f0"] < 55.0
        fits = summary["delta_fits"]
        assert set(fits) == {"delta_f0", "delta_ma", "delta_ms"}
        assert fits["delta_ma"]["n"] == N_SPEAKERS
        assert "slope" in fits["delta_ma"]
        assert -1.0 <= fits["delta_ma"]["pearson"] <= 1.0

    def test_report_requires_metric_rows(self, run, tmp_path):
        with pytest.raises(ValueError, match="rows"):
            make_report([], run["root"], run["records"], tmp_path)
        off_metric = [dict(r, metric="other") for r in run["rows"]]
        with pytest.raises(ValueError, match="rows"):
            make_report(off_metric, run["root"], run["records"], tmp_path)
