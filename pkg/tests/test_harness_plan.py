"""Sentence vocabulary, manifests, folds, conditions, and the synthetic corpus."""

import json

import numpy as np
import pytest

from lombardse.features import estimate_f0, mouth_metrics, read_landmarks
from lombardse.harness import (COLOURS, COMMANDS, DIGITS, LETTERS,
                               TranscriptError, condition_matrix,
                               evaluable_speakers, evaluation_pairs, keywords,
                               load_fold_plan, load_manifest, make_corpus,
                               make_folds, random_transcript,
                               save_fold_plan, save_manifest, system_by_name,
                               validate_transcript)
from lombardse.harness.manifest import ManifestError, UtteranceRecord
from lombardse.harness.synthetic import (frame_envelope, load_video,
                                         render_mouth_video, speaker_profiles)
from lombardse.noise import NARROW_SNRS_DB, synth_speechlike
from lombardse.seeding import rng_for
from lombardse.wavio import read_wav


def _record(utt="s01_n01", speaker="s01", gender="f", style="non_lombard",
            transcript=("bin", "blue", "at", "C", "4", "now")):
    return UtteranceRecord(
        utterance_id=utt, speaker_id=speaker, gender=gender, style=style,
        audio_path=f"audio/{utt}.wav", frames_path=f"video/{utt}.npz",
        landmarks_path=f"landmarks/{utt}.jsonl", transcript=transcript)


class TestTranscripts:
    def test_valid_sentence_accepted(self):
        words = validate_transcript("place red at C 4 please")
        assert words == ("place", "red", "at", "C", "4", "please")

    def test_letter_w_is_rejected(self):
        with pytest.raises(TranscriptError) as err:
            validate_transcript("bin blue at W 1 now")
        assert "letter" in str(err.value)
        assert "'W'" in str(err.value)

    def test_wrong_slot_word_names_the_slot(self):
        with pytest.raises(TranscriptError, match="command"):
            validate_transcript("blue bin at C 1 now")
        with pytest.raises(TranscriptError, match="adverb"):
            validate_transcript("bin blue at C 1 quickly")

    def test_wrong_length_rejected(self):
        with pytest.raises(TranscriptError, match="6 words"):
            validate_transcript("bin blue at C 4")

    def test_vocabulary_sizes(self):
        assert len(COMMANDS) == 4 and len(COLOURS) == 4
        assert len(LETTERS) == 25 and "W" not in LETTERS
        assert len(DIGITS) == 10

    def test_keywords_extracts_scored_slots(self):
        assert keywords("bin blue at C 4 now") == {
            "colour": "blue", "letter": "C", "digit": "4"}

    def test_random_transcripts_are_valid_and_seeded(self):
        for trial in range(25):
            words = random_transcript(rng_for(trial))
            assert validate_transcript(words) == words
        again = [random_transcript(rng_for(9)) for _ in range(2)]
        assert again[0] == again[1]


class TestManifest:
    def test_round_trip(self, tmp_path):
        records = [_record(), _record(utt="s01_l01", style="lombard")]
        path = tmp_path / "manifest.jsonl"
        save_manifest(path, records)
        assert load_manifest(path) == records

    def test_duplicate_utterance_id_names_it(self, tmp_path):
        path = tmp_path / "m.jsonl"
        save_manifest(path, [_record(), _record()])
        with pytest.raises(ManifestError, match="duplicate.*s01_n01"):
            load_manifest(path)

    def test_gender_flip_names_the_speaker(self, tmp_path):
        path = tmp_path / "m.jsonl"
        save_manifest(path, [_record(), _record(utt="other", gender="f")])
        rows = [json.loads(line) for line in path.read_text().splitlines()]
        rows[1]["gender"] = "m"
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        with pytest.raises(ManifestError, match="s01"):
            load_manifest(path)

    def test_bad_transcript_names_the_utterance(self):
        with pytest.raises(ManifestError, match="s01_n01"):
            _record(transcript=("bin", "blue", "at", "W", "1", "now"))

    def test_missing_field_is_reported(self, tmp_path):
        path = tmp_path / "m.jsonl"
        row = _record().to_dict()
        del row["style"]
        path.write_text(json.dumps(row) + "\n")
        with pytest.raises(ManifestError, match="style"):
            load_manifest(path)

    def test_bad_json_reports_line_number(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps(_record().to_dict()) + "\n{oops\n")
        with pytest.raises(ManifestError, match="line 2"):
            load_manifest(path)

    def test_evaluable_speakers_flags_thin_ones(self):
        records = []
        for style, tag, count in (("lombard", "l", 5), ("non_lombard", "n", 5)):
            records += [_record(utt=f"ok_{tag}{j}", speaker="ok", gender="f",
                                style=style) for j in range(count)]
        for style, tag, count in (("lombard", "l", 2), ("non_lombard", "n", 5)):
            records += [_record(utt=f"thin_{tag}{j}", speaker="thin",
                                gender="m", style=style) for j in range(count)]
        evaluable, flagged = evaluable_speakers(records)
        assert evaluable == ["ok"]
        assert flagged == ["thin"]

    def test_corpus_scale_count(self):
        # 54 speakers, one of them too thin to analyse -> 53 evaluable
        records = []
        for i in range(54):
            speaker = f"s{i + 1:02d}"
            gender = "f" if i % 2 == 0 else "m"
            n_lombard = 1 if i == 17 else 5
            for style, tag, count in (("lombard", "l", n_lombard),
                                      ("non_lombard", "n", 5)):
                records += [_record(utt=f"{speaker}_{tag}{j}", speaker=speaker,
                                    gender=gender, style=style)
                            for j in range(count)]
        evaluable, flagged = evaluable_speakers(records)
        assert len(evaluable) == 53
        assert flagged == ["s18"]


def _speaker_records(speaker, gender, per_style, styles=("lombard",
                                                         "non_lombard")):
    records = []
    for style in styles:
        tag = "l" if style == "lombard" else "n"
        records += [_record(utt=f"{speaker}_{tag}{j:02d}", speaker=speaker,
                            gender=gender, style=style)
                    for j in range(per_style)]
    return records


class TestFolds:
    def test_fifty_utterance_speakers_split_35_5_10(self):
        records = (_speaker_records("s01", "f", 25)
                   + _speaker_records("s02", "m", 25))
        plan = make_folds(records, k=5, seed=0)
        assert plan.k == 5 and len(plan.folds) == 5
        for fold in plan.folds:
            for speaker in ("s01", "s02"):
                train = [u for u in fold.train if u.startswith(speaker)]
                val = [u for u in fold.validation if u.startswith(speaker)]
                test = [u for u in fold.test if u.startswith(speaker)]
                assert abs(len(train) - 35) <= 2
                assert abs(len(val) - 5) <= 2
                assert abs(len(test) - 10) <= 2
                assert len(train) + len(val) + len(test) == 50

    def test_test_blocks_partition_each_speaker(self):
        records = _speaker_records("s01", "f", 12)
        plan = make_folds(records, k=4, seed=3)
        all_ids = {r.utterance_id for r in records}
        seen = []
        for fold in plan.folds:
            assert set(fold.train).isdisjoint(fold.test)
            assert set(fold.validation).isdisjoint(fold.test)
            assert set(fold.train).isdisjoint(fold.validation)
            seen.extend(fold.test)
        assert sorted(seen) == sorted(all_ids)  # disjoint and covering

    def test_each_split_keeps_both_styles(self):
        records = (_speaker_records("s01", "f", 6)
                   + _speaker_records("s02", "m", 6))
        plan = make_folds(records, k=2, seed=1)
        by_id = {r.utterance_id: r for r in records}
        for fold in plan.folds:
            for part in (fold.train, fold.validation, fold.test):
                styles = {by_id[u].style for u in part}
                assert styles == {"lombard", "non_lombard"}

    def test_deterministic_per_seed(self):
        records = _speaker_records("s01", "f", 10)
        assert make_folds(records, k=5, seed=4) == make_folds(records, k=5,
                                                              seed=4)
        assert make_folds(records, k=5, seed=4) != make_folds(records, k=5,
                                                              seed=5)

    def test_thin_speaker_demoted_to_train_only(self):
        records = (_speaker_records("s01", "f", 10)
                   + _speaker_records("s02", "m", 2, styles=("lombard",)))
        plan = make_folds(records, k=5, seed=0)
        assert plan.train_only_speakers == ("s02",)
        for fold in plan.folds:
            assert not any(u.startswith("s02") for u in fold.test)
            assert not any(u.startswith("s02") for u in fold.validation)
            assert sum(u.startswith("s02") for u in fold.train) == 2

    def test_round_trip(self, tmp_path):
        plan = make_folds(_speaker_records("s01", "f", 10), k=5, seed=2)
        path = tmp_path / "folds.json"
        save_fold_plan(path, plan)
        assert load_fold_plan(path) == plan

    def test_rejects_degenerate_inputs(self):
        with pytest.raises(ValueError, match="folds"):
            make_folds(_speaker_records("s01", "f", 5), k=1)
        with pytest.raises(ValueError, match="records"):
            make_folds([], k=2)


class TestConditions:
    def test_matrix_has_twelve_distinct_systems(self):
        matrix = condition_matrix()
        names = [s.name for s in matrix]
        assert len(matrix) == 12
        assert len(set(names)) == 12
        for name in ("VO-L", "AO-NL", "AV-L(w)", "AV-NL"):
            assert name in names

    def test_narrow_grid_is_the_lombard_range(self):
        assert NARROW_SNRS_DB == (-20, -15, -10, -5, 0, 5)

    def test_wide_lombard_system_mixes_styles_by_snr(self):
        pairs = system_by_name("AV-L(w)").training_pairs()
        assert pairs == (
            tuple(("lombard", snr) for snr in (-20, -15, -10, -5, 0, 5))
            + tuple(("non_lombard", snr) for snr in (10, 15, 20, 25, 30)))

    def test_wide_plain_system_trains_plain_everywhere(self):
        pairs = system_by_name("AO-NL(w)").training_pairs()
        assert len(pairs) == 11
        assert all(style == "non_lombard" for style, _ in pairs)

    def test_narrow_systems_train_their_style_on_the_narrow_grid(self):
        pairs = system_by_name("AO-L").training_pairs()
        assert pairs == tuple(("lombard", snr) for snr in NARROW_SNRS_DB)

    def test_evaluation_pairs(self):
        narrow = evaluation_pairs("narrow")
        assert narrow == tuple(("lombard", snr) for snr in NARROW_SNRS_DB)
        wide = evaluation_pairs("wide")
        assert wide[:6] == narrow
        assert wide[6:] == tuple(("non_lombard", snr)
                                 for snr in (10, 15, 20, 25, 30))

    def test_unknown_system_is_an_error(self):
        with pytest.raises(ValueError, match="AV-L"):
            system_by_name("AV-X")


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    manifest = make_corpus(root, n_speakers=2, utterances_per_style=3,
                           duration_s=1.0, seed=0)
    return root, load_manifest(manifest)


class TestSyntheticCorpus:
    def test_layout_and_counts(self, corpus):
        root, records = corpus
        assert len(records) == 2 * 2 * 3
        speakers = {r.speaker_id: r.gender for r in records}
        assert speakers == {"s01": "f", "s02": "m"}
        for record in records:
            assert (root / record.audio_path).exists()
            assert (root / record.frames_path).exists()
            assert (root / record.landmarks_path).exists()

    def test_video_is_25_fps_uint8(self, corpus):
        root, records = corpus
        frames, fps = load_video(root / records[0].frames_path)
        assert fps == 25
        assert frames.shape == (25, 32, 32)
        assert frames.dtype == np.uint8
        assert frames.std() > 0  # the mouth actually moves

    def test_lombard_exaggerates_mouth_and_f0(self, corpus):
        root, records = corpus
        by_style = {"lombard": [], "non_lombard": []}
        f0_by_style = {"lombard": [], "non_lombard": []}
        for record in records:
            if record.speaker_id != "s01":
                continue
            marks = read_landmarks(root / record.landmarks_path)
            by_style[record.style].append(mouth_metrics(marks))
            f0 = estimate_f0(read_wav(root / record.audio_path))
            assert f0 is not None
            f0_by_style[record.style].append(f0)
        ma_l = np.mean([m[0] for m in by_style["lombard"]])
        ma_n = np.mean([m[0] for m in by_style["non_lombard"]])
        ms_l = np.mean([m[1] for m in by_style["lombard"]])
        ms_n = np.mean([m[1] for m in by_style["non_lombard"]])
        assert ma_l > ma_n and ms_l > ms_n
        delta_f0 = (np.mean(f0_by_style["lombard"])
                    - np.mean(f0_by_style["non_lombard"]))
        assert 25.0 < delta_f0 < 55.0  # synthesizer raises F0 by 40 Hz

    def test_corpus_is_deterministic(self, corpus, tmp_path):
        root, records = corpus
        again_root = tmp_path / "again"
        manifest = make_corpus(again_root, n_speakers=2,
                               utterances_per_style=3, duration_s=1.0, seed=0)
        again = load_manifest(manifest)
        assert [r.to_dict() for r in again] == [r.to_dict() for r in records]
        first = records[0]
        original = (root / first.audio_path).read_bytes()
        rebuilt = (again_root / first.audio_path).read_bytes()
        assert original == rebuilt

    def test_different_seed_changes_content(self, corpus, tmp_path):
        root, records = corpus
        other_root = tmp_path / "other"
        other = load_manifest(make_corpus(
            other_root, n_speakers=2, utterances_per_style=3,
            duration_s=1.0, seed=1))
        assert [r.transcript for r in other] != [r.transcript for r in records]

    def test_speaker_profiles_alternate_and_stay_in_range(self):
        profiles = speaker_profiles(8)
        assert [p["gender"] for p in profiles] == list("fmfmfmfm")
        assert len({p["speaker_id"] for p in profiles}) == 8
        assert all(50.0 <= p["f0_hz"] <= 500.0 for p in profiles)

    def test_envelope_tracks_energy(self):
        quiet = synth_speechlike(0, 1.0)
        env = frame_envelope(quiet, 25)
        assert env.shape == (25,)
        assert env.min() >= 0.0 and env.max() == pytest.approx(1.0)

    def test_render_rejects_bad_size(self):
        audio = synth_speechlike(1, 0.4)
        with pytest.raises(ValueError, match="divide"):
            render_mouth_video(audio, "lombard", size=33)
