import numpy as np
import pytest

from lombardse.dsp import StftConfig, Waveform, interior_reconstruction_snr, stft
from lombardse.masking import (
    AmplitudeMask,
    OracleIamEstimator,
    UnitMaskEstimator,
    apply_mask,
    enhance_utterance,
    ideal_amplitude_mask,
    iam_from_magnitudes,
    mask_loss,
    segment_count,
    segment_spectrogram_frames,
    segment_video_frames,
)
from lombardse.noise import fit_lpc, generate_ssn, mix_at_snr, synth_speechlike

FS = 16000


def _mixture(seed: int, snr_db: float = 0.0, duration: float = 1.0):
    clean = synth_speechlike(seed=seed, duration_s=duration)
    model = fit_lpc(synth_speechlike(seed=seed + 1000, duration_s=2.0))
    noise = generate_ssn(model, duration + 1.0, seed=seed + 2000)
    noisy = mix_at_snr(clean, noise, snr_db, seed=seed + 3000)
    return clean, noisy


def test_iam_is_ones_when_clean_equals_noisy():
    clean, _ = _mixture(1)
    spec = stft(clean)
    mask = ideal_amplitude_mask(spec, spec)
    assert np.allclose(mask.values, 1.0)


def test_iam_clipping_case():
    assert iam_from_magnitudes(np.array([[5.0]]), np.array([[0.1]]))[0, 0] == 10.0


def test_iam_simple_ratio():
    assert iam_from_magnitudes(np.array([[1.0]]), np.array([[2.0]]))[0, 0] == 0.5


def test_iam_zero_denominator_maps_to_ceiling():
    out = iam_from_magnitudes(np.array([[1.0, 0.0]]), np.array([[0.0, 0.0]]))
    assert np.array_equal(out, [[10.0, 10.0]])


def test_iam_always_within_bounds():
    clean, noisy = _mixture(2, snr_db=-20.0)
    mask = ideal_amplitude_mask(stft(clean), stft(noisy))
    assert np.all(mask.values >= 0.0)
    assert np.all(mask.values <= 10.0)


def test_iam_shape_mismatch_raises():
    clean, _ = _mixture(3)
    spec = stft(clean)
    short = stft(Waveform(clean.samples[: FS // 2]))
    with pytest.raises(ValueError):
        ideal_amplitude_mask(spec, short)


def test_mask_validation():
    with pytest.raises(ValueError):
        AmplitudeMask(np.array([[-0.1]]))
    with pytest.raises(ValueError):
        AmplitudeMask(np.array([[np.inf]]))
    raw = AmplitudeMask(np.array([[50.0]]))  # raw outputs may exceed the ceiling
    assert not raw.is_bounded()
    assert raw.clipped().values[0, 0] == 10.0


def test_mask_loss_zero_iff_equal():
    rng = np.random.default_rng(4)
    m = np.abs(rng.standard_normal((321, 20)))
    assert mask_loss(m, m) == 0.0
    bumped = m.copy()
    bumped[5, 5] += 1e-6
    assert mask_loss(m, bumped) > 0.0


def test_mask_loss_hand_arithmetic():
    # 1x2 masks [1,1] vs [0,2]: ((1-0)^2 + (1-2)^2) / 2 = 1.0
    assert mask_loss(np.array([[1.0, 1.0]]), np.array([[0.0, 2.0]])) == 1.0


def test_mask_loss_shape_mismatch():
    with pytest.raises(ValueError):
        mask_loss(np.ones((2, 2)), np.ones((2, 3)))


def test_apply_unit_mask_is_identity():
    _, noisy = _mixture(5)
    spec = stft(noisy)
    out = apply_mask(AmplitudeMask(np.ones(spec.bins.shape)), spec)
    assert np.array_equal(out.bins, spec.bins)


def test_apply_zero_mask_is_zero():
    _, noisy = _mixture(6)
    spec = stft(noisy)
    out = apply_mask(AmplitudeMask(np.zeros(spec.bins.shape)), spec)
    assert np.all(out.bins == 0)


def test_apply_mask_preserves_phase():
    _, noisy = _mixture(7)
    spec = stft(noisy)
    rng = np.random.default_rng(8)
    mask = AmplitudeMask(np.abs(rng.standard_normal(spec.bins.shape)))
    out = apply_mask(mask, spec)
    nz = (np.abs(spec.bins) > 0) & (mask.values > 0)
    assert np.allclose(np.angle(out.bins[nz]), np.angle(spec.bins[nz]))


def test_iam_application_algebra():
    # |masked Y| must equal min(|X|, 10|Y|) cell-wise
    clean, noisy = _mixture(9, snr_db=-5.0)
    x, y = stft(clean), stft(noisy)
    out = apply_mask(ideal_amplitude_mask(x, y), y)
    expected = np.minimum(x.magnitude(), 10.0 * y.magnitude())
    assert np.allclose(out.magnitude(), expected)


def test_segment_bookkeeping_97_frames():
    # 4 full 20-frame segments plus a 17-frame tail -> 5 segments
    assert segment_count(97) == 5
    segs = segment_spectrogram_frames(np.ones((321, 97)))
    assert segs.shape == (5, 321, 20)
    assert np.all(segs[4, :, 17:] == 0.0)  # zero-padded tail
    assert np.all(segs[4, :, :17] == 1.0)


def test_segment_video_repeats_last_frame():
    frames = np.arange(23)[:, None, None] * np.ones((1, 4, 4))
    segs = segment_video_frames(frames, n_segments=5)
    assert segs.shape == (5, 5, 4, 4)
    assert np.all(segs[4, 3:] == 22.0)  # frames 23, 24 repeat frame 22


def test_unit_mask_estimator_round_trips_noisy():
    _, noisy = _mixture(10)
    out = enhance_utterance(UnitMaskEstimator(), noisy)
    assert len(out) == len(noisy)
    assert interior_reconstruction_snr(noisy, out) >= 60.0


def test_vo_estimator_without_video_raises():
    _, noisy = _mixture(11)
    est = UnitMaskEstimator(modality="vo")
    with pytest.raises(ValueError):
        enhance_utterance(est, noisy)


def test_unknown_modality_raises():
    _, noisy = _mixture(12)
    with pytest.raises(ValueError):
        enhance_utterance(UnitMaskEstimator(modality="xx"), noisy)


def test_oracle_enhancement_improves_estoi_proxy():
    # At 0 dB the oracle mask should reduce time-domain error against clean;
    # the full ESTOI comparison lives in the metrics and acceptance suites.
    clean, noisy = _mixture(13, snr_db=0.0)
    enhanced = enhance_utterance(OracleIamEstimator(clean), noisy)
    lo, hi = 640, len(clean) - 640
    err_enh = np.mean((enhanced.samples[lo:hi] - clean.samples[lo:hi]) ** 2)
    err_noisy = np.mean((noisy.samples[lo:hi] - clean.samples[lo:hi]) ** 2)
    assert err_enh < 0.5 * err_noisy


def test_estimator_shape_mismatch_detected():
    class Bad:
        modality = "ao"
        def estimate(self, noisy_segments, video_segments=None):
            return noisy_segments[:, :, :5]
    _, noisy = _mixture(14)
    with pytest.raises(ValueError):
        enhance_utterance(Bad(), noisy)
