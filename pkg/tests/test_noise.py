import numpy as np
import pytest
from scipy import signal

from lombardse.dsp import DegenerateSignalError, Waveform
from lombardse.noise import (
    LpcModel,
    MixSpec,
    NARROW_SNRS_DB,
    WIDE_SNRS_DB,
    fit_lpc,
    generate_ssn,
    load_lpc_model,
    mix_at_snr,
    noise_excerpt,
    save_lpc_model,
    snr_grid,
    snr_scale,
    synth_speechlike,
)

FS = 16000


def third_octave_levels_db(x: np.ndarray, fs: int, f_lo: float = 100.0,
                           f_hi: float = 7000.0) -> np.ndarray:
    """Average PSD level (dB) in 1/3-octave bands; for spectral-shape checks."""
    freqs, psd = signal.welch(x, fs=fs, nperseg=4096)
    centers = []
    f = f_lo
    while f <= f_hi:
        centers.append(f)
        f *= 2 ** (1 / 3)
    levels = []
    for c in centers:
        lo, hi = c / 2 ** (1 / 6), c * 2 ** (1 / 6)
        band = (freqs >= lo) & (freqs < hi)
        levels.append(10 * np.log10(np.mean(psd[band])))
    return np.array(levels)


def test_ar2_pole_recovery_within_one_percent():
    # AR(2) with conjugate poles r*exp(+-j*theta): a1 = 2r cos(theta), a2 = -r^2
    r, theta = 0.95, np.pi / 4
    a1, a2 = 2 * r * np.cos(theta), -r * r
    rng = np.random.default_rng(100)
    x = signal.lfilter([1.0], [1.0, -a1, -a2], rng.standard_normal(20 * FS))
    model = fit_lpc(Waveform(x), order=2, frame_length=4096, hop=2048)
    poles = np.roots(model.denominator())
    true_pole = r * np.exp(1j * theta)
    est = poles[np.argmin(np.abs(poles - true_pole))]
    assert abs(est - true_pole) / abs(true_pole) < 0.01


def test_white_noise_gives_flat_near_zero_model():
    rng = np.random.default_rng(101)
    model = fit_lpc(Waveform(rng.standard_normal(10 * FS)), order=12)
    assert np.max(np.abs(model.coefficients)) < 0.05
    freqs = np.linspace(100, 7000, 50)
    response = model.magnitude_response_db(freqs)
    assert response.max() - response.min() < 1.0


def test_fitted_model_tracks_reference_spectrum_shape():
    # Shape comparison (mean-aligned) in octave bands: wide enough that the
    # harmonic comb of the synthetic reference averages out of the band levels.
    ref = synth_speechlike(seed=5, duration_s=8.0)
    model = fit_lpc(ref, order=12)
    freqs, psd = signal.welch(ref.samples, fs=FS, nperseg=4096)
    model_psd = 10 ** (model.magnitude_response_db(freqs) / 10.0)
    edges = [150.0, 300.0, 600.0, 1200.0, 2400.0, 4800.0, 7000.0]
    dev = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        band = (freqs >= lo) & (freqs < hi)
        dev.append(10 * np.log10(np.mean(model_psd[band]) / np.mean(psd[band])))
    dev = np.array(dev)
    dev -= dev.mean()
    assert np.max(np.abs(dev)) < 3.0


def test_fit_lpc_preconditions():
    with pytest.raises(ValueError):
        fit_lpc(Waveform(np.ones(FS // 2)))  # under 1 s
    with pytest.raises(ValueError):
        fit_lpc(synth_speechlike(seed=0, duration_s=1.5), order=0)
    with pytest.raises(DegenerateSignalError):
        fit_lpc(Waveform(np.zeros(2 * FS)))
    with pytest.raises(ValueError):
        fit_lpc([Waveform(np.ones(FS)), Waveform(np.ones(FS), sample_rate=8000)])


def test_model_persistence_round_trip(tmp_path):
    model = fit_lpc(synth_speechlike(seed=6, duration_s=2.0), order=12)
    path = tmp_path / "ssn_model.json"
    save_lpc_model(model, path)
    loaded = load_lpc_model(path)
    assert loaded.order == model.order
    assert loaded.sample_rate == model.sample_rate
    assert np.allclose(loaded.coefficients, model.coefficients)
    assert np.isclose(loaded.gain, model.gain)


def test_ssn_determinism():
    model = fit_lpc(synth_speechlike(seed=7, duration_s=2.0))
    a = generate_ssn(model, 1.0, seed=42)
    b = generate_ssn(model, 1.0, seed=42)
    c = generate_ssn(model, 1.0, seed=43)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)
    assert len(a) == FS


def test_flat_model_yields_flat_noise():
    model = LpcModel(np.array([0.0]), gain=1.0, sample_rate=FS)
    ssn = generate_ssn(model, 10.0, seed=1)
    levels = third_octave_levels_db(ssn.samples, FS)
    assert np.max(np.abs(levels - levels.mean())) < 1.5


def test_unstable_model_refused():
    model = LpcModel(np.array([1.5]), gain=1.0, sample_rate=FS)  # pole at 1.5
    assert not model.is_stable()
    with pytest.raises(ValueError):
        generate_ssn(model, 1.0, seed=0)


def test_ssn_matches_model_spectrum_within_2db_per_band():
    model = fit_lpc(synth_speechlike(seed=8, duration_s=8.0), order=12)
    ssn = generate_ssn(model, 20.0, seed=9)
    ssn_levels = third_octave_levels_db(ssn.samples, FS)
    centers = 100.0 * 2 ** (np.arange(ssn_levels.size) / 3)
    model_levels = model.magnitude_response_db(centers)  # == 10*log10 |H|^2
    dev = model_levels - ssn_levels
    dev -= dev.mean()
    assert np.max(np.abs(dev)) < 2.0


def test_ssn_stationarity():
    model = fit_lpc(synth_speechlike(seed=10, duration_s=4.0), order=12)
    ssn = generate_ssn(model, 5.0, seed=11)
    half = len(ssn) // 2
    p1 = np.mean(ssn.samples[:half] ** 2)
    p2 = np.mean(ssn.samples[half:] ** 2)
    assert abs(10 * np.log10(p1 / p2)) < 1.0


def test_mix_exact_snr_at_zero_db():
    clean = synth_speechlike(seed=12, duration_s=1.0)
    model = fit_lpc(synth_speechlike(seed=13, duration_s=2.0))
    noise = generate_ssn(model, 3.0, seed=14)
    mixed = mix_at_snr(clean, noise, 0.0, seed=15)
    d = mixed.samples - clean.samples  # additive by construction
    p_clean, p_noise = np.mean(clean.samples ** 2), np.mean(d ** 2)
    assert abs(p_clean - p_noise) / p_clean < 1e-9


def test_mix_minus_20db_means_noise_100x():
    clean = synth_speechlike(seed=16, duration_s=1.0)
    model = fit_lpc(synth_speechlike(seed=17, duration_s=2.0))
    noise = generate_ssn(model, 2.0, seed=18)
    mixed = mix_at_snr(clean, noise, -20.0, seed=19)
    d = mixed.samples - clean.samples
    ratio = np.mean(d ** 2) / np.mean(clean.samples ** 2)
    assert abs(ratio - 100.0) / 100.0 < 1e-9


def test_mix_is_exactly_additive():
    clean = synth_speechlike(seed=20, duration_s=1.0)
    model = fit_lpc(synth_speechlike(seed=21, duration_s=2.0))
    noise = generate_ssn(model, 2.0, seed=22)
    mixed = mix_at_snr(clean, noise, 5.0, seed=23)
    d = noise_excerpt(noise, len(clean), seed=23)
    scale = snr_scale(clean, d, 5.0)
    assert np.array_equal(mixed.samples, clean.samples + scale * d.samples)


def test_mix_errors():
    clean = synth_speechlike(seed=24, duration_s=1.0)
    short_noise = Waveform(np.ones(100))
    with pytest.raises(ValueError):
        mix_at_snr(clean, short_noise, 0.0)
    with pytest.raises(DegenerateSignalError):
        mix_at_snr(Waveform(np.zeros(1000)), Waveform(np.ones(1000)), 0.0)
    with pytest.raises(DegenerateSignalError):
        mix_at_snr(Waveform(np.ones(1000)), Waveform(np.zeros(1000)), 0.0)
    with pytest.raises(ValueError):
        mix_at_snr(clean, Waveform(np.ones(2 * FS), sample_rate=8000), 0.0)


def test_snr_grids():
    assert snr_grid("narrow") == (-20, -15, -10, -5, 0, 5)
    assert snr_grid("wide") == (-20, -15, -10, -5, 0, 5, 10, 15, 20, 25, 30)
    assert NARROW_SNRS_DB == snr_grid("narrow")
    assert set(WIDE_SNRS_DB) - set(NARROW_SNRS_DB) == {10, 15, 20, 25, 30}
    with pytest.raises(ValueError):
        snr_grid("medium")


def test_mixspec_validation():
    MixSpec(snr_db=0.0, seed=1)
    with pytest.raises(ValueError):
        MixSpec(snr_db=float("inf"), seed=1)
    with pytest.raises(ValueError):
        MixSpec(snr_db=0.0, seed=1, noise_kind="babble")
    with pytest.raises(ValueError):
        MixSpec(snr_db=0.0, seed=1, speaking_style="shouting")


def test_synth_determinism_and_validation():
    a = synth_speechlike(seed=30, duration_s=0.5)
    b = synth_speechlike(seed=30, duration_s=0.5)
    assert np.array_equal(a.samples, b.samples)
    assert len(a) == FS // 2
    with pytest.raises(ValueError):
        synth_speechlike(seed=0, duration_s=0.5, f0_hz=40.0)
    with pytest.raises(ValueError):
        synth_speechlike(seed=0, duration_s=0.5, f0_hz=600.0)
    with pytest.raises(ValueError):
        synth_speechlike(seed=0, duration_s=0.0)
    with pytest.raises(ValueError):
        synth_speechlike(seed=0, duration_s=0.5, style="whisper")


def test_lombard_style_has_flatter_tilt():
    plain = synth_speechlike(seed=31, duration_s=2.0, f0_hz=150.0, style="non_lombard")
    loud = synth_speechlike(seed=31, duration_s=2.0, f0_hz=150.0, style="lombard")
    def high_low_ratio_db(w):
        freqs, psd = signal.welch(w.samples, fs=FS, nperseg=2048)
        hi = np.mean(psd[(freqs > 1000) & (freqs < 7000)])
        lo = np.mean(psd[(freqs > 100) & (freqs <= 1000)])
        return 10 * np.log10(hi / lo)
    assert high_low_ratio_db(loud) > high_low_ratio_db(plain) + 3.0
