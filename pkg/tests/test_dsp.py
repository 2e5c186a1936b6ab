import numpy as np
import pytest

from lombardse.dsp import (
    ComplexSpectrogram,
    DegenerateSignalError,
    StftConfig,
    Waveform,
    interior_reconstruction_snr,
    istft,
    peak_normalize,
    stft,
)


def test_waveform_rejects_nan():
    with pytest.raises(ValueError):
        Waveform(np.array([0.0, np.nan]))


def test_waveform_rejects_bad_rate():
    with pytest.raises(ValueError):
        Waveform(np.zeros(10), sample_rate=0)


def test_peak_normalize_simple():
    out = peak_normalize(Waveform(np.array([0.5, -0.25])))
    assert np.allclose(out.samples, [1.0, -0.5])


def test_peak_normalize_idempotent():
    rng = np.random.default_rng(0)
    w = Waveform(rng.standard_normal(1000))
    once = peak_normalize(w)
    twice = peak_normalize(once)
    assert np.array_equal(once.samples, twice.samples)
    assert abs(once.peak() - 1.0) < 1e-12


def test_peak_normalize_zero_raises():
    with pytest.raises(DegenerateSignalError):
        peak_normalize(Waveform(np.zeros(100)))


def test_config_defaults():
    cfg = StftConfig()
    assert cfg.fft_size == 640
    assert cfg.window_length == 640
    assert cfg.hop == 160
    assert cfg.retained_bins == 321


def test_config_rejects_bad_plan():
    with pytest.raises(ValueError):
        StftConfig(fft_size=512, window_length=640, hop=160)


@pytest.mark.parametrize("n,expected", [
    (640, 1),
    (799, 1),
    (800, 2),
    (16000, 97),   # floor((16000-640)/160)+1
    (639, 0),
    (32000, 197),
])
def test_frame_count_rule(n, expected):
    assert StftConfig().frame_count(n) == expected


def test_stft_one_second_gives_97_frames():
    w = Waveform(np.random.default_rng(1).standard_normal(16000))
    s = stft(w)
    assert s.bins.shape == (321, 97)


def test_stft_zero_signal_is_zero():
    s = stft(Waveform(np.zeros(3200)))
    assert np.all(s.bins == 0)


def test_stft_too_short_raises():
    with pytest.raises(DegenerateSignalError):
        stft(Waveform(np.zeros(639)))


def test_stft_sinusoid_peaks_at_bin_25():
    # bin k center frequency = k * fs / fft_size = 25 * 16000 / 640 = 625 Hz
    t = np.arange(16000) / 16000.0
    w = Waveform(0.8 * np.sin(2 * np.pi * 625.0 * t))
    mag = stft(w).magnitude()
    assert np.all(np.argmax(mag, axis=0) == 25)


def test_stft_linearity():
    rng = np.random.default_rng(2)
    x = Waveform(rng.standard_normal(8000))
    y = Waveform(rng.standard_normal(8000))
    a, b = 0.7, -1.3
    combined = stft(Waveform(a * x.samples + b * y.samples)).bins
    separate = a * stft(x).bins + b * stft(y).bins
    scale = np.max(np.abs(separate))
    assert np.max(np.abs(combined - separate)) / scale < 1e-10


def test_istft_round_trip_interior():
    rng = np.random.default_rng(3)
    for _ in range(5):
        w = Waveform(rng.standard_normal(16000))
        rec = istft(stft(w), length=len(w))
        assert interior_reconstruction_snr(w, rec) >= 60.0


def test_istft_zero_spectrogram_is_zero():
    cfg = StftConfig()
    s = ComplexSpectrogram(np.zeros((321, 10), dtype=complex), cfg)
    out = istft(s)
    assert np.all(out.samples == 0)


def test_istft_empty_raises():
    s = ComplexSpectrogram(np.zeros((321, 0), dtype=complex), StftConfig())
    with pytest.raises(DegenerateSignalError):
        istft(s)


def test_istft_length_pads_and_trims():
    w = Waveform(np.random.default_rng(4).standard_normal(3200))
    s = stft(w)
    assert len(istft(s, length=3200)) == 3200
    assert len(istft(s, length=5000)) == 5000
    assert len(istft(s, length=1000)) == 1000


def test_spectrogram_shape_validation():
    with pytest.raises(ValueError):
        ComplexSpectrogram(np.zeros((100, 5), dtype=complex), StftConfig())
