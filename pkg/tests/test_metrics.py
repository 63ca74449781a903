import numpy as np
import pytest

from butterfly_stft.errors import ShapeError, UndefinedMetricError
from butterfly_stft.metrics import LOG_FLOOR, SsnrConfig, frame_snrs, spectral_diag, ssnr
from butterfly_stft.stft import FrontEnd


def test_config_validation():
    with pytest.raises(ValueError):
        SsnrConfig(floor_db=10, ceil_db=10)
    with pytest.raises(ValueError):
        SsnrConfig(frame_len=0)


def test_perfect_estimate_hits_ceiling():
    x = np.random.default_rng(0).standard_normal(2048)
    assert ssnr(x, x) == 35.0


def test_zero_estimate_is_zero_db():
    x = np.random.default_rng(1).standard_normal(2048)
    assert ssnr(x, np.zeros_like(x)) == pytest.approx(0.0, abs=1e-12)


def test_exact_per_frame_snr():
    # non-overlapping frames so the injected error in each frame is exactly controlled
    cfg = SsnrConfig(frame_len=256, hop=256)
    rng = np.random.default_rng(2)
    clean = rng.standard_normal(256 * 8)
    err = rng.standard_normal(clean.size)
    for f in range(8):
        sl = slice(256 * f, 256 * (f + 1))
        err[sl] *= np.sqrt(np.sum(clean[sl] ** 2) / np.sum(err[sl] ** 2) / 100.0)
    assert ssnr(clean, clean + err, cfg) == pytest.approx(20.0, abs=0.1)


def test_default_convention_with_overlap():
    rng = np.random.default_rng(3)
    clean = rng.standard_normal(4096)
    est = clean + 0.1 * rng.standard_normal(4096)
    per = frame_snrs(clean, est)
    assert per.size == (4096 - 256) // 128 + 1
    assert ssnr(clean, est) == pytest.approx(np.mean(per))


def test_silent_frames_are_skipped():
    clean = np.zeros(1024)
    clean[512:] = np.random.default_rng(4).standard_normal(512)
    per = frame_snrs(clean, clean)
    assert np.isnan(per[:3]).all()
    assert ssnr(clean, clean) == 35.0


def test_errors():
    with pytest.raises(ShapeError):
        ssnr(np.ones(300), np.ones(301))
    with pytest.raises(ShapeError):
        ssnr(np.ones(100), np.ones(100))
    with pytest.raises(UndefinedMetricError):
        ssnr(np.zeros(512), np.ones(512))


def test_clipping_floor():
    clean = np.random.default_rng(5).standard_normal(1024)
    assert ssnr(clean, clean + 100 * clean) == -10.0


def test_spectral_diag():
    ref = FrontEnd(64, "ones", trainable=False)
    silent = spectral_diag(np.zeros(256), ref)
    np.testing.assert_allclose(silent, np.log(LOG_FLOOR), rtol=1e-14)
    t = np.arange(256)
    tone = np.cos(2 * np.pi * 5 * t / 64)
    diag = spectral_diag(tone, ref)
    others = np.delete(diag, [5, 59])
    assert diag[5] - others.max() >= np.log(10.0)  # >= 20 dB in amplitude
    x = np.random.default_rng(6).standard_normal(512)
    np.testing.assert_allclose(spectral_diag(10 * x, ref) - spectral_diag(x, ref), np.log(10.0), atol=1e-9)
