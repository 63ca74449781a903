import numpy as np
import pytest

from butterfly_stft import autodiff as ad
from butterfly_stft.autodiff import ParamTensor, finite_diff_check
from butterfly_stft.butterfly import SplitComplexBuffer, naive_dft
from butterfly_stft.errors import DegenerateSignalError, NumericError, ShapeError, TrainingDivergedError
from butterfly_stft.layers import hann_window
from butterfly_stft.model import ARMS, EnhancementModel
from butterfly_stft.training import (AdamState, Dataset, LossConfig, TrainConfig, adam_step, complex_compress,
                                     compute_targets, loss, mix_at_snr, reference_front, signal_loss, train,
                                     write_loss_csv)


def test_loss_config_validation():
    for bad in ({"alpha": 0.0}, {"alpha": 1.5}, {"lam": -1.0}, {"epsilon": 0.0}):
        with pytest.raises(ValueError):
            LossConfig(**bad)


def test_complex_compress_examples():
    y = complex_compress(SplitComplexBuffer(np.array([1.0]), np.array([0.0])), 0.3)
    assert y.re[0] == pytest.approx(1.0, abs=1e-15) and y.im[0] == 0.0
    y = complex_compress(SplitComplexBuffer(np.array([0.0]), np.array([4.0])), 0.5)
    assert y.re[0] == 0.0 and y.im[0] == pytest.approx(2.0, abs=1e-7)
    x = SplitComplexBuffer(np.array([0.3, -2.0]), np.array([1.5, 0.25]))
    y = complex_compress(x, 1.0)
    np.testing.assert_allclose(y.re, x.re, atol=1e-12)


def test_loss_examples():
    Y = np.random.default_rng(0).standard_normal((2, 3, 4))
    assert loss(Y, Y).value == 0.0
    one = np.array([[1.0], [0.0]])
    zero = np.zeros((2, 1))
    assert loss(zero, one, LossConfig(alpha=1.0, lam=0.0, epsilon=1e-12)).value == pytest.approx(1.0, abs=1e-11)


def test_loss_errors():
    with pytest.raises(ShapeError):
        loss(np.zeros((2, 3)), np.zeros((2, 4)))
    bad = np.zeros((2, 3))
    bad[0, 1] = np.nan
    with pytest.raises(NumericError):
        loss(bad, np.zeros((2, 3)))


@pytest.mark.parametrize("seed", range(5))
def test_loss_gradcheck(seed):
    rng = np.random.default_rng(seed)
    Yh = ParamTensor("Yh", rng.standard_normal((2, 3, 4)))
    Y = rng.standard_normal((2, 3, 4))
    assert finite_diff_check(lambda t: loss(Yh, Y, None, t), [Yh]).max_rel_error <= 1e-5


def test_loss_finite_at_zero_bins():
    Yh = ParamTensor("Yh", np.zeros((2, 2, 4)))
    Y = np.random.default_rng(1).standard_normal((2, 2, 4))
    tape = ad.Tape()
    out = loss(Yh, Y, None, tape)
    tape.backward(out)
    assert np.isfinite(out.value) and np.all(np.isfinite(Yh.grad))


def test_mix_at_snr():
    rng = np.random.default_rng(0)
    s = rng.standard_normal(1000)
    n = s * -1.0
    assert np.allclose(mix_at_snr(s, n, 0.0), 0.0)
    noise = rng.standard_normal(1000)
    noise *= np.sqrt(np.mean(s ** 2) / np.mean(noise ** 2))
    mixed = mix_at_snr(s, noise, 10.0)
    np.testing.assert_allclose(mixed - s, noise * 10 ** -0.5, rtol=1e-12)
    for snr in (-5.0, 0.0, 7.5, 15.0):
        mixed = mix_at_snr(s, noise, snr)
        measured = 10 * np.log10(np.mean(s ** 2) / np.mean((mixed - s) ** 2))
        assert abs(measured - snr) <= 1e-9


def test_mix_at_snr_errors():
    with pytest.raises(DegenerateSignalError):
        mix_at_snr(np.zeros(10), np.ones(10), 0.0)
    with pytest.raises(ShapeError):
        mix_at_snr(np.ones(10), np.ones(11), 0.0)


def test_adam_first_step():
    p = ParamTensor("p", np.array([0.0]))
    p.grad[:] = 0.5
    adam_step([p], AdamState(), TrainConfig())
    assert p.values[0] == pytest.approx(-9.99999980e-4, rel=1e-8)


def test_adam_zero_grad_and_frozen():
    p = ParamTensor("p", np.array([1.0, -2.0]))
    q = ParamTensor("q", np.array([3.0]), trainable=False)
    state = AdamState()
    for _ in range(5):
        q.grad[:] = 1.0
        adam_step([p, q], state, TrainConfig())
    assert p.values.tolist() == [1.0, -2.0]
    assert q.values.tolist() == [3.0]
    assert "q" not in state.m


def test_adam_against_reference_formula():
    rng = np.random.default_rng(3)
    p = ParamTensor("p", rng.standard_normal(4))
    theta = p.values.copy()
    m = np.zeros(4)
    v = np.zeros(4)
    state, cfg = AdamState(), TrainConfig(learning_rate=0.01)
    for t in range(1, 6):
        g = rng.standard_normal(4)
        p.grad[:] = g
        adam_step([p], state, cfg)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        theta = theta - 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    np.testing.assert_allclose(p.values, theta, rtol=1e-12)


def test_reference_targets():
    ref = reference_front(16)
    assert all(not p.trainable for p in ref.params)
    assert not compute_targets(np.zeros(64), ref, 8).value.any()
    x = np.random.default_rng(0).standard_normal(16)
    Y = compute_targets(x, ref, 8).value
    expected = naive_dft(hann_window(16) * x + 0j)
    np.testing.assert_allclose(Y[0, 0], expected.re, atol=1e-12)
    np.testing.assert_allclose(Y[1, 0], expected.im, atol=1e-12)
    assert signal_loss(x, x, ref, 8).value == 0.0


def test_arms_cover_the_four_flag_combinations():
    assert sorted(ARMS.values()) == [(False, False), (False, True), (True, False), (True, True)]


def test_checkpoint_parameter_groups():
    counts = EnhancementModel().parameter_counts()
    assert counts == {"fft": 16384, "window": 512, "masknet": 83792, "trainable": 16384 + 512 + 83792}


def _tiny_dataset(seed=0, count=3, length=96):
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    clean = [np.sin(2 * np.pi * (2 + i) * t / 16) for i in range(count)]
    noise = [rng.standard_normal(length) for _ in range(count)]
    return Dataset(clean, noise, snr_db=(0.0, 5.0))


def _tiny_config(**kw):
    base = dict(n=16, d=4, max_steps=5, batch_size=2, crop_seconds=64, sample_rate=1, seed=1)
    base.update(kw)
    return TrainConfig(**base)


def test_end_to_end_gradcheck_across_groups():
    rng = np.random.default_rng(11)
    model = EnhancementModel(n=8, hop=4, d=3, seed=4)
    for p in model.params:
        p.values += 0.05 * rng.standard_normal(p.values.shape)
    ref = reference_front(8)
    noisy = rng.standard_normal(16)
    clean = rng.standard_normal(16)
    params = model.params
    flat = [(p.name, i) for p in params for i in range(p.size)]
    picks = rng.choice(len(flat), 20, replace=False)
    coords = {}
    for k in picks:
        name, i = flat[k]
        coords.setdefault(name, []).append(i)
    groups = {name.split(".")[0] + "." + name.split(".")[1] for name in coords}
    f = lambda t: signal_loss(model.forward(noisy, t), clean, ref, 4, None, t)
    assert finite_diff_check(f, params, coords=coords).max_rel_error <= 1e-5
    # the sample must reach every parameter group; add one coordinate from any group it missed
    for group in ("front.window", "front.fft", "back.fft", "back.window", "masknet.linear1"):
        if group not in groups:
            name = next(p.name for p in params if p.name.startswith(group))
            assert finite_diff_check(f, params, coords={name: [1]}).max_rel_error <= 1e-5


def test_train_zero_learning_rate_constant_curve():
    # whole-clip crops, one SNR and full batches make every step see the same data
    data = _tiny_dataset()
    data.snr_db = (0.0,)
    res = train(_tiny_config(learning_rate=0.0, batch_size=3, crop_seconds=96), data)
    curve = np.array(res.loss_curve)
    assert len(curve) == 5
    np.testing.assert_allclose(curve, curve[0], rtol=1e-12)
    assert res.initial_loss == res.final_loss


def test_train_zero_steps_keeps_initialization():
    cfg = _tiny_config(max_steps=0)
    res = train(cfg, _tiny_dataset())
    init = cfg.build_model().state_dict()
    for k, v in res.model.state_dict().items():
        assert np.array_equal(v, init[k])


@pytest.mark.parametrize("arm", sorted(ARMS))
def test_frozen_groups_bit_identical(arm):
    window, fft = ARMS[arm]
    cfg = _tiny_config(train_window_analysis=window, train_window_synthesis=window,
                       train_fft_forward=fft, train_fft_inverse=fft)
    before = {k: v.copy() for k, v in cfg.build_model().state_dict().items()}
    after = train(cfg, _tiny_dataset()).model.state_dict()
    for name in before:
        changed = not np.array_equal(before[name], after[name])
        if ".window." in name:
            assert changed == window, name
        elif ".fft." in name:
            assert changed == fft, name
        elif name.startswith("masknet.") and name.endswith(".W"):
            assert changed, name


def test_train_is_deterministic():
    a = train(_tiny_config(), _tiny_dataset()).loss_curve
    b = train(_tiny_config(), _tiny_dataset()).loss_curve
    assert a == b


def test_train_detects_divergence():
    with pytest.raises(TrainingDivergedError):
        train(_tiny_config(learning_rate=float("nan")), _tiny_dataset())


def test_train_reduces_loss_on_tiny_set():
    res = train(_tiny_config(max_steps=60, learning_rate=5e-3), _tiny_dataset())
    assert res.final_loss < res.initial_loss


def test_write_loss_csv(tmp_path):
    path = tmp_path / "loss.csv"
    write_loss_csv(path, [0.5, 0.25])
    assert path.read_text() == "step,loss\n0,0.5\n1,0.25\n"
