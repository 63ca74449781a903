"""Compressed spectral loss, Adam, SNR mixing and the training loop."""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .butterfly import SplitComplexBuffer
from .errors import DegenerateSignalError, NumericError, ShapeError, TrainingDivergedError
from .model import EnhancementModel
from .stft import FrontEnd, analyze

log = logging.getLogger(__name__)

TRAIN_SNRS_DB = (0.0, 5.0, 10.0, 15.0)
EVAL_SNRS_DB = (2.5, 7.5, 12.5, 17.5)


@dataclass
class LossConfig:
    alpha: float = 0.3
    lam: float = 0.1
    epsilon: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 4
    max_steps: int = 2000
    seed: int = 0
    train_window_analysis: bool = True
    train_window_synthesis: bool = True
    train_fft_forward: bool = True
    train_fft_inverse: bool = True
    n: int = 256
    hop: int = None
    d: int = 60
    crop_seconds: float = 1.0
    sample_rate: int = 16000
    snr_db: tuple = TRAIN_SNRS_DB
    analysis_init: str = "hann"
    synthesis_init: str = "ones"

    @property
    def trainable_flags(self):
        return {
            "window_analysis": self.train_window_analysis,
            "window_synthesis": self.train_window_synthesis,
            "fft_forward": self.train_fft_forward,
            "fft_inverse": self.train_fft_inverse,
        }

    def build_model(self):
        model = EnhancementModel(n=self.n, hop=self.hop, d=self.d, seed=self.seed,
                                 analysis_init=self.analysis_init, synthesis_init=self.synthesis_init)
        model.set_trainable(**self.trainable_flags)
        return model


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


# loss ----------------------------------------------------------------------

def complex_compress(Y, alpha, epsilon=1e-8):
    """``|Y|^alpha * exp(j angle(Y))`` with magnitude ``sqrt(re^2 + im^2 + eps^2)``."""
    m = np.sqrt(Y.re ** 2 + Y.im ** 2 + epsilon ** 2)
    s = m ** (alpha - 1.0)
    return SplitComplexBuffer(s * Y.re, s * Y.im)


def _compressed_parts(z, alpha, eps):
    re, im = z[0], z[1]
    m = np.sqrt(re * re + im * im + eps * eps)
    ma = m ** alpha
    s = ma / m
    return re, im, m, ma, s


def loss(Y_hat, Y, cfg=None, tape=None):
    """Magnitude-compressed MSE plus ``lam`` times complex-compressed MSE.

    Both spectra are ``[2, ...]`` stacked arrays.  Sums run over every bin
    and frame and are divided by the number of complex elements.
    """
    cfg = cfg or LossConfig()
    yh = ad.value(Y_hat)
    y = ad.value(Y)
    if yh.shape != y.shape or yh.shape[0] != 2:
        raise ShapeError(f"loss needs two equal [2, ...] spectra, got {yh.shape} and {y.shape}")
    if not (np.all(np.isfinite(yh)) and np.all(np.isfinite(y))):
        raise NumericError("loss input contains NaN or Inf")
    a, lam, eps = cfg.alpha, cfg.lam, cfg.epsilon
    count = yh[0].size
    hr, hi, hm, hma, hs = _compressed_parts(yh, a, eps)
    _, _, _, tma, ts = _compressed_parts(y, a, eps)
    dmag = hma - tma
    dre = hs * hr - ts * y[0]
    dim = hs * hi - ts * y[1]
    total = (np.sum(dmag * dmag) + lam * (np.sum(dre * dre) + np.sum(dim * dim))) / count

    def backward(g):
        g = float(g) * 2.0 / count
        # d(m^a)/dx = a m^(a-2) x ; d(m^(a-1) x)/dx = m^(a-1) + (a-1) m^(a-3) x^2
        k = a * hma / (hm * hm)
        q = (a - 1.0) * hs / (hm * hm)
        cross = q * hr * hi
        g_re = dmag * k * hr + lam * (dre * (hs + q * hr * hr) + dim * cross)
        g_im = dmag * k * hi + lam * (dim * (hs + q * hi * hi) + dre * cross)
        return (g * np.stack([g_re, g_im]), None)

    return ad._emit(tape, (Y_hat, Y), np.array(total), backward)


# data ----------------------------------------------------------------------

def mix_at_snr(speech, noise, snr_db):
    """``speech + g * noise`` with ``g`` chosen so the mean-square ratio is exact."""
    speech = np.asarray(speech, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if speech.shape != noise.shape:
        raise ShapeError(f"speech {speech.shape} and noise {noise.shape} differ in shape")
    ps = np.mean(speech ** 2)
    pn = np.mean(noise ** 2)
    if ps == 0 or pn == 0:
        raise DegenerateSignalError("speech and noise must both have nonzero power")
    g = np.sqrt(ps / (pn * 10.0 ** (snr_db / 10.0)))
    return speech + g * noise


@dataclass
class Dataset:
    """Paired training signals.

    ``other`` holds noise recordings when ``premixed`` is false and noisy
    mixtures when it is true.
    """

    clean: list
    other: list
    premixed: bool = False
    snr_db: tuple = TRAIN_SNRS_DB

    def __post_init__(self):
        if len(self.clean) != len(self.other) or not self.clean:
            raise ShapeError("dataset needs the same nonzero number of clean and noise/noisy clips")
        for c, o in zip(self.clean, self.other):
            if np.shape(c) != np.shape(o):
                raise ShapeError(f"paired clips differ in length: {np.shape(c)} vs {np.shape(o)}")

    def __len__(self):
        return len(self.clean)

    def noisy(self, i, snr_db):
        if self.premixed:
            return np.asarray(self.other[i], dtype=np.float64)
        return mix_at_snr(self.clean[i], self.other[i], snr_db)


def reference_front(n):
    """Fixed Hann window and exact FFT used to score every arm identically."""
    return FrontEnd(n, "hann", name="reference", trainable=False)


def compute_targets(clean, reference, hop, tape=None):
    """Spectra ``[2, ..., T, n]`` of time signals under the fixed reference analysis."""
    frames = ad.frame(clean, reference.n, hop, tape)
    return analyze(reference, frames, tape)


def signal_loss(estimate, clean, reference, hop, cfg=None, tape=None):
    """Loss between the reference spectra of an estimate and of the clean signal."""
    Y = compute_targets(np.asarray(clean, dtype=np.float64), reference, hop).value
    Y_hat = compute_targets(estimate, reference, hop, tape)
    return loss(Y_hat, Y, cfg, tape)


# optimisation --------------------------------------------------------------

def adam_step(params, state, cfg):
    """One bias-corrected Adam update of every trainable parameter, in place."""
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p in params:
        if not p.trainable:
            continue
        g = p.grad
        m = state.m.setdefault(p.name, np.zeros_like(p.values))
        v = state.v.setdefault(p.name, np.zeros_like(p.values))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.values -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_epsilon)


@dataclass
class TrainResult:
    model: EnhancementModel
    loss_curve: list
    initial_loss: float
    final_loss: float


def _crop_length(dataset, cfg):
    shortest = min(len(c) for c in dataset.clean)
    crop = int(round(cfg.crop_seconds * cfg.sample_rate))
    return max(min(crop, shortest), cfg.n)


def dataset_loss(model, dataset, loss_cfg=None, snr_db=None):
    """Mean loss over every clip, clip ``i`` mixed at ``snr_db[i % len]``."""
    snrs = dataset.snr_db if snr_db is None else snr_db
    ref = reference_front(model.n)
    total = 0.0
    for i in range(len(dataset)):
        noisy = dataset.noisy(i, snrs[i % len(snrs)])
        est = model.forward(noisy)
        total += float(signal_loss(est, dataset.clean[i], ref, model.hop, loss_cfg).value)
    return total / len(dataset)


def train(config, dataset, loss_cfg=None, model=None, on_step=None):
    """Fit the model on ``dataset``; deterministic for a given config and seed.

    Every step draws ``batch_size`` clips (reshuffled each epoch), one SNR
    per clip from ``dataset.snr_db`` and one crop offset per clip, then
    runs forward, loss, backward and Adam.  ``on_step(step, loss)`` is
    called after each update.
    """
    loss_cfg = loss_cfg or LossConfig()
    model = model if model is not None else config.build_model()
    params = model.params
    ref = reference_front(model.n)
    rng = np.random.default_rng(config.seed)
    crop = _crop_length(dataset, config)
    state = AdamState()

    initial = dataset_loss(model, dataset, loss_cfg)
    curve = []
    order = []
    for step in range(config.max_steps):
        noisy, clean = [], []
        for _ in range(min(config.batch_size, len(dataset))):
            if not order:
                order = list(rng.permutation(len(dataset)))
            i = order.pop()
            snr = dataset.snr_db[rng.integers(len(dataset.snr_db))]
            mix = dataset.noisy(i, snr)
            off = int(rng.integers(0, len(mix) - crop + 1))
            noisy.append(mix[off:off + crop])
            clean.append(np.asarray(dataset.clean[i][off:off + crop], dtype=np.float64))
        noisy, clean = np.stack(noisy), np.stack(clean)

        ad.zero_grad(params)
        tape = ad.Tape()
        try:
            out = model.forward(noisy, tape)
            value = signal_loss(out, clean, ref, model.hop, loss_cfg, tape)
        except NumericError as exc:
            raise TrainingDivergedError(step) from exc
        lv = float(value.value)
        if not np.isfinite(lv):
            raise TrainingDivergedError(step)
        tape.backward(value)
        adam_step(params, state, config)
        curve.append(lv)
        if on_step is not None:
            on_step(step, lv)
        if step % 100 == 0:
            log.info("step %d loss %.6f", step, lv)

    final = dataset_loss(model, dataset, loss_cfg) if config.max_steps else initial
    return TrainResult(model, curve, initial, final)


def write_loss_csv(path, curve):
    with open(path, "w") as fh:
        fh.write("step,loss\n")
        for i, v in enumerate(curve):
            fh.write(f"{i},{v!r}\n")
