"""scikit-learn style wrappers around the transform and the enhancement model."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import autodiff as ad
from ._validation import check_power_of_two, check_signal_batch
from .errors import ShapeError
from .metrics import SsnrConfig, ssnr
from .stft import BackEnd, FrontEnd, analyze, check_hop, synthesize
from .training import Dataset, LossConfig, TrainConfig, train


class ButterflySTFT(TransformerMixin, BaseEstimator):
    """Short-time transform built on the butterfly FFT, at its exact initialization.

    ``transform`` maps signals ``(n_signals, L)`` to complex frames
    ``(n_signals, T, n)``; ``inverse_transform`` overlap-adds them back.
    With the default Hann analysis, hop ``n/2`` and unit synthesis window
    the round trip is exact away from the first and last half frame.
    """

    def __init__(self, n=256, hop=None, window="hann", synthesis_window="ones"):
        self.n = n
        self.hop = hop
        self.window = window
        self.synthesis_window = synthesis_window

    def fit(self, X, y=None):
        X = check_signal_batch(X)
        self.n_ = check_power_of_two(self.n)
        self.hop_ = check_hop(self.n_, self.n_ // 2 if self.hop is None else self.hop)
        if X.shape[1] < self.n_:
            raise ShapeError(f"signals of {X.shape[1]} samples are shorter than one frame of {self.n_}")
        self.front_ = FrontEnd(self.n_, self.window, trainable=False)
        self.back_ = BackEnd(self.n_, self.synthesis_window, trainable=False)
        self.n_samples_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "front_")
        X = check_signal_batch(X)
        z = analyze(self.front_, ad.frame(X, self.n_, self.hop_)).value
        return z[0] + 1j * z[1]

    def inverse_transform(self, Z, length=None):
        check_is_fitted(self, "back_")
        Z = np.asarray(Z, dtype=np.complex128)
        if Z.ndim == 2:
            Z = Z[np.newaxis]
        T = Z.shape[1]
        length = (T - 1) * self.hop_ + self.n_ if length is None else int(length)
        return synthesize(self.back_, np.stack([Z.real, Z.imag]), self.hop_, length).value


class ButterflyEnhancer(BaseEstimator):
    """Mask-based enhancer with trainable windows and butterfly transforms.

    ``fit(X, y)`` trains on noisy signals ``X`` against clean targets ``y``
    (equal shape, one row per clip).  ``trainable_window`` and
    ``trainable_fft`` select the ablation arm.
    """

    def __init__(self, n=256, hop=None, hidden_size=60, learning_rate=1e-3, beta1=0.9, beta2=0.999,
                 batch_size=4, max_steps=2000, random_state=0, trainable_window=True,
                 trainable_fft=True, alpha=0.3, lam=0.1):
        self.n = n
        self.hop = hop
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.batch_size = batch_size
        self.max_steps = max_steps
        self.random_state = random_state
        self.trainable_window = trainable_window
        self.trainable_fft = trainable_fft
        self.alpha = alpha
        self.lam = lam

    def _train_config(self, length):
        return TrainConfig(
            learning_rate=self.learning_rate, beta1=self.beta1, beta2=self.beta2,
            batch_size=self.batch_size, max_steps=self.max_steps, seed=self.random_state,
            train_window_analysis=self.trainable_window, train_window_synthesis=self.trainable_window,
            train_fft_forward=self.trainable_fft, train_fft_inverse=self.trainable_fft,
            n=self.n, hop=self.hop, d=self.hidden_size, crop_seconds=float(length), sample_rate=1,
        )

    def fit(self, X, y):
        X = check_signal_batch(X)
        y = check_signal_batch(y, name="y")
        if X.shape != y.shape:
            raise ShapeError(f"X {X.shape} and y {y.shape} must have the same shape")
        check_power_of_two(self.n)
        dataset = Dataset(list(y), list(X), premixed=True)
        result = train(self._train_config(X.shape[1]), dataset, LossConfig(self.alpha, self.lam))
        self.model_ = result.model
        self.loss_curve_ = np.asarray(result.loss_curve)
        self.initial_loss_ = result.initial_loss
        self.final_loss_ = result.final_loss
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_signal_batch(X)
        return self.model_.enhance(X)

    def transform(self, X):
        return self.predict(X)

    def score(self, X, y):
        """Mean segmental SNR (dB) of the enhanced ``X`` against clean ``y``."""
        est = self.predict(X)
        y = check_signal_batch(y, name="y")
        cfg = SsnrConfig()
        return float(np.mean([ssnr(c, e, cfg) for c, e in zip(y, est)]))
