"""The full enhancement network: trainable front end, mask net, back end."""

import numpy as np

from . import autodiff as ad
from ._validation import check_power_of_two
from .masknet import init_masknet, masknet_forward
from .stft import BackEnd, FrontEnd, analyze, check_hop, enhance_signal

# Table-1 style ablation arms: (trainable window, trainable FFT)
ARMS = {
    "fixed_window_fixed_fft": (False, False),
    "trainable_window_fixed_fft": (True, False),
    "fixed_window_trainable_fft": (False, True),
    "trainable_window_trainable_fft": (True, True),
}


class EnhancementModel:
    def __init__(self, n=256, hop=None, d=60, seed=0, analysis_init="hann",
                 synthesis_init="ones", zero_masknet=False):
        self.n = check_power_of_two(n)
        self.hop = check_hop(self.n, self.n // 2 if hop is None else hop)
        self.d = int(d)
        self.front = FrontEnd(self.n, analysis_init, name="front")
        self.back = BackEnd(self.n, synthesis_init, name="back")
        self.masknet = init_masknet(self.n, self.d, seed, zero=zero_masknet)

    @property
    def params(self):
        return self.front.params + self.back.params + self.masknet.params

    def named_params(self):
        return {p.name: p for p in self.params}

    def set_trainable(self, window_analysis=True, window_synthesis=True, fft_forward=True, fft_inverse=True):
        self.front.analysis_window.w.trainable = bool(window_analysis)
        self.back.synthesis_window.w.trainable = bool(window_synthesis)
        self.front.forward_fft.set_trainable(fft_forward)
        self.back.inverse_fft.set_trainable(fft_inverse)

    def parameter_counts(self):
        return {
            "fft": sum(p.size for p in self.front.forward_fft.params + self.back.inverse_fft.params),
            "window": self.front.analysis_window.w.size + self.back.synthesis_window.w.size,
            "masknet": self.masknet.count(),
            "trainable": sum(p.size for p in self.params if p.trainable),
        }

    def forward(self, noisy, tape=None, mask_override=None):
        """Enhanced waveforms ``[..., L]`` for noisy waveforms ``[..., L]``."""
        return enhance_signal(self.front, self.back, self.masknet, noisy, self.hop,
                              mask_override=mask_override, tape=tape)

    def enhance(self, noisy, mask_override=None):
        return self.forward(np.asarray(noisy, dtype=np.float64), mask_override=mask_override).value

    def masks(self, noisy):
        frames = ad.frame(np.asarray(noisy, dtype=np.float64), self.n, self.hop)
        return masknet_forward(self.masknet, analyze(self.front, frames)).value

    def state_dict(self):
        state = {p.name: p.values for p in self.params}
        state["config.n"] = np.array(float(self.n))
        state["config.hop"] = np.array(float(self.hop))
        state["config.d"] = np.array(float(self.d))
        return state

    @classmethod
    def from_state_dict(cls, state):
        n, hop, d = (int(state[f"config.{k}"]) for k in ("n", "hop", "d"))
        model = cls(n=n, hop=hop, d=d)
        model.load_state_dict(state)
        return model

    def load_state_dict(self, state):
        for p in self.params:
            src = np.asarray(state[p.name], dtype=np.float64)
            if src.shape != p.values.shape:
                raise ValueError(f"{p.name}: checkpoint shape {src.shape} != model shape {p.values.shape}")
            p.values[...] = src
