"""Framing, trainable analysis, masked synthesis and overlap-add."""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from ._validation import check_power_of_two, check_signal
from .errors import ShapeError, TooShortError
from .layers import TrainableButterfly, TrainableWindow, butterfly_forward, butterfly_inverse, window_forward


@dataclass
class FrameMatrix:
    """Frames ``[T, n]`` of a signal; frame ``f`` covers ``[f*hop, f*hop + n)``."""

    n: int
    hop: int
    frames: np.ndarray
    source_length: int

    @property
    def count(self):
        return self.frames.shape[0]


def check_hop(n, hop):
    if isinstance(hop, bool) or not isinstance(hop, (int, np.integer)) or not 1 <= hop <= n:
        raise ShapeError(f"hop must be an integer in [1, {n}], got {hop!r}")
    return int(hop)


def frame_signal(x, n, hop):
    x = check_signal(x)
    hop = check_hop(n, hop)
    if x.size < n:
        raise TooShortError(f"signal of {x.size} samples is shorter than one frame of {n}")
    return FrameMatrix(n=n, hop=hop, frames=ad.frame(x, n, hop).value, source_length=x.size)


class FrontEnd:
    """Trainable analysis window followed by the trainable forward FFT."""

    def __init__(self, n=256, window_init="hann", name="front", trainable=True):
        self.n = check_power_of_two(n)
        self.analysis_window = TrainableWindow(self.n, f"{name}.window", window_init, trainable)
        self.forward_fft = TrainableButterfly(self.n, f"{name}.fft", trainable)

    @property
    def params(self):
        return self.analysis_window.params + self.forward_fft.params


class BackEnd:
    """Trainable inverse FFT followed by the synthesis window.

    The inverse stack is built independently of any front end, so the two
    never share parameter storage.
    """

    def __init__(self, n=256, window_init="ones", name="back", trainable=True):
        self.n = check_power_of_two(n)
        self.synthesis_window = TrainableWindow(self.n, f"{name}.window", window_init, trainable)
        self.inverse_fft = TrainableButterfly(self.n, f"{name}.fft", trainable)

    @property
    def params(self):
        return self.inverse_fft.params + self.synthesis_window.params


def analyze(front, frames, tape=None):
    """Window and transform real frames ``[..., T, n]``.

    Returns a complex ``Var`` of shape ``[2, ..., T, n]``.
    """
    if isinstance(frames, FrameMatrix):
        frames = frames.frames
    fv = ad.value(frames)
    if fv.shape[-1] != front.n:
        raise ShapeError(f"frame length {fv.shape[-1]} != transform size {front.n}")
    win = window_forward(front.analysis_window, frames, tape)
    return butterfly_forward(front.forward_fft, ad.real_to_complex(win, tape), tape)


def synthesize(back, coeffs, hop, out_length, tape=None):
    """Inverse transform, keep the real part, window, and overlap-add.

    ``coeffs`` is ``[2, ..., T, n]``; the result is ``[..., out_length]``.
    """
    cv = ad.value(coeffs)
    if cv.shape[0] != 2 or cv.shape[-1] != back.n:
        raise ShapeError(f"coefficients must be [2, ..., T, {back.n}], got {cv.shape}")
    T = cv.shape[-2]
    if (T - 1) * hop + back.n > out_length:
        raise ShapeError(f"out_length {out_length} is shorter than the last frame end {(T - 1) * hop + back.n}")
    frames = ad.real_part(butterfly_inverse(back.inverse_fft, coeffs, tape), tape)
    frames = window_forward(back.synthesis_window, frames, tape)
    return ad.overlap_add(frames, hop, out_length, tape)


def inverse_residue(back, coeffs):
    """RMS of the imaginary part that ``synthesize`` discards."""
    z = butterfly_inverse(back.inverse_fft, coeffs)
    return float(np.sqrt(np.mean(z.value[1] ** 2)))


def enhance_signal(front, back, masknet, x, hop, mask_override=None, tape=None):
    """Frame, analyze, mask, synthesize.

    ``x`` may be ``[L]`` or a batch ``[B, L]``.  ``mask_override`` replaces
    the mask network's output by a constant (used to probe the transform
    path alone).  Frame ``t`` only sees frames ``<= t``.
    """
    from .masknet import masknet_forward

    xv = ad.value(x)
    n = front.n
    if xv.shape[-1] < n:
        raise TooShortError(f"signal of {xv.shape[-1]} samples is shorter than one frame of {n}")
    hop = check_hop(n, hop)
    frames = ad.frame(x, n, hop, tape)
    coeffs = analyze(front, frames, tape)
    if mask_override is None:
        masks = masknet_forward(masknet, coeffs, tape)
    else:
        masks = np.full(coeffs.value.shape, float(mask_override))
    masked = ad.mul(coeffs, masks, tape)
    return synthesize(back, masked, hop, xv.shape[-1], tape)
