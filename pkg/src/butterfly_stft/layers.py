"""Trainable layers: sparse butterfly factors and the diagonal window."""

import numpy as np

from . import _kernels
from .autodiff import ParamTensor, _emit, conj, scale, value
from .butterfly import _root_of_unity, build_butterfly_stack, stage_backward, stage_forward
from .errors import ShapeError


def hann_window(n):
    """Periodic Hann window ``0.5 (1 - cos(2 pi i / n))``, exact at quarter turns."""
    return np.array([0.5 * (1.0 - _root_of_unity(i, n)[0]) for i in range(n)])


class TrainableWindow:
    """Diagonal window layer; no sign or overlap-add constraint is imposed."""

    def __init__(self, n, name="window", init="hann", trainable=True):
        if isinstance(init, str) and init == "hann":
            w = hann_window(n)
        elif isinstance(init, str) and init == "ones":
            w = np.ones(n)
        else:
            w = np.asarray(init, dtype=np.float64).copy()
            if w.shape != (n,):
                raise ShapeError(f"window init has shape {w.shape}, expected ({n},)")
        self.n = n
        self.w = ParamTensor(f"{name}.w", w, trainable)

    @property
    def params(self):
        return [self.w]


class TrainableButterfly:
    """A butterfly stack whose factor values are exposed as parameters.

    Each ``ParamTensor`` shares storage with its factor, so updating the
    parameter updates the stack used by ``butterfly.apply_forward``.
    """

    def __init__(self, n, name="fft", trainable=True):
        self.n = n
        self.stack = build_butterfly_stack(n)
        self.params = [
            ParamTensor(f"{name}.stage{f.stage}", f.values, trainable)
            for f in self.stack.factors
        ]

    def set_trainable(self, flag):
        for p in self.params:
            p.trainable = bool(flag)


def sparse_backward(factor, x, grad_out):
    """Backward rule of ``sparse_forward`` from the saved stacked input ``x``.

    Returns ``(grad_values, grad_x)``.
    """
    gv, gr, gi = stage_backward(factor, x[0], x[1], grad_out[0], grad_out[1])
    return gv, np.stack([gr, gi])


def sparse_forward(factor, param, x, tape=None):
    """Apply one stacked-diagonal factor to complex data ``x`` of shape ``[2, ..., n]``."""
    xv = value(x)
    if xv.shape[0] != 2 or xv.shape[-1] != factor.n:
        raise ShapeError(f"expected [2, ..., {factor.n}] input, got {xv.shape}")
    yr, yi = stage_forward(factor, xv[0], xv[1])

    def backward(g):
        gv, gx = sparse_backward(factor, xv, g)
        return gv, gx

    return _emit(tape, (param, x), np.stack([yr, yi]), backward)


def butterfly_forward(layer, x, tape=None):
    """Bit-reversal then every factor, stage 1 first, recorded as one tape entry.

    Every stage's input is kept for the backward pass.
    """
    xv = value(x)
    n = layer.n
    if xv.shape[0] != 2 or xv.shape[-1] != n:
        raise ShapeError(f"expected [2, ..., {n}] input, got {xv.shape}")
    factors = layer.stack.factors
    perm = layer.stack.permutation
    acts = np.empty((len(factors) + 1, 2, xv[0].size // n, n))
    acts[0] = xv.reshape(2, -1, n)[..., perm]
    for k, f in enumerate(factors):
        _kernels.stage_forward(f.values, f.half, acts[k, 0], acts[k, 1], acts[k + 1, 0], acts[k + 1, 1])

    def backward(g):
        g = np.array(g, dtype=np.float64).reshape(acts.shape[1:])
        gx = np.empty_like(g)
        grads = [None] * len(factors)
        for k in range(len(factors) - 1, -1, -1):
            f = factors[k]
            gv = np.zeros_like(f.values)
            _kernels.stage_backward(f.values, f.half, acts[k, 0], acts[k, 1], g[0], g[1], gv, gx[0], gx[1])
            grads[k] = gv
            g, gx = gx, g
        out = np.empty_like(g)
        out[..., perm] = g
        return [out.reshape(xv.shape)] + grads

    return _emit(tape, (x, *layer.params), acts[-1].reshape(xv.shape), backward)


def butterfly_inverse(layer, X, tape=None):
    """``conj(forward(conj(X))) / n`` through this layer's own parameters."""
    z = butterfly_forward(layer, conj(X, tape), tape)
    return scale(conj(z, tape), 1.0 / layer.n, tape)


def window_forward(win, frames, tape=None):
    """Multiply real frames ``[..., n]`` by the window."""
    fv, wv = value(frames), win.w.values
    if fv.shape[-1] != win.n:
        raise ShapeError(f"frame length {fv.shape[-1]} != window length {win.n}")
    lead = tuple(range(fv.ndim - 1))
    return _emit(tape, (win.w, frames), fv * wv,
                 lambda g: (np.sum(g * fv, axis=lead), g * wv))
