"""Causal masking network: linear, GRU, linear, sigmoid."""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import autodiff as ad
from .autodiff import ParamTensor
from .butterfly import SplitComplexBuffer
from .errors import ShapeError

GATES = ("z", "r", "h")


@dataclass
class MaskNetParams:
    n: int
    d: int
    linear1_W: ParamTensor
    linear1_b: ParamTensor
    gru_W: dict
    gru_U: dict
    gru_b: dict
    linear2_W: ParamTensor
    linear2_b: ParamTensor

    @property
    def params(self):
        out = [self.linear1_W, self.linear1_b]
        for g in GATES:
            out += [self.gru_W[g], self.gru_U[g], self.gru_b[g]]
        return out + [self.linear2_W, self.linear2_b]

    def count(self):
        return sum(p.size for p in self.params)


@dataclass
class GruState:
    h: np.ndarray

    @classmethod
    def zeros(cls, d):
        return cls(np.zeros(d))


def init_masknet(n, d, seed=0, zero=False):
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.

    ``zero=True`` gives all-zero weights, for which every mask is exactly 0.5.
    """
    if n < 1 or d < 1:
        raise ShapeError(f"n and d must be positive, got n={n}, d={d}")
    rng = np.random.default_rng(seed)

    def weight(name, rows, cols):
        if zero:
            w = np.zeros((rows, cols))
        else:
            bound = 1.0 / np.sqrt(rows)
            w = rng.uniform(-bound, bound, size=(rows, cols))
        return ParamTensor(name, w)

    def bias(name, size):
        return ParamTensor(name, np.zeros(size))

    l1W = weight("masknet.linear1.W", 2 * n, d)
    l1b = bias("masknet.linear1.b", d)
    W, U, b = {}, {}, {}
    for g in GATES:
        W[g] = weight(f"masknet.gru.W_{g}", d, d)
        U[g] = weight(f"masknet.gru.U_{g}", d, d)
        b[g] = bias(f"masknet.gru.b_{g}", d)
    l2W = weight("masknet.linear2.W", d, 2 * n)
    l2b = bias("masknet.linear2.b", 2 * n)
    return MaskNetParams(n, d, l1W, l1b, W, U, b, l2W, l2b)


def gru_step(params, x, state):
    """One GRU update with reset applied before the candidate's recurrent matmul."""
    W = {g: params.gru_W[g].values for g in GATES}
    U = {g: params.gru_U[g].values for g in GATES}
    b = {g: params.gru_b[g].values for g in GATES}
    x = np.asarray(x, dtype=np.float64)
    h = state.h
    if x.shape[-1] != W["z"].shape[0] or h.shape[-1] != U["z"].shape[0]:
        raise ShapeError(f"gru_step: input {x.shape}, state {h.shape}, hidden size {params.d}")
    z = expit(x @ W["z"] + h @ U["z"] + b["z"])
    r = expit(x @ W["r"] + h @ U["r"] + b["r"])
    c = np.tanh(x @ W["h"] + (r * h) @ U["h"] + b["h"])
    return GruState((1.0 - z) * h + z * c)


def gru_sequence(params, x, tape=None):
    """Run the GRU over ``x[..., T, d]`` from a zero state; returns all states."""
    xv = ad.value(x)
    d = params.d
    if xv.shape[-1] != d:
        raise ShapeError(f"GRU input width {xv.shape[-1]} != hidden size {d}")
    lead = xv.shape[:-2]
    T = xv.shape[-2]
    X = xv.reshape(-1, T, d)
    B = X.shape[0]
    W = {g: params.gru_W[g].values for g in GATES}
    U = {g: params.gru_U[g].values for g in GATES}
    bias = {g: params.gru_b[g].values for g in GATES}
    proj = {g: X @ W[g] + bias[g] for g in GATES}

    hs = np.zeros((B, T + 1, d))
    Z = np.empty((B, T, d))
    R = np.empty((B, T, d))
    C = np.empty((B, T, d))
    h = hs[:, 0]
    for t in range(T):
        z = expit(proj["z"][:, t] + h @ U["z"])
        r = expit(proj["r"][:, t] + h @ U["r"])
        c = np.tanh(proj["h"][:, t] + (r * h) @ U["h"])
        h = (1.0 - z) * h + z * c
        Z[:, t], R[:, t], C[:, t], hs[:, t + 1] = z, r, c, h

    def backward(G):
        G = G.reshape(B, T, d)
        dA = {g: np.empty((B, T, d)) for g in GATES}
        dU = {g: np.zeros((d, d)) for g in GATES}
        dh = np.zeros((B, d))
        for t in range(T - 1, -1, -1):
            dh = dh + G[:, t]
            hp, z, r, c = hs[:, t], Z[:, t], R[:, t], C[:, t]
            dz = dh * (c - hp)
            dhp = dh * (1.0 - z)
            dah = dh * z * (1.0 - c * c)
            dU["h"] += (r * hp).T @ dah
            drh = dah @ U["h"].T
            dhp += drh * r
            dar = drh * hp * r * (1.0 - r)
            dU["r"] += hp.T @ dar
            dhp += dar @ U["r"].T
            daz = dz * z * (1.0 - z)
            dU["z"] += hp.T @ daz
            dhp += daz @ U["z"].T
            dA["h"][:, t], dA["r"][:, t], dA["z"][:, t] = dah, dar, daz
            dh = dhp
        X2 = X.reshape(-1, d)
        dX = sum(dA[g] @ W[g].T for g in GATES).reshape(xv.shape)
        grads = [dX]
        grads += [X2.T @ dA[g].reshape(-1, d) for g in GATES]
        grads += [dU[g] for g in GATES]
        grads += [dA[g].reshape(-1, d).sum(axis=0) for g in GATES]
        return grads

    inputs = (x,) + tuple(params.gru_W[g] for g in GATES) + tuple(params.gru_U[g] for g in GATES) \
        + tuple(params.gru_b[g] for g in GATES)
    return ad._emit(tape, inputs, hs[:, 1:].reshape(lead + (T, d)), backward)


def masknet_forward(params, coeffs, tape=None):
    """Masks for complex coefficients ``[2, ..., T, n]``.

    Returns a ``Var`` of shape ``[2, ..., T, n]``: index 0 is the real mask,
    index 1 the imaginary mask, all values in (0, 1).
    """
    cv = ad.value(coeffs)
    if cv.shape[0] != 2 or cv.shape[-1] != params.n:
        raise ShapeError(f"coefficients must be [2, ..., T, {params.n}], got {cv.shape}")
    x = ad.stack_complex(coeffs, tape)
    x = ad.linear(x, params.linear1_W, params.linear1_b, tape)
    x = gru_sequence(params, x, tape)
    x = ad.linear(x, params.linear2_W, params.linear2_b, tape)
    return ad.split_complex(ad.sigmoid(x, tape), tape)


def apply_masks(coeffs, M_r, M_i):
    """Independent real and imaginary gains (not a complex product)."""
    M_r = np.asarray(M_r, dtype=np.float64)
    M_i = np.asarray(M_i, dtype=np.float64)
    if coeffs.re.shape != M_r.shape or coeffs.im.shape != M_i.shape:
        raise ShapeError(f"mask shapes {M_r.shape}/{M_i.shape} != coefficient shape {coeffs.re.shape}")
    return SplitComplexBuffer(coeffs.re * M_r, coeffs.im * M_i)
