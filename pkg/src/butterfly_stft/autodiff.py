"""Small reverse-mode differentiation engine.

Only what the enhancement model needs: a tape with one entry per layer,
trainable parameter tensors, and a handful of array operations with
hand-written backward rules.  Complex quantities inside the tape are real
arrays whose first axis is ``[re, im]``; real and imaginary parts are
independent real variables throughout.

Every op takes an optional ``tape``.  Without one the op just computes its
value, which is how inference and finite-difference probes run.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ShapeError, TapeError


class ParamTensor:
    """A named trainable array and its accumulated gradient.

    ``values`` is used as given (no copy) so a tensor can share storage with
    the object it parameterizes.  Gradients never accumulate into a tensor
    whose ``trainable`` flag is off.
    """

    def __init__(self, name, values, trainable=True):
        values = np.asarray(values)
        if values.dtype != np.float64:
            values = values.astype(np.float64)
        self.name = name
        self.values = values
        self.grad = np.zeros_like(values)
        self.trainable = bool(trainable)

    @property
    def shape(self):
        return list(self.values.shape)

    @property
    def size(self):
        return int(self.values.size)

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        flag = "" if self.trainable else ", frozen"
        return f"ParamTensor({self.name!r}, shape={self.shape}{flag})"


class Var:
    """An intermediate value recorded on a tape."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = value
        self.grad = None

    @property
    def shape(self):
        return self.value.shape


class Tape:
    """Ordered record of operations for one forward/backward pair."""

    def __init__(self):
        self._entries = []

    def __len__(self):
        return len(self._entries)

    def record(self, inputs, output, backward):
        self._entries.append((inputs, output, backward))

    def backward(self, output, grad=None):
        """Propagate ``grad`` (default 1 for a scalar) from ``output``.

        Parameter gradients are added to ``ParamTensor.grad``.  The tape is
        emptied afterwards, so each recorded forward is consumed exactly once.
        """
        if not self._entries:
            raise TapeError("backward called on an empty tape")
        if grad is None:
            if np.size(output.value) != 1:
                raise TapeError("an explicit gradient is required for non-scalar outputs")
            grad = np.ones_like(output.value)
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != np.shape(output.value):
            raise ShapeError(f"seed gradient shape {grad.shape} != output shape {np.shape(output.value)}")
        output.grad = grad
        try:
            for inputs, out, fn in reversed(self._entries):
                if out.grad is None:
                    continue
                for inp, g in zip(inputs, fn(out.grad)):
                    _accumulate(inp, g)
        finally:
            for _, out, _ in self._entries:
                out.grad = None
            self._entries.clear()


def _accumulate(target, g):
    if g is None:
        return
    if isinstance(target, ParamTensor):
        if target.trainable:
            target.grad += g
    elif isinstance(target, Var):
        target.grad = g if target.grad is None else target.grad + g


def value(x):
    if isinstance(x, Var):
        return x.value
    if isinstance(x, ParamTensor):
        return x.values
    return np.asarray(x, dtype=np.float64)


def _emit(tape, inputs, out_value, backward):
    out = Var(out_value)
    if tape is not None:
        tape.record(inputs, out, backward)
    return out


def zero_grad(params):
    for p in params:
        p.zero_grad()


# elementwise ---------------------------------------------------------------

def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    g = g.sum(axis=tuple(range(extra))) if extra else g
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    return g.sum(axis=axes, keepdims=True) if axes else g


def add(a, b, tape=None):
    av, bv = value(a), value(b)
    return _emit(tape, (a, b), av + bv,
                 lambda g: (_unbroadcast(g, av.shape), _unbroadcast(g, bv.shape)))


def sub(a, b, tape=None):
    av, bv = value(a), value(b)
    return _emit(tape, (a, b), av - bv,
                 lambda g: (_unbroadcast(g, av.shape), -_unbroadcast(g, bv.shape)))


def mul(a, b, tape=None):
    av, bv = value(a), value(b)
    return _emit(tape, (a, b), av * bv,
                 lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def scale(a, c, tape=None):
    return _emit(tape, (a,), value(a) * c, lambda g: (g * c,))


def sigmoid(a, tape=None):
    y = expit(value(a))
    return _emit(tape, (a,), y, lambda g: (g * y * (1.0 - y),))


def tanh(a, tape=None):
    y = np.tanh(value(a))
    return _emit(tape, (a,), y, lambda g: (g * (1.0 - y * y),))


def matvec(W, x, tape=None):
    """``x @ W`` over the last axis of ``x``; ``W`` is ``[in, out]``."""
    Wv, xv = value(W), value(x)
    if xv.shape[-1] != Wv.shape[0]:
        raise ShapeError(f"input width {xv.shape[-1]} != weight rows {Wv.shape[0]}")

    def backward(g):
        x2 = xv.reshape(-1, Wv.shape[0])
        g2 = g.reshape(-1, Wv.shape[1])
        return x2.T @ g2, g @ Wv.T

    return _emit(tape, (W, x), xv @ Wv, backward)


def linear(x, W, b, tape=None):
    """Affine map ``x @ W + b`` over the last axis."""
    Wv, bv, xv = value(W), value(b), value(x)
    if xv.shape[-1] != Wv.shape[0] or bv.shape != (Wv.shape[1],):
        raise ShapeError(f"linear: input {xv.shape}, weight {Wv.shape}, bias {bv.shape}")

    def backward(g):
        x2 = xv.reshape(-1, Wv.shape[0])
        g2 = g.reshape(-1, Wv.shape[1])
        return g @ Wv.T, x2.T @ g2, g2.sum(axis=0)

    return _emit(tape, (x, W, b), xv @ Wv + bv, backward)


def sum_all(a, tape=None):
    av = value(a)
    return _emit(tape, (a,), np.array(av.sum()), lambda g: (np.full(av.shape, float(g)),))


# complex layout ------------------------------------------------------------

def real_to_complex(x, tape=None):
    xv = value(x)
    return _emit(tape, (x,), np.stack([xv, np.zeros_like(xv)]), lambda g: (g[0],))


def real_part(z, tape=None):
    zv = value(z)
    return _emit(tape, (z,), zv[0].copy(), lambda g: (np.stack([g, np.zeros_like(g)]),))


def conj(z, tape=None):
    zv = value(z)
    sign = np.array([1.0, -1.0]).reshape((2,) + (1,) * (zv.ndim - 1))
    return _emit(tape, (z,), zv * sign, lambda g: (g * sign,))


def permute(z, perm, tape=None):
    """Reorder the last axis; the backward pass is the inverse index map."""
    zv = value(z)

    def backward(g):
        out = np.empty_like(g)
        out[..., perm] = g
        return (out,)

    return _emit(tape, (z,), zv[..., perm], backward)


def stack_complex(z, tape=None):
    """``[2, ..., n]`` to ``[..., 2n]``: real part first, imaginary part after."""
    zv = value(z)
    n = zv.shape[-1]
    out = np.concatenate([zv[0], zv[1]], axis=-1)
    return _emit(tape, (z,), out, lambda g: (np.stack([g[..., :n], g[..., n:]]),))


def split_complex(m, tape=None):
    """Inverse of ``stack_complex``."""
    mv = value(m)
    if mv.shape[-1] % 2:
        raise ShapeError("split_complex needs an even trailing length")
    n = mv.shape[-1] // 2
    out = np.stack([mv[..., :n], mv[..., n:]])
    return _emit(tape, (m,), out, lambda g: (np.concatenate([g[0], g[1]], axis=-1),))


# framing -------------------------------------------------------------------

def frame_count(length, n, hop):
    return (length - n) // hop + 1


def _frame(x, n, hop):
    T = frame_count(x.shape[-1], n, hop)
    idx = np.arange(T)[:, None] * hop + np.arange(n)
    return x[..., idx]


def _overlap_add(frames, hop, length):
    T, n = frames.shape[-2:]
    out = np.zeros(frames.shape[:-2] + (length,))
    for f in range(T):
        out[..., f * hop: f * hop + n] += frames[..., f, :]
    return out


def frame(x, n, hop, tape=None):
    """Overlapping frames ``[..., T, n]`` of ``x[..., L]``; trailing remainder dropped."""
    xv = value(x)
    L = xv.shape[-1]
    return _emit(tape, (x,), _frame(xv, n, hop), lambda g: (_overlap_add(g, hop, L),))


def overlap_add(frames, hop, length, tape=None):
    fv = value(frames)
    T, n = fv.shape[-2:]
    if (T - 1) * hop + n > length:
        raise ShapeError(f"output length {length} is shorter than the last frame end {(T - 1) * hop + n}")
    return _emit(tape, (frames,), _overlap_add(fv, hop, length), lambda g: (_frame(g, n, hop)[..., :T, :],))


# verification --------------------------------------------------------------

@dataclass
class GradCheckResult:
    max_rel_error: float
    worst: tuple
    analytic: dict
    numeric: dict


def finite_diff_check(f, params, eps=1e-6, atol=1e-8, coords=None):
    """Compare tape gradients of a scalar function with central differences.

    ``f(tape)`` must rebuild the computation from the current parameter
    values and return a scalar ``Var``.  ``coords`` optionally restricts the
    probe to ``{param_name: [flat indices]}``.  Frozen parameters are not
    probed and report an all-zero analytic gradient.

    The per-coordinate error is 0 when ``|a - n| <= atol`` and
    ``|a - n| / max(|a|, |n|)`` otherwise.
    """
    zero_grad(params)
    tape = Tape()
    out = f(tape)
    tape.backward(out)
    analytic = {p.name: p.grad.copy() for p in params}
    numeric = {}
    worst_err, worst = 0.0, None
    for p in params:
        if not p.trainable:
            continue
        flat = p.values.reshape(-1)
        idxs = range(flat.size) if coords is None else coords.get(p.name, ())
        num = np.full(flat.size, np.nan)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + eps
            fp = float(value(f(None)))
            flat[i] = orig - eps
            fm = float(value(f(None)))
            flat[i] = orig
            num[i] = (fp - fm) / (2.0 * eps)
            a = analytic[p.name].reshape(-1)[i]
            diff = abs(a - num[i])
            err = 0.0 if diff <= atol else diff / max(abs(a), abs(num[i]))
            if err > worst_err or worst is None:
                worst_err, worst = max(err, worst_err), (p.name, int(i))
        numeric[p.name] = num.reshape(p.values.shape)
    return GradCheckResult(worst_err, worst, analytic, numeric)
