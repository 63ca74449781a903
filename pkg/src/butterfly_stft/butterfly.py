"""Radix-2 decimation-in-time FFT expressed as a stack of sparse factors.

An ``n``-point DFT is factored as ``W_m ... W_1 B_n`` where ``B_n`` is the
bit-reversal permutation and every ``W_k`` is a stacked-diagonal matrix with
exactly two nonzeros per row and per column::

    W_k = I_{n / 2^k}  kron  [[I, Omega], [I, -Omega]]

with ``Omega = diag(w^0, ..., w^{h-1})``, ``h = 2^(k-1)`` and
``w = exp(-2j*pi / 2^k)``.  The nonzero values of each factor are ordinary
float arrays so they can be trained; the sparsity pattern never changes.

All complex data is carried as split real/imaginary float64 arrays.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._validation import check_finite, check_length, check_power_of_two
from .errors import InvalidSizeError, InvalidStageError, ShapeError

MAX_DENSE_SIZE = 4096


@dataclass
class SplitComplexBuffer:
    """Complex values stored as two parallel real arrays.

    ``re`` and ``im`` may carry leading batch dimensions; the transform axis
    is always the last one.
    """

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        self.re = np.asarray(self.re, dtype=np.float64)
        self.im = np.asarray(self.im, dtype=np.float64)
        if self.re.shape != self.im.shape:
            raise ShapeError(f"re shape {self.re.shape} != im shape {self.im.shape}")

    @classmethod
    def from_complex(cls, z):
        z = np.asarray(z, dtype=np.complex128)
        return cls(z.real.copy(), z.imag.copy())

    @classmethod
    def from_real(cls, x):
        x = np.asarray(x, dtype=np.float64)
        return cls(x.copy(), np.zeros_like(x))

    @classmethod
    def from_stacked(cls, a):
        """Build from an array whose first axis is ``[re, im]``."""
        a = np.asarray(a, dtype=np.float64)
        return cls(a[0].copy(), a[1].copy())

    def to_complex(self):
        return self.re + 1j * self.im

    def stacked(self):
        return np.stack([self.re, self.im])

    def conj(self):
        return SplitComplexBuffer(self.re.copy(), -self.im)

    @property
    def shape(self):
        return self.re.shape

    def __len__(self):
        return self.re.shape[-1] if self.re.ndim else 1


@dataclass
class TwiddleDiagonal:
    """Diagonal of ``Omega_{L/2}``: the values ``exp(-2j*pi*k/L)``, k < L/2."""

    size: int
    values: SplitComplexBuffer


@dataclass
class StackedDiagonalMatrix:
    """One butterfly factor ``W_stage`` in coordinate form.

    Entries are sorted by row and, within a row, by column, so ``values``
    reshaped to ``(n, 2, 2)`` holds ``[row, entry, (re, im)]``.  Entry 0 of
    every row multiplies the upper element of its butterfly pair and entry 1
    the lower one.  ``rows`` and ``cols`` are read-only.
    """

    n: int
    stage: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @property
    def half(self):
        return 1 << (self.stage - 1)

    @property
    def entries(self):
        return [
            (int(r), int(c), complex(v[0], v[1]))
            for r, c, v in zip(self.rows, self.cols, self.values)
        ]

    def to_dense(self):
        dense = np.zeros((self.n, self.n), dtype=np.complex128)
        dense[self.rows, self.cols] = self.values[:, 0] + 1j * self.values[:, 1]
        return dense


@dataclass
class ButterflyStack:
    """Bit-reversal permutation followed by ``log2(n)`` sparse factors.

    ``factors[0]`` is applied first.  The permutation is never trainable.
    """

    n: int
    permutation: np.ndarray
    factors: list = field(default_factory=list)

    @property
    def n_stages(self):
        return len(self.factors)


class MacCounter:
    """Tally of complex multiply-accumulates performed by ``apply_forward``."""

    def __init__(self):
        self.count = 0

    def add(self, k):
        self.count += int(k)

    def reset(self):
        self.count = 0


def bit_reversal_permutation(n):
    n = check_power_of_two(n)
    bits = n.bit_length() - 1
    idx = np.arange(n)
    out = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        out |= ((idx >> b) & 1) << (bits - 1 - b)
    return out


def _root_of_unity(k, L):
    """exp(-2j*pi*k/L) with exact values on the quarter turns."""
    k %= L
    if L % 4:
        # L == 2: only k in {0, 1}
        return (1.0, 0.0) if k == 0 else (-1.0, 0.0)
    quarter = L // 4
    q, r = divmod(k, quarter)
    if r == 0:
        c, s = 1.0, 0.0
    else:
        theta = 2.0 * np.pi * r / L
        c, s = float(np.cos(theta)), -float(np.sin(theta))
    # each quarter turn multiplies by -j: (c, s) -> (s, -c)
    for _ in range(q):
        c, s = s, -c
    return c + 0.0, s + 0.0


def build_twiddle_diagonal(L):
    L = check_power_of_two(L, name="L")
    vals = np.array([_root_of_unity(k, L) for k in range(L // 2)], dtype=np.float64)
    return TwiddleDiagonal(size=L // 2, values=SplitComplexBuffer(vals[:, 0], vals[:, 1]))


def build_stage_matrix(n, k):
    n = check_power_of_two(n)
    m = n.bit_length() - 1
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= m:
        raise InvalidStageError(f"stage must be in 1..{m} for n={n}, got {k!r}")
    L = 1 << k
    h = L // 2
    tw = build_twiddle_diagonal(L).values
    rows = np.repeat(np.arange(n), 2)
    cols = np.empty(2 * n, dtype=np.int64)
    values = np.zeros((2 * n, 2), dtype=np.float64)
    for start in range(0, n, L):
        for p in range(h):
            top, bot = start + p, start + p + h
            w = (tw.re[p], tw.im[p])
            # upper row: x_top + w x_bot ; lower row: x_top - w x_bot
            cols[2 * top: 2 * top + 2] = (top, bot)
            values[2 * top] = (1.0, 0.0)
            values[2 * top + 1] = w
            cols[2 * bot: 2 * bot + 2] = (top, bot)
            values[2 * bot] = (1.0, 0.0)
            values[2 * bot + 1] = (-w[0] + 0.0, -w[1] + 0.0)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return StackedDiagonalMatrix(n=n, stage=int(k), rows=rows, cols=cols, values=values)


def build_butterfly_stack(n):
    n = check_power_of_two(n)
    m = n.bit_length() - 1
    perm = bit_reversal_permutation(n)
    perm.setflags(write=False)
    return ButterflyStack(n=n, permutation=perm, factors=[build_stage_matrix(n, k) for k in range(1, m + 1)])


def stage_forward(factor, re, im):
    """Multiply split-complex ``(re, im)`` by one factor along the last axis."""
    n = factor.n
    xr, xi = _kernels.as_matrix(re, n), _kernels.as_matrix(im, n)
    yr, yi = np.empty_like(xr), np.empty_like(xi)
    _kernels.stage_forward(factor.values, factor.half, xr, xi, yr, yi)
    return yr.reshape(np.shape(re)), yi.reshape(np.shape(im))


def stage_backward(factor, re, im, gre, gim):
    """Gradients of one factor product w.r.t. its values and its input.

    ``re, im`` are the saved inputs and ``gre, gim`` the output gradients.
    Real and imaginary parts are treated as independent real variables, so
    for an entry ``v`` at ``(r, c)``::

        dL/dv_re = sum(g_re[r] x_re[c] + g_im[r] x_im[c])
        dL/dv_im = sum(g_im[r] x_re[c] - g_re[r] x_im[c])

    Returns ``(grad_values, grad_re, grad_im)``, ``grad_values`` shaped like
    ``factor.values`` and summed over all leading batch dimensions.
    """
    n = factor.n
    xr, xi = _kernels.as_matrix(re, n), _kernels.as_matrix(im, n)
    gr, gi = _kernels.as_matrix(gre, n), _kernels.as_matrix(gim, n)
    gv = np.zeros_like(factor.values)
    gxr, gxi = np.empty_like(xr), np.empty_like(xi)
    _kernels.stage_backward(factor.values, factor.half, xr, xi, gr, gi, gv, gxr, gxi)
    return gv, gxr.reshape(np.shape(re)), gxi.reshape(np.shape(im))


def _check_input(stack, x):
    if not isinstance(x, SplitComplexBuffer):
        x = SplitComplexBuffer.from_complex(x) if np.iscomplexobj(x) else SplitComplexBuffer.from_real(x)
    check_length(x.re, stack.n)
    check_finite(x.re, x.im)
    return x


def _forward_arrays(stack, re, im, counter=None):
    n = stack.n
    xr, xi = _kernels.as_matrix(re, n), _kernels.as_matrix(im, n)
    yr, yi = np.empty_like(xr), np.empty_like(xi)
    vals = np.stack([f.values for f in stack.factors])
    _kernels.stack_forward(vals, stack.permutation, xr, xi, yr, yi)
    if counter is not None:
        counter.add(xr.shape[0] * sum(f.rows.size for f in stack.factors))
    return yr.reshape(np.shape(re)), yi.reshape(np.shape(im))


def apply_forward(stack, x, counter=None):
    """Apply ``W_m ... W_1 B_n`` to ``x`` along its last axis.

    With freshly built factors this is the DFT.  ``counter``, if given, is
    credited with one complex MAC per stored nonzero per vector.
    """
    x = _check_input(stack, x)
    re, im = _forward_arrays(stack, x.re, x.im, counter)
    return SplitComplexBuffer(re, im)


def apply_inverse(stack, X, counter=None):
    """Inverse transform via ``conj(forward(conj(X))) / n`` using this stack."""
    X = _check_input(stack, X)
    re, im = _forward_arrays(stack, X.re, -X.im, counter)
    return SplitComplexBuffer(re / stack.n, -im / stack.n)


def naive_dft(x):
    """Direct O(n^2) DFT along the last axis; the reference for every check."""
    if not isinstance(x, SplitComplexBuffer):
        x = SplitComplexBuffer.from_complex(x)
    check_finite(x.re, x.im)
    N = x.re.shape[-1]
    if N < 1:
        raise InvalidSizeError("naive_dft needs at least one sample")
    k = np.arange(N)
    # reduce k*m mod N before scaling to keep the angle accurate for large N
    angle = -2.0 * np.pi * (np.outer(k, k) % N) / N
    c, s = np.cos(angle), np.sin(angle)
    re = x.re @ c.T - x.im @ s.T
    im = x.re @ s.T + x.im @ c.T
    return SplitComplexBuffer(re, im)


def to_dense(stack):
    """Explicit ``n x n`` matrix of the whole stack, as split-complex arrays."""
    if stack.n > MAX_DENSE_SIZE:
        raise InvalidSizeError(f"refusing to densify n={stack.n} > {MAX_DENSE_SIZE}")
    eye = np.eye(stack.n)
    # row j of the result is F e_j, i.e. column j of F
    re, im = _forward_arrays(stack, eye, np.zeros_like(eye))
    return SplitComplexBuffer(re.T.copy(), im.T.copy())


def dense_to_csv(matrix):
    """Row-major CSV with ``re+imj`` cells."""
    lines = []
    for rr, ii in zip(matrix.re, matrix.im):
        lines.append(",".join(f"{a:.17g}{b:+.17g}j" for a, b in zip(rr, ii)))
    return "\n".join(lines) + "\n"


def count_parameters(stack):
    """Real trainable parameters: two per stored complex entry."""
    return int(sum(f.values.size for f in stack.factors))


def dense_parameter_count(n):
    """Real parameters of a dense complex ``n x n`` transform matrix."""
    return 2 * n * n


def count_macs(n):
    """Complex MACs of one butterfly-stack application: ``2 n log2(n)``."""
    n = check_power_of_two(n)
    return 2 * n * (n.bit_length() - 1)
