"""Numerical self-checks of a butterfly stack against independent references."""

from dataclasses import dataclass

import numpy as np

from .butterfly import (SplitComplexBuffer, apply_forward, apply_inverse, build_butterfly_stack,
                        naive_dft)

TOLERANCES = {"oracle": 1e-10, "inverse": 1e-10, "parseval": 1e-9, "sparsity": 0.0}


@dataclass
class CheckResult:
    name: str
    n: int
    error: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.error <= self.tolerance)


def expected_stage_dense(n, k):
    """``I_{n/2^k} kron [[I, Omega], [I, -Omega]]`` built densely with numpy."""
    h = 1 << (k - 1)
    omega = np.diag(np.exp(-2j * np.pi * np.arange(h) / (2 * h)))
    eye = np.eye(h)
    block = np.block([[eye, omega], [eye, -omega]])
    return np.kron(np.eye(n // (2 * h)), block)


def sparsity_violations(stack):
    """Count factors whose pattern deviates from the Kronecker structure."""
    bad = 0
    for f in stack.factors:
        n = f.n
        mask = np.zeros((n, n), dtype=bool)
        mask[f.rows, f.cols] = True
        expected = expected_stage_dense(n, f.stage) != 0
        ok = (f.rows.size == 2 * n and mask.sum() == 2 * n
              and np.all(mask.sum(axis=0) == 2) and np.all(mask.sum(axis=1) == 2)
              and np.array_equal(mask, expected))
        bad += not ok
    return bad


def verify_size(n, trials=100, seed=0, stack=None):
    """Oracle, inverse, Parseval and sparsity checks for one transform size."""
    stack = build_butterfly_stack(n) if stack is None else stack
    rng = np.random.default_rng(seed)
    x = SplitComplexBuffer(rng.standard_normal((trials, n)), rng.standard_normal((trials, n)))
    X = apply_forward(stack, x)
    ref = naive_dft(x)
    oracle = max(np.abs(X.re - ref.re).max(), np.abs(X.im - ref.im).max())
    back = apply_inverse(stack, X)
    inverse = max(np.abs(back.re - x.re).max(), np.abs(back.im - x.im).max())
    energy_x = np.sum(x.re ** 2 + x.im ** 2, axis=-1)
    energy_X = np.sum(X.re ** 2 + X.im ** 2, axis=-1)
    parseval = np.max(np.abs(energy_X - n * energy_x) / (n * energy_x))
    return [
        CheckResult("oracle", n, float(oracle), TOLERANCES["oracle"]),
        CheckResult("inverse", n, float(inverse), TOLERANCES["inverse"]),
        CheckResult("parseval", n, float(parseval), TOLERANCES["parseval"]),
        CheckResult("sparsity", n, float(sparsity_violations(stack)), TOLERANCES["sparsity"]),
    ]
