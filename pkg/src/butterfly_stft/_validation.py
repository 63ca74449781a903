"""Input validation helpers used at public entry points."""

import numpy as np
from sklearn.utils import check_array

from .errors import InvalidSizeError, NumericError, ShapeError


def is_power_of_two(n):
    return isinstance(n, (int, np.integer)) and n >= 1 and (int(n) & (int(n) - 1)) == 0


def check_power_of_two(n, name="n", minimum=2):
    """Return ``n`` as int, raising InvalidSizeError unless it is a power of two >= minimum."""
    if isinstance(n, bool) or not is_power_of_two(n) or n < minimum:
        raise InvalidSizeError(f"{name} must be a power of two >= {minimum}, got {n!r}")
    return int(n)


def check_finite(*arrays, what="input"):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError(f"{what} contains NaN or Inf")


def check_length(a, n, what="input"):
    if a.shape[-1] != n:
        raise ShapeError(f"{what} has trailing length {a.shape[-1]}, expected {n}")


def check_signal(x, name="signal"):
    """Coerce a 1-D real signal to float64, rejecting empty and non-finite input."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {x.shape}")
    check_finite(x, what=name)
    return x


def check_signal_batch(X, name="X"):
    """Coerce a batch of equal-length signals to a 2-D float64 array.

    A single 1-D signal is promoted to a batch of one.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    try:
        return check_array(X, dtype=np.float64, ensure_2d=True, input_name=name)
    except ValueError as exc:
        if "NaN" in str(exc) or "infinity" in str(exc):
            raise NumericError(str(exc)) from exc
        raise ShapeError(str(exc)) from exc
