"""Small input-validation helpers shared by the public types and estimators."""

import numpy as np

from .errors import DomainError


def as_float_array(values, name, ndim=1):
    """Return a read-only float64 copy of ``values``, checking shape and finiteness."""
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise DomainError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def check_positive(value, name, strict=True):
    value = float(value)
    if not np.isfinite(value) or (value <= 0 if strict else value < 0):
        rel = ">" if strict else ">="
        raise DomainError(f"{name} must be finite and {rel} 0, got {value}")
    return value


def check_finite(value, name):
    value = float(value)
    if not np.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value}")
    return value


def check_same_length(name_a, a, name_b, b):
    if len(a) != len(b):
        raise DomainError(f"{name_a} and {name_b} differ in length ({len(a)} != {len(b)})")


def check_multiple(duration, dt, name):
    """Check ``duration`` is an integer multiple of ``dt`` and return the ratio."""
    ratio = duration / dt
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise DomainError(f"{name}={duration} s is not a positive multiple of dt={dt} s")
    return n
