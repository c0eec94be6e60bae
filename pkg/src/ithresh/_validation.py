"""Input validation helpers.

All public entry points funnel array arguments through these so the rest of
the package can assume finite float64 arrays of the right rank.
"""
import numbers

import numpy as np

from .exceptions import ArgumentError


def check_vector(v, name="v", size=None):
    arr = np.array(v, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ArgumentError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ArgumentError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains NaN or Inf")
    if size is not None and arr.shape[0] != size:
        raise ArgumentError(f"{name} has length {arr.shape[0]}, expected {size}")
    return arr


def check_matrix(a, name="matrix"):
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ArgumentError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains NaN or Inf")
    return arr


def check_nonneg(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ArgumentError(f"{name} must be a finite real, got {value!r}")
    if value < 0:
        raise ArgumentError(f"{name} must be nonnegative, got {value!r}")
    return float(value)


def check_positive(value, name):
    value = check_nonneg(value, name)
    if value == 0:
        raise ArgumentError(f"{name} must be positive")
    return value


def check_count(value, name, minimum=0):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ArgumentError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ArgumentError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def readonly(arr):
    arr.setflags(write=False)
    return arr
