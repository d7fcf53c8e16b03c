"""Input validation helpers shared by the estimators and free functions."""

from __future__ import annotations

import numbers

import numpy as np


class InvalidGroupingError(ValueError):
    """A subcarrier grouping violates the nonempty-group / used-subcarrier rules."""


class SearchSpaceTooLargeError(ValueError):
    """Exhaustive search was asked to enumerate more assignments than allowed."""


def check_complex_vector(v, name="v", min_length=1) -> np.ndarray:
    """Return ``v`` as a finite 1-D complex128 array or raise ``ValueError``."""
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} must have at least {min_length} element(s)")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_real_vector(v, name="v", min_length=1, nonnegative=False) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} must have at least {min_length} element(s)")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    if nonnegative and np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative")
    return arr


def check_scalar(x, name, *, target_type=numbers.Real, min_val=None, max_val=None,
                 include_min=True, include_max=True):
    """Type and range check for scalar hyper-parameters.

    Mirrors the behaviour of ``sklearn.utils.check_scalar`` but also accepts
    numpy scalar types for integer parameters.
    """
    if target_type is numbers.Integral and isinstance(x, (bool, np.bool_)):
        raise TypeError(f"{name} must be an integer, got bool")
    if not isinstance(x, target_type):
        raise TypeError(f"{name} must be an instance of {target_type.__name__}, "
                        f"got {type(x).__name__}")
    if min_val is not None:
        if (x < min_val) if include_min else (x <= min_val):
            op = ">=" if include_min else ">"
            raise ValueError(f"{name} == {x}, must be {op} {min_val}")
    if max_val is not None:
        if (x > max_val) if include_max else (x >= max_val):
            op = "<=" if include_max else "<"
            raise ValueError(f"{name} == {x}, must be {op} {max_val}")
    return x


def check_frequency_responses(X, name="X") -> np.ndarray:
    """Return ``X`` as a finite 2-D complex array of shape (n_realizations, N)."""
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] < 1 or arr.shape[0] < 1:
        raise ValueError(f"{name} must be (n_realizations, n_subcarriers) or (n_subcarriers,), "
                         f"got shape {np.shape(X)}")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr
