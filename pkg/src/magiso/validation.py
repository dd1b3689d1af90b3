"""Input validation helpers shared by the solvers and estimators."""
from __future__ import annotations

import numbers

import numpy as np


class DomainError(ValueError):
    """Raised for invalid planar domains or meshes."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to reach its tolerance.

    The last iterate and residual are attached so callers can inspect them.
    """

    def __init__(self, message, iterate=None, residual=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


def check_points(points, name="points", min_rows=1):
    """Return ``points`` as a float (n, 2) array or raise."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError(f"{name} must have shape (n, 2), got {arr.shape}")
    if arr.shape[0] < min_rows:
        raise DomainError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def check_scalar(value, name, *, min_val=None, max_val=None, strict=False):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite")
    if min_val is not None:
        if strict and value <= min_val:
            raise ValueError(f"{name} must be > {min_val}, got {value}")
        if not strict and value < min_val:
            raise ValueError(f"{name} must be >= {min_val}, got {value}")
    if max_val is not None and value > max_val:
        raise ValueError(f"{name} must be <= {max_val}, got {value}")
    return value


def check_field(B):
    return check_scalar(B, "B", min_val=0.0)


def check_potential(samples, n_nodes=None):
    """Validate sampled radial potential values a(r_i)."""
    arr = np.asarray(samples, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError("potential samples must be finite")
    if n_nodes is not None and arr.size != n_nodes:
        raise ValueError(f"potential has {arr.size} samples, grid has {n_nodes} nodes")
    return arr


def check_asymmetry_kind(kind):
    if kind not in ("fraenkel", "interior"):
        raise ValueError(f"asymmetry kind must be 'fraenkel' or 'interior', got {kind!r}")
    return kind
