"""Flat parameter-vector arithmetic.

All optimizer math is expressed through these operations.  Vectors are
1-D float64 numpy arrays ("param vectors"): the flattened model
parameters, gradients, perturbations, and diagonal matrices (a diagonal
is stored as its entry vector; no dense matrix type exists).

Checks are eager: length mismatches raise DimensionError and any NaN/Inf
produced at an operation boundary raises NonFiniteError, so a diverging
run fails loudly instead of propagating garbage.  The arithmetic itself
is delegated to the selected kernel backend (see `kernels`).
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError, NonFiniteError

DTYPE = np.float64


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Coerce to a contiguous float64 1-D array, checking finiteness."""
    arr = np.ascontiguousarray(values, dtype=DTYPE)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return arr


def zeros(d: int) -> np.ndarray:
    return np.zeros(d, dtype=DTYPE)


def _pair(a, b, op: str):
    a = np.ascontiguousarray(a, dtype=DTYPE)
    b = np.ascontiguousarray(b, dtype=DTYPE)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"{op}: length mismatch {a.shape} vs {b.shape}")
    return a, b


def _one(a, op: str):
    a = np.ascontiguousarray(a, dtype=DTYPE)
    if a.ndim != 1:
        raise DimensionError(f"{op}: expected a 1-D vector, got shape {a.shape}")
    return a


def _check_scalar(x: float, op: str) -> float:
    if not math.isfinite(x):
        raise NonFiniteError(f"{op} produced a non-finite scalar")
    return x


def _check_out(out: np.ndarray, op: str) -> np.ndarray:
    if not np.isfinite(out).all():
        raise NonFiniteError(f"{op} produced NaN or Inf entries")
    return out


def dot(a, b) -> float:
    a, b = _pair(a, b, "dot")
    return _check_scalar(kernels.dot(a, b), "dot")


def l2_norm(v) -> float:
    v = _one(v, "l2_norm")
    return _check_scalar(kernels.l2_norm(v), "l2_norm")


def axpy(alpha: float, x, y) -> np.ndarray:
    """Return y + alpha*x."""
    x, y = _pair(x, y, "axpy")
    out = np.empty_like(x)
    kernels.axpy(alpha, x, y, out)
    return _check_out(out, "axpy")


def scale(alpha: float, x) -> np.ndarray:
    x = _one(x, "scale")
    out = np.empty_like(x)
    kernels.scale(alpha, x, out)
    return _check_out(out, "scale")


def square(v) -> np.ndarray:
    v = _one(v, "square")
    out = np.empty_like(v)
    kernels.square(v, out)
    return _check_out(out, "square")


def absval(v) -> np.ndarray:
    v = _one(v, "abs")
    out = np.empty_like(v)
    kernels.absval(v, out)
    return _check_out(out, "abs")


def multiply(a, b) -> np.ndarray:
    a, b = _pair(a, b, "multiply")
    out = np.empty_like(a)
    kernels.multiply(a, b, out)
    return _check_out(out, "multiply")


def subtract(a, b) -> np.ndarray:
    """Return a - b."""
    a, b = _pair(a, b, "subtract")
    out = np.empty_like(a)
    kernels.subtract(a, b, out)
    return _check_out(out, "subtract")


_ELEMENTWISE = {"square": square, "abs": absval, "multiply": multiply}


def elementwise(op: str, a, b=None) -> np.ndarray:
    """Entrywise op dispatcher: square/abs are unary, multiply is binary."""
    if op not in _ELEMENTWISE:
        raise ConfigError(f"unknown elementwise op {op!r}; choose from {sorted(_ELEMENTWISE)}")
    if op == "multiply":
        if b is None:
            raise DimensionError("multiply needs two vectors")
        return multiply(a, b)
    if b is not None:
        raise DimensionError(f"{op} takes a single vector")
    return _ELEMENTWISE[op](a)


def momentum_update(mu: float, lam: float, eta: float, m, theta, g):
    """One coupled-weight-decay momentum step.

    m' = mu*m + (g + lam*theta); theta' = theta - eta*m'.
    Returns (m', theta') as fresh arrays.
    """
    m, theta = _pair(m, theta, "momentum_update")
    _, g = _pair(theta, g, "momentum_update")
    out_m = np.empty_like(m)
    out_theta = np.empty_like(theta)
    kernels.momentum_update(mu, lam, eta, m, theta, g, out_m, out_theta)
    _check_out(out_m, "momentum_update")
    return out_m, _check_out(out_theta, "momentum_update")
