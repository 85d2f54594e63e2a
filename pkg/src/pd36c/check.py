"""Finite-difference gradient verification.

The numeric side is deliberately independent of the analytic backwards in
``ops``: it only ever calls a scalar-valued forward function and perturbs
one element at a time with central differences.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def numeric_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, eps: float | None = None
) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``x``, elementwise.

    ``eps`` defaults to a dtype-appropriate step: 3e-3 for float32,
    1e-5 for float64.
    """
    if eps is None:
        eps = 3e-3 if x.dtype == np.float32 else 1e-5
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = float(f(x))
        flat[i] = orig - eps
        fm = float(f(x))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * eps)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest absolute deviation scaled by the largest gradient magnitude."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-12)
    return float(np.abs(analytic - numeric).max() / scale)
