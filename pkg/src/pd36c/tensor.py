"""Rank-4 tensor conventions and execution modes.

Activations and gradients are plain ``numpy.ndarray`` values laid out
channels-last as ``(batch, height, width, channels)``, float32 by default.
A float64 mode exists solely so finite-difference gradient checks can run
at higher precision; every operator follows the dtype of its input.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import ShapeError

COMPUTE_DTYPE = np.float32


class ExecMode(enum.Enum):
    """Train applies stochastic layers and batch statistics; Infer never
    consumes randomness and uses moving statistics."""

    TRAIN = "train"
    INFER = "infer"


def as_tensor4(x, dtype=COMPUTE_DTYPE) -> np.ndarray:
    """Coerce ``x`` to a contiguous rank-4 (N, H, W, C) array.

    Raises ShapeError if the input is not rank 4.
    """
    arr = np.ascontiguousarray(x, dtype=dtype)
    if arr.ndim != 4:
        raise ShapeError(f"expected rank-4 (N, H, W, C) tensor, got shape {arr.shape}")
    return arr


def require_rank4(x: np.ndarray, what: str = "input") -> None:
    if x.ndim != 4:
        raise ShapeError(f"{what} must be rank-4 (N, H, W, C), got shape {x.shape}")


def require_finite(x: np.ndarray, what: str = "tensor") -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} contains non-finite values")
