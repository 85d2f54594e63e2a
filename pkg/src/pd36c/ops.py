"""Differentiable operators: forward passes paired with analytic gradients.

Every forward returns ``(output, cache)`` where ``cache`` holds exactly the
state its backward needs. Backwards take ``(cache, upstream)`` and return
gradients with respect to inputs and parameters. All operators are pure and
dtype-following: float32 in normal use, float64 when a caller is running
finite-difference verification.

Conventions fixed across the package:
  * activations are channels-last ``(N, H, W, C)``
  * convolution is 3x3, stride 1, zero-padded "same", cross-correlation
    orientation (no kernel flip), and carries no bias
  * pooling is 2x2 windows with stride 2; on ties the first window element
    in row-major scan receives the gradient
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DegenerateBatchError, ShapeError
from .tensor import ExecMode, require_rank4

_BN_AXES = (0, 1, 2)


# ---------------------------------------------------------------------------
# convolution


def _im2col3x3(x: np.ndarray) -> np.ndarray:
    """Unfold zero-padded 3x3 same-convolution windows.

    Returns a ``(N*H*W, C*9)`` matrix whose row for output site (n, i, j)
    holds the 3x3 neighborhood ordered (channel, window row, window col).
    """
    n, h, w, c = x.shape
    xp = np.zeros((n, h + 2, w + 2, c), dtype=x.dtype)
    xp[:, 1:-1, 1:-1, :] = x
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))  # (N, H, W, C, 3, 3)
    return win.reshape(n * h * w, c * 9)


def conv2d_forward(x: np.ndarray, kernel: np.ndarray):
    """3x3 same-padding cross-correlation, stride 1, no bias.

    ``x`` is (N, H, W, Cin), ``kernel`` is (3, 3, Cin, Cout); output keeps
    the input's spatial extent.
    """
    require_rank4(x)
    if kernel.ndim != 4 or kernel.shape[:2] != (3, 3):
        raise ShapeError(f"kernel must be (3, 3, Cin, Cout), got {kernel.shape}")
    if x.shape[3] != kernel.shape[2]:
        raise ShapeError(
            f"input channels {x.shape} do not match kernel input channels {kernel.shape}"
        )
    n, h, w, c = x.shape
    f = kernel.shape[3]
    cols = _im2col3x3(x)
    w2 = kernel.transpose(2, 0, 1, 3).reshape(c * 9, f)
    y = (cols @ w2).reshape(n, h, w, f)
    return y, (x, kernel)


def conv2d_backward(cache, upstream: np.ndarray, need_dx: bool = True):
    """Gradients of conv2d w.r.t. input and kernel.

    Recomputes the unfolded windows from the saved input rather than caching
    them, trading one im2col per backward for a much smaller tape.
    """
    x, kernel = cache
    n, h, w, c = x.shape
    f = kernel.shape[3]
    dy2 = upstream.reshape(n * h * w, f)
    cols = _im2col3x3(x)
    dkernel = (cols.T @ dy2).reshape(c, 3, 3, f).transpose(1, 2, 0, 3)
    if not need_dx:
        return None, dkernel
    w2 = kernel.transpose(2, 0, 1, 3).reshape(c * 9, f)
    dwin = (dy2 @ w2.T).reshape(n, h, w, c, 3, 3)
    dxp = np.zeros((n, h + 2, w + 2, c), dtype=upstream.dtype)
    for m in range(3):
        for k in range(3):
            dxp[:, m : m + h, k : k + w, :] += dwin[:, :, :, :, m, k]
    return dxp[:, 1:-1, 1:-1, :], dkernel


# ---------------------------------------------------------------------------
# activations


def relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(mask: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    return upstream * mask


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction; works on (C,) or (N, C)."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(probs: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Jacobian-vector product of softmax given its output."""
    inner = (upstream * probs).sum(axis=-1, keepdims=True)
    return probs * (upstream - inner)


# ---------------------------------------------------------------------------
# pooling


def maxpool2x2_forward(x: np.ndarray):
    """Disjoint 2x2 max pooling with stride 2; H and W must be even."""
    require_rank4(x)
    n, h, w, c = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2x2 needs even spatial extent, got H={h}, W={w}")
    win = (
        x.reshape(n, h // 2, 2, w // 2, 2, c)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, h // 2, w // 2, c, 4)
    )
    idx = win.argmax(axis=4)  # first occurrence wins ties (row-major scan)
    y = np.take_along_axis(win, idx[..., None], axis=4)[..., 0]
    return y, (idx, x.shape)


def maxpool2x2_backward(cache, upstream: np.ndarray) -> np.ndarray:
    idx, (n, h, w, c) = cache
    dwin = np.zeros((n, h // 2, w // 2, c, 4), dtype=upstream.dtype)
    np.put_along_axis(dwin, idx[..., None], upstream[..., None], axis=4)
    return (
        dwin.reshape(n, h // 2, w // 2, c, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, h, w, c)
    )


def global_avg_pool_forward(x: np.ndarray):
    """Per-channel spatial mean; collapses (N, H, W, C) to (N, C)."""
    require_rank4(x)
    n, h, w, c = x.shape
    return x.mean(axis=(1, 2)), (n, h, w, c)


def global_avg_pool_backward(cache, upstream: np.ndarray) -> np.ndarray:
    n, h, w, c = cache
    scale = upstream.dtype.type(1.0 / (h * w))
    return np.broadcast_to(upstream[:, None, None, :] * scale, (n, h, w, c)).copy()


# ---------------------------------------------------------------------------
# batch normalization


def _check_bn_params(c: int, *params: np.ndarray) -> None:
    for p in params:
        if p.shape != (c,):
            raise ShapeError(
                f"batchnorm parameter shape {p.shape} does not match channels ({c},)"
            )


def batchnorm_forward_train(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float):
    """Normalize with batch statistics over (N, H, W) per channel.

    Returns ``(y, cache, batch_mean, batch_var)``; the caller owns the
    moving-statistics update. Variance is the population (biased) variance.
    """
    require_rank4(x)
    n, h, w, c = x.shape
    _check_bn_params(c, gamma, beta)
    m = n * h * w
    if m == 0:
        raise DegenerateBatchError("batch statistics over zero elements")
    mean = x.mean(axis=_BN_AXES)
    var = x.var(axis=_BN_AXES)
    inv = 1.0 / np.sqrt(var + x.dtype.type(eps))
    xhat = (x - mean) * inv
    y = gamma * xhat + beta
    return y, (xhat, gamma, inv), mean, var


def batchnorm_backward_train(cache, upstream: np.ndarray):
    xhat, gamma, inv = cache
    dgamma = (upstream * xhat).sum(axis=_BN_AXES)
    dbeta = upstream.sum(axis=_BN_AXES)
    dxhat = upstream * gamma
    dx = inv * (
        dxhat
        - dxhat.mean(axis=_BN_AXES)
        - xhat * (dxhat * xhat).mean(axis=_BN_AXES)
    )
    return dx, dgamma, dbeta


def batchnorm_forward_infer(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    moving_mean: np.ndarray,
    moving_var: np.ndarray,
    eps: float,
):
    """Normalize with moving statistics; deterministic and batch-independent."""
    require_rank4(x)
    c = x.shape[3]
    _check_bn_params(c, gamma, beta, moving_mean, moving_var)
    inv = 1.0 / np.sqrt(moving_var + x.dtype.type(eps))
    xhat = (x - moving_mean) * inv
    y = gamma * xhat + beta
    return y, (xhat, gamma, inv)


def batchnorm_backward_infer(cache, upstream: np.ndarray):
    xhat, gamma, inv = cache
    dgamma = (upstream * xhat).sum(axis=_BN_AXES)
    dbeta = upstream.sum(axis=_BN_AXES)
    dx = upstream * (gamma * inv)
    return dx, dgamma, dbeta


# ---------------------------------------------------------------------------
# dense


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Affine map y = x @ w + b for (N, Din) inputs."""
    if x.ndim != 2:
        raise ShapeError(f"dense expects (N, Din) input, got shape {x.shape}")
    if w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"dense input {x.shape} does not match weight {w.shape}")
    if b.shape != (w.shape[1],):
        raise ShapeError(f"dense bias {b.shape} does not match weight {w.shape}")
    return x @ w + b, (x, w)


def dense_backward(cache, upstream: np.ndarray):
    x, w = cache
    dw = x.T @ upstream
    db = upstream.sum(axis=0)
    dx = upstream @ w.T
    return dx, dw, db


# ---------------------------------------------------------------------------
# dropout


def dropout_forward(
    x: np.ndarray,
    rate: float,
    mode: ExecMode,
    rng: np.random.Generator | None = None,
):
    """Inverted dropout: zero with probability ``rate`` and scale survivors
    by 1/(1-rate) so the expectation is preserved. Identity in Infer mode."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if mode is ExecMode.INFER or rate == 0.0:
        return x, None
    if rng is None:
        raise ConfigError("dropout in Train mode requires a random generator")
    keep = rng.random(x.shape) >= rate
    scale = x.dtype.type(1.0 / (1.0 - rate))
    mask = keep.astype(x.dtype) * scale
    return x * mask, mask


def dropout_backward(mask, upstream: np.ndarray) -> np.ndarray:
    if mask is None:
        return upstream
    return upstream * mask
