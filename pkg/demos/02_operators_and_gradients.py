"""Tour the differentiable operators and verify a gradient by hand.

Every operator comes as a forward/backward pair over plain float32 NumPy
arrays in (batch, height, width, channels) layout. Running the same ops in
float64 is how the finite-difference checks reach 1e-6 agreement.
"""

import numpy as np

from pd36c import ops
from pd36c.check import max_relative_error, numeric_gradient
from pd36c.tensor import ExecMode

rng = np.random.default_rng(0)

# --- convolution: 3x3, stride 1, same zero padding, no kernel flip -------
x = rng.standard_normal((1, 5, 5, 2))
kernel = rng.standard_normal((3, 3, 2, 3))
y, cache = ops.conv2d_forward(x, kernel)
print(f"conv2d: {x.shape} * {kernel.shape} -> {y.shape}")

# an identity kernel (single center tap) returns the input untouched
eye = np.zeros((3, 3, 2, 2))
eye[1, 1, 0, 0] = eye[1, 1, 1, 1] = 1.0
y_eye, _ = ops.conv2d_forward(x, eye)
print(f"identity kernel reproduces input: {np.array_equal(y_eye, x)}")

# --- the backward pass matches central finite differences ----------------
upstream = rng.standard_normal(y.shape)
dx, dkernel = ops.conv2d_backward(cache, upstream)
loss = lambda v: float((ops.conv2d_forward(v, kernel)[0] * upstream).sum())
numeric = numeric_gradient(loss, x.copy())
print(f"conv2d dx vs finite differences: rel err {max_relative_error(dx, numeric):.2e}")

# --- pooling routes gradient to the window argmax -------------------------
window = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32).reshape(1, 2, 2, 1)
pooled, pcache = ops.maxpool2x2_forward(window)
back = ops.maxpool2x2_backward(pcache, np.ones((1, 1, 1, 1), np.float32))
print(f"maxpool([[1,2],[3,4]]) = {pooled.ravel()[0]}, gradient lands on: "
      f"{back.reshape(2, 2).tolist()}")

# --- batch norm: batch statistics in Train, moving statistics in Infer ---
feats = rng.standard_normal((8, 4, 4, 3)).astype(np.float32) * 3 + 5
gamma, beta = np.ones(3, np.float32), np.zeros(3, np.float32)
normed, _, batch_mean, batch_var = ops.batchnorm_forward_train(feats, gamma, beta, 1e-3)
print(f"batchnorm(train): output mean {normed.mean():+.4f}, var {normed.var():.4f}")

# --- inverted dropout preserves the expectation ---------------------------
ones = np.ones((1, 100, 100, 1), np.float32)
dropped, _ = ops.dropout_forward(ones, 0.25, ExecMode.TRAIN, np.random.default_rng(1))
print(f"dropout(0.25): zero fraction {float((dropped == 0).mean()):.4f}, "
      f"mean {float(dropped.mean()):.4f} (expectation preserved)")

# --- softmax is shift-invariant and overflow-safe --------------------------
logits = np.array([1000.0, 0.0], dtype=np.float32)
print(f"softmax([1000, 0]) = {ops.softmax(logits)} (no overflow)")
