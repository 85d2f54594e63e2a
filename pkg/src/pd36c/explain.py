"""Class-evidence heatmaps and per-layer feature-map extraction.

The heatmap for class c weights the target convolution's activation
channels by the spatial mean of the gradient of the class score with
respect to them, keeps only the positively contributing sum (ReLU),
min-max normalizes to [0, 1], and bilinearly upsamples to the input
extent. The class score is the pre-softmax logit by default: softmax
saturation flattens gradients at high confidence, but the softmax
probability can be selected instead.

Computing the gradient takes one forward and one backward pass over the
layers above the target convolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import ops
from .errors import ConfigError
from .model import ModelSpec, ParamStore, run_backward, run_forward
from .tensor import ExecMode


@dataclass(frozen=True)
class HeatMap:
    """2-D class-evidence map in [0, 1] at the input's spatial extent."""

    values: np.ndarray
    source_layer: str
    class_index: int
    constant: bool  # raw map was constant; values are all zeros


@dataclass(frozen=True)
class LayerMaps:
    layer: str
    maps: np.ndarray  # (k, h, w), each min-max normalized to [0, 1]
    constant: np.ndarray  # per-map degeneracy flags


@dataclass(frozen=True)
class FeatureGrid:
    """First up-to-16 post-activation channels of every conv layer."""

    layers: tuple[LayerMaps, ...]


def _minmax(values: np.ndarray) -> tuple[np.ndarray, bool]:
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return np.zeros_like(values), True
    return (values - lo) / (hi - lo), False


def bilinear_upsample(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a 2-D grid so input corners map exactly onto output corners."""
    in_h, in_w = grid.shape
    y = np.linspace(0.0, in_h - 1.0, out_h)
    x = np.linspace(0.0, in_w - 1.0, out_w)
    y0 = np.floor(y).astype(np.intp)
    x0 = np.floor(x).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (y - y0)[:, None]
    fx = (x - x0)[None, :]
    top = grid[np.ix_(y0, x0)] * (1 - fx) + grid[np.ix_(y0, x1)] * fx
    bottom = grid[np.ix_(y1, x0)] * (1 - fx) + grid[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bottom * fy


def grad_cam(
    spec: ModelSpec,
    store: ParamStore,
    image: np.ndarray,
    class_index: int,
    target_layer: str | None = None,
    use_logit: bool = True,
) -> HeatMap:
    """Evidence heatmap for ``class_index`` from the target conv layer.

    ``target_layer`` defaults to the final convolution. With
    ``use_logit=False`` the gradient source is the softmax probability
    instead of the raw class logit.
    """
    if not 0 <= class_index < spec.num_classes:
        raise ConfigError(
            f"class index {class_index} out of range [0, {spec.num_classes})"
        )
    if target_layer is None:
        target_layer = [n.name for n in spec.layers if n.kind == "conv2d"][-1]
    node = spec.node(target_layer)
    if node.kind != "conv2d":
        raise ConfigError(f"target layer {target_layer!r} is {node.kind}, not conv2d")

    probs, tape, captured = run_forward(
        spec, store, image, ExecMode.INFER, capture=[target_layer], with_tape=True
    )
    activation = captured[target_layer]  # (1, h, w, k)
    onehot = np.zeros_like(probs)
    onehot[:, class_index] = 1.0
    dlogits = onehot if use_logit else ops.softmax_backward(probs, onehot)
    _, d_activation = run_backward(spec, store, tape, dlogits, stop_layer=target_layer)

    channel_weights = d_activation.mean(axis=(1, 2))  # (1, k)
    raw = np.maximum((activation * channel_weights[:, None, None, :]).sum(axis=3), 0.0)[0]
    normalized, constant = _minmax(raw)
    heat = bilinear_upsample(
        normalized.astype(np.float64), image.shape[1], image.shape[2]
    )
    if not constant:
        # interpolation can miss interior extremes; renormalizing restores
        # an exact [0, 1] span and is idempotent when they were sampled
        heat, constant = _minmax(heat)
    return HeatMap(heat, target_layer, class_index, constant)


def feature_maps(
    spec: ModelSpec, store: ParamStore, image: np.ndarray, max_channels: int = 16
) -> FeatureGrid:
    """Post-ReLU feature maps of every convolution, first 16 channels each."""
    conv_to_activation = {}
    conv_name = None
    for n in spec.layers:
        if n.kind == "conv2d":
            conv_name = n.name
        elif n.kind == "relu" and conv_name is not None:
            conv_to_activation[conv_name] = n.name
            conv_name = None
    _, _, captured = run_forward(
        spec, store, image, ExecMode.INFER, capture=list(conv_to_activation.values())
    )
    layers = []
    for conv, act in conv_to_activation.items():
        maps = captured[act][0]  # (h, w, c)
        k = min(max_channels, maps.shape[2])
        normalized = np.empty((k, maps.shape[0], maps.shape[1]), dtype=np.float64)
        flags = np.zeros(k, dtype=bool)
        for i in range(k):
            normalized[i], flags[i] = _minmax(maps[:, :, i].astype(np.float64))
        layers.append(LayerMaps(conv, normalized, flags))
    return FeatureGrid(tuple(layers))


# ---------------------------------------------------------------------------
# export


def _jet(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] values to an RGB jet-style colormap in [0, 1]."""
    v = np.clip(values, 0.0, 1.0)
    r = np.clip(1.5 - np.abs(4.0 * v - 3.0), 0.0, 1.0)
    g = np.clip(1.5 - np.abs(4.0 * v - 2.0), 0.0, 1.0)
    b = np.clip(1.5 - np.abs(4.0 * v - 1.0), 0.0, 1.0)
    return np.stack([r, g, b], axis=-1)


def heatmap_to_png_bytes(heatmap: HeatMap) -> bytes:
    """Grayscale 8-bit PNG of the normalized map."""
    import io

    gray = np.round(heatmap.values * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(gray, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def overlay_to_png_bytes(heatmap: HeatMap, image: np.ndarray, alpha: float = 0.4) -> bytes:
    """Colormapped heatmap alpha-blended onto the (1, H, W, 3) input image."""
    import io

    rgb = np.asarray(image[0], dtype=np.float64)
    heat_rgb = _jet(heatmap.values) * 255.0
    blended = np.clip((1.0 - alpha) * rgb + alpha * heat_rgb, 0.0, 255.0)
    buf = io.BytesIO()
    Image.fromarray(blended.astype(np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def heatmap_to_csv(heatmap: HeatMap) -> str:
    return "\n".join(",".join(repr(float(v)) for v in row) for row in heatmap.values) + "\n"
