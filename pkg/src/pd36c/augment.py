"""Stochastic training-time image perturbations and rescale normalization.

The perturbation chain, applied independently per image and only in Train
mode: horizontal flip, rotation, translation, zoom, contrast. Vertical
flipping is deliberately excluded (leaf images are predominantly upright).
Rotation, translation, and zoom are composed into one inverse affine map so
the image is resampled once; sampling is nearest-neighbor with out-of-bounds
coordinates clamped to the nearest edge pixel, so no zero or blurred borders
are introduced and no new intensity values are invented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .tensor import ExecMode, require_rank4


@dataclass(frozen=True)
class AugmentConfig:
    """Perturbation strengths; all factors are fractions.

    ``rotation_factor`` is a fraction of a full turn (0.03 -> +-10.8 deg),
    ``translation_factor`` a fraction of height/width, ``zoom_factor`` the
    half-width of the per-axis scale interval 1 +- zoom, ``contrast_factor``
    the half-width of the contrast multiplier interval. ``value_range`` is
    the pixel range images use at the point augmentation runs; contrast
    output is clamped to it (the chain runs before rescale, so the default
    is the 8-bit range and rescaled outputs land back in [0, 1]).
    """

    flip_prob: float = 0.5
    rotation_factor: float = 0.03
    translation_factor: float = 0.02
    zoom_factor: float = 0.05
    contrast_factor: float = 0.1
    value_range: tuple[float, float] = (0.0, 255.0)

    def __post_init__(self):
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ConfigError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        for field in ("rotation_factor", "translation_factor", "zoom_factor", "contrast_factor"):
            if getattr(self, field) < 0:
                raise ConfigError(f"{field} must be >= 0, got {getattr(self, field)}")


def rescale(image: np.ndarray) -> np.ndarray:
    """Map pixel values from [0, 255] to [0.0, 1.0] by dividing by 255."""
    arr = np.asarray(image)
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise DataError(
            f"pixel values outside [0, 255]: min={arr.min()}, max={arr.max()}"
        )
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    return arr / arr.dtype.type(255.0)


def apply_geometric(
    image: np.ndarray,
    angle_deg: float,
    dx: float,
    dy: float,
    sx: float,
    sy: float,
) -> np.ndarray:
    """Rotate, translate, then zoom one (H, W, C) image about its center.

    The composite is evaluated as a single inverse map per output pixel with
    nearest-neighbor sampling; source coordinates beyond the frame clamp to
    the nearest edge pixel. ``dx``/``dy`` shift content right/down in
    pixels; ``sx``/``sy`` > 1 magnify.
    """
    if sx <= 0 or sy <= 0:
        raise ConfigError(f"zoom scales must be positive, got sx={sx}, sy={sy}")
    h, w = image.shape[:2]
    cy = (h - 1) / 2.0
    cx = (w - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    # invert the chain: undo zoom, undo translation, undo rotation
    px = (xs - cx) / sx - dx
    py = (ys - cy) / sy - dy
    t = np.deg2rad(angle_deg)
    ct, st = np.cos(t), np.sin(t)
    src_x = ct * px + st * py + cx
    src_y = -st * px + ct * py + cy
    ix = np.clip(np.floor(src_x + 0.5).astype(np.intp), 0, w - 1)
    iy = np.clip(np.floor(src_y + 0.5).astype(np.intp), 0, h - 1)
    return image[iy, ix]


@dataclass(frozen=True)
class DrawnParams:
    """Per-image perturbation parameters for one batch, in draw order."""

    flips: np.ndarray
    angles_deg: np.ndarray
    dxs: np.ndarray
    dys: np.ndarray
    sxs: np.ndarray
    sys: np.ndarray
    contrasts: np.ndarray


def draw_params(cfg: AugmentConfig, rng: np.random.Generator, n: int, h: int, w: int) -> DrawnParams:
    """Sample every per-image parameter for an n-image batch.

    Angles are uniform in +-rotation_factor of a full turn, offsets in
    +-translation_factor of the extent, scales and contrast factors in
    1 +- their factor.
    """
    max_angle = cfg.rotation_factor * 360.0
    return DrawnParams(
        flips=rng.random(n) < cfg.flip_prob,
        angles_deg=rng.uniform(-max_angle, max_angle, n),
        dxs=rng.uniform(-cfg.translation_factor * w, cfg.translation_factor * w, n),
        dys=rng.uniform(-cfg.translation_factor * h, cfg.translation_factor * h, n),
        sxs=rng.uniform(1.0 - cfg.zoom_factor, 1.0 + cfg.zoom_factor, n),
        sys=rng.uniform(1.0 - cfg.zoom_factor, 1.0 + cfg.zoom_factor, n),
        contrasts=rng.uniform(1.0 - cfg.contrast_factor, 1.0 + cfg.contrast_factor, n),
    )


def augment_batch(
    images: np.ndarray,
    cfg: AugmentConfig,
    mode: ExecMode,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Perturb every image of a (N, H, W, C) batch independently.

    Infer mode bypasses the block and returns the input unchanged. Train
    mode draws all per-image parameters from ``rng`` in a fixed order, so
    identical (images, cfg, seed) produce a bit-identical batch.
    """
    if mode is ExecMode.INFER:
        return images
    if rng is None:
        raise ConfigError("augmentation in Train mode requires a random generator")
    require_rank4(images, "image batch")
    n, h, w, _ = images.shape
    p = draw_params(cfg, rng, n, h, w)

    lo, hi = cfg.value_range
    out = np.empty_like(images)
    for i in range(n):
        img = images[i]
        if p.flips[i]:
            img = img[:, ::-1, :]
        if (
            p.angles_deg[i] != 0.0
            or p.dxs[i] != 0.0
            or p.dys[i] != 0.0
            or p.sxs[i] != 1.0
            or p.sys[i] != 1.0
        ):
            img = apply_geometric(img, p.angles_deg[i], p.dxs[i], p.dys[i], p.sxs[i], p.sys[i])
        if p.contrasts[i] != 1.0:
            f = img.dtype.type(p.contrasts[i])
            mean = img.mean(axis=(0, 1))  # per channel
            img = np.clip(mean + (img - mean) * f, lo, hi).astype(images.dtype)
        out[i] = img
    return out
