"""Sub-pixel patch extraction, in-plane rotation and cosine windowing.

Angles are degrees, anticlockwise, interpreted in display coordinates
(x = column, y = row). Rotation resamples on the inverse map with bilinear
interpolation and zero fill outside the source patch; the cosine window is
what keeps those zero-filled borders from polluting gradient features later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imaging import Image


def wrap_angle(angle: float) -> float:
    """Normalize an angle in degrees to (-180, 180]."""
    a = float(angle) % 360.0
    if a > 180.0:
        a -= 360.0
    return a


def hann2d(rows: int, cols: int) -> np.ndarray:
    """Separable Hann window, 0.5 * (1 - cos(2 pi m / (P - 1))) per axis.

    A length-1 axis degenerates to 1 so single-row/column patches survive.
    """
    wy = np.hanning(rows) if rows > 1 else np.ones(1)
    wx = np.hanning(cols) if cols > 1 else np.ones(1)
    return np.outer(wy, wx)


@dataclass
class Patch:
    """Resampled image region.

    data: (P, Q) float64 pixels.
    center: (x, y) sub-pixel position of the region center in the source frame.
    scale: region size relative to the base size it was cut with.
    angle: accumulated rotation applied to the content, degrees in (-180, 180].
    """

    data: np.ndarray
    center: tuple[float, float]
    scale: float
    angle: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.size == 0:
            raise ValueError(f"patch data must be 2-D and non-empty, got {self.data.shape}")
        if self.scale <= 0:
            raise ValueError(f"patch scale must be > 0, got {self.scale}")
        self.angle = wrap_angle(self.angle)


def _bilinear(grid: np.ndarray, sx: np.ndarray, sy: np.ndarray,
              replicate: bool) -> np.ndarray:
    """Sample grid at float coords (sx, sy); clamp to the edge or zero-fill."""
    h, w = grid.shape
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0

    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)

    v00 = grid[y0c, x0c]
    v01 = grid[y0c, x1c]
    v10 = grid[y1c, x0c]
    v11 = grid[y1c, x1c]
    out = (v00 * (1 - fy) * (1 - fx) + v01 * (1 - fy) * fx
           + v10 * fy * (1 - fx) + v11 * fy * fx)
    if not replicate:
        inside = (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)
        out = np.where(inside, out, 0.0)
    return out


def extract_patch(img: Image, center, base_size, scale: float, out_size) -> Patch:
    """Cut a scaled region around a sub-pixel center and resample it.

    Args:
        img: source frame.
        center: (x, y) region center, sub-pixel.
        base_size: (w, h) base region size in pixels.
        scale: multiplies base_size; the cut region is base_size * scale.
        out_size: (P, Q) = (rows, cols) of the resampled output.

    Out-of-frame samples replicate the nearest edge pixel. When the region is
    integer-aligned, fully inside the frame and out_size equals the region
    size, the result is an exact pixel copy.
    """
    w, h = float(base_size[0]), float(base_size[1])
    if w <= 0 or h <= 0:
        raise ValueError(f"base_size must be positive, got {base_size}")
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    rows, cols = int(out_size[0]), int(out_size[1])
    if rows < 1 or cols < 1:
        raise ValueError(f"out_size must be at least 1x1, got {out_size}")
    cx, cy = float(center[0]), float(center[1])
    crop_w = w * scale
    crop_h = h * scale
    # Output sample j sits at the center of its cell inside the crop region;
    # -0.5 converts from region coordinates to pixel-center coordinates.
    xs = cx - crop_w / 2.0 + (np.arange(cols) + 0.5) * (crop_w / cols) - 0.5
    ys = cy - crop_h / 2.0 + (np.arange(rows) + 0.5) * (crop_h / rows) - 0.5
    sx, sy = np.meshgrid(xs, ys)
    data = _bilinear(img.data, sx, sy, replicate=True)
    return Patch(data, center=(cx, cy), scale=float(scale))


def rotate_patch(p: Patch, theta: float) -> Patch:
    """Rotate patch content anticlockwise by theta degrees about its center.

    Output pixel (m', n') samples the input at
        [n; m] = [cos -sin; sin cos] [n'; m']
    in centered coordinates, with bilinear interpolation and zeros outside
    the source support. theta = 0 is an exact identity and multiples of 90
    degrees on square patches reduce to index permutations.
    """
    rows, cols = p.data.shape
    t = math.radians(theta)
    c, s = math.cos(t), math.sin(t)
    cy = (rows - 1) / 2.0
    cx = (cols - 1) / 2.0
    nn, mm = np.meshgrid(np.arange(cols) - cx, np.arange(rows) - cy)
    sx = c * nn - s * mm + cx
    sy = s * nn + c * mm + cy
    data = _bilinear(p.data, sx, sy, replicate=False)
    return Patch(data, center=p.center, scale=p.scale,
                 angle=wrap_angle(p.angle + theta))


def cosine_window(p: Patch) -> Patch:
    """Band the patch with a Hann window to fade out borders and zero fill."""
    return Patch(p.data * hann2d(*p.data.shape), center=p.center,
                 scale=p.scale, angle=p.angle)
