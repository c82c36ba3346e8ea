"""Hand-crafted appearance features on a cell grid.

Channel 0 is cell-averaged grayscale, channels 1..9 a 9-bin unsigned
gradient-orientation histogram per cell. Every channel is forced to zero
spatial mean and then tapered with a Hann window, the usual convention for
circular-correlation training where border wraparound must not dominate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .patch import Patch, hann2d

N_BINS = 9
BIN_WIDTH = 180.0 / N_BINS
NORM_EPS = 1e-3


@dataclass
class FeatureMap:
    """(d, M, N) feature stack on the cell grid."""

    data: np.ndarray
    cell_size: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ValueError(f"feature data must be (d, M, N), got {self.data.shape}")
        d, m, n = self.data.shape
        if d < 1 or m < 4 or n < 4:
            raise ValueError(f"feature map too small: d={d}, M={m}, N={n}")
        if not np.isfinite(self.data).all():
            raise ValueError("feature values must be finite")

    @property
    def shape(self):
        return self.data.shape


def _gradients(img: np.ndarray):
    """Centered differences with replicate boundary handling."""
    padded = np.pad(img, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) * 0.5
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) * 0.5
    return gx, gy


def extract_features(p: Patch, cell_size: int) -> FeatureMap:
    """Reduce a pixel patch to the (1 + 9)-channel cell-grid representation.

    Args:
        p: windowed pixel patch, intensities in [0, 255].
        cell_size: square cell side in pixels; must divide both patch dims.

    The grayscale channel is normalized to [-0.5, 0.5] before cell pooling.
    Orientations are unsigned (mod 180 degrees) with soft linear binning,
    magnitude weighted, and each cell histogram is L2-normalized as
    h / sqrt(|h|^2 + eps^2). Gradient channels are therefore invariant to
    positive intensity scaling up to the eps floor, and every channel is
    invariant to a constant intensity offset.
    """
    cell = int(cell_size)
    if cell < 1:
        raise ValueError(f"cell_size must be >= 1, got {cell_size}")
    rows, cols = p.data.shape
    if rows % cell or cols % cell:
        raise ValueError(
            f"patch shape {p.data.shape} not divisible by cell_size {cell}")
    m, n = rows // cell, cols // cell

    gray = p.data / 255.0 - 0.5
    ch0 = gray.reshape(m, cell, n, cell).mean(axis=(1, 3))

    gx, gy = _gradients(p.data)
    mag = np.hypot(gx, gy)
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    t = ang / BIN_WIDTH
    b0 = np.floor(t).astype(np.int64) % N_BINS
    b1 = (b0 + 1) % N_BINS
    w1 = t - np.floor(t)
    w0 = 1.0 - w1

    hist = np.empty((N_BINS, m, n))
    for k in range(N_BINS):
        contrib = mag * (w0 * (b0 == k) + w1 * (b1 == k))
        hist[k] = contrib.reshape(m, cell, n, cell).sum(axis=(1, 3))
    norm = np.sqrt(np.sum(hist * hist, axis=0) + NORM_EPS ** 2)
    hist /= norm

    data = np.concatenate([ch0[None], hist], axis=0)
    # Zero spatial mean per channel before windowing; keeps the learned
    # filter from latching onto the DC component.
    data -= data.mean(axis=(1, 2), keepdims=True)
    data *= hann2d(m, n)[None]
    return FeatureMap(data, cell_size=cell)
