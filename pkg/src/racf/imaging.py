"""Grayscale frame loading and illumination correction.

Frames are kept as float64 intensities in [0, 255]. Color inputs are reduced
to luminance up front so the rest of the pipeline only ever sees one channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage
from PIL import UnidentifiedImageError
from scipy.ndimage import gaussian_filter

# ITU-R BT.601 luminance weights.
LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114


class UnsupportedImageError(ValueError):
    """File exists but cannot be decoded as a supported raster image."""


@dataclass
class Image:
    """Single-channel frame. data is (H, W) float64, finite, in [0, 255]."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.size == 0:
            raise ValueError(
                f"image data must be a non-empty 2-D array, got shape {self.data.shape}"
            )
        if not np.isfinite(self.data).all():
            raise ValueError("image intensities must be finite")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def load_frame(path) -> Image:
    """Load a PNG/PGM/PPM frame and reduce it to luminance.

    Color frames are combined as 0.299 R + 0.587 G + 0.114 B without
    rounding, so e.g. pure red maps to 76.245 rather than an integer.
    """
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"frame not found: {p}")
    try:
        with _PILImage.open(p) as im:
            im.load()
            if im.mode in ("P", "PA", "RGBA", "LA"):
                im = im.convert("RGB")
            if im.mode == "RGB":
                rgb = np.asarray(im, dtype=np.float64)
                data = rgb[..., 0] * LUMA_R + rgb[..., 1] * LUMA_G + rgb[..., 2] * LUMA_B
            elif im.mode in ("L", "I", "I;16"):
                data = np.asarray(im, dtype=np.float64)
            else:
                raise UnsupportedImageError(f"unsupported image mode {im.mode!r}: {p}")
    except UnidentifiedImageError as exc:
        raise UnsupportedImageError(f"cannot decode image file: {p}") from exc
    except OSError as exc:
        raise UnsupportedImageError(f"corrupt image file: {p}") from exc
    return Image(np.clip(data, 0.0, 255.0))


def contrast_stretch(img: Image) -> Image:
    """Min-max stretch to the full [0, 255] range.

    A constant image has no contrast to stretch and is returned unchanged.
    Already full-range images come back identical, so the operation is
    idempotent.
    """
    lo = img.data.min()
    hi = img.data.max()
    if hi - lo <= 0.0:
        return Image(img.data.copy())
    if lo == 0.0 and hi == 255.0:
        return Image(img.data.copy())
    # divide before scaling so min/max land exactly on 0 and 255
    return Image((img.data - lo) / (hi - lo) * 255.0)


def unsharp_mask(img: Image, amount: float = 0.8, sigma: float = 1.0,
                 threshold: float = 0.5) -> Image:
    """Sharpen by adding back a thresholded high-pass residual.

    h = in - GaussianBlur(in, sigma); out = in + amount * h wherever
    |h| / 255 exceeds threshold, else out = in. The result is clamped back
    into [0, 255].

    Args:
        amount: gain on the residual, >= 0.
        sigma: Gaussian blur width in pixels, > 0.
        threshold: relative residual magnitude below which pixels pass
            through untouched, in [0, 1].
    """
    if amount < 0:
        raise ValueError(f"amount must be >= 0, got {amount}")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    blurred = gaussian_filter(img.data, sigma=sigma, mode="nearest")
    h = img.data - blurred
    out = img.data.copy()
    mask = np.abs(h) / 255.0 > threshold
    out[mask] += amount * h[mask]
    return Image(np.clip(out, 0.0, 255.0))


def illumination_correct(img: Image, amount: float = 0.8, sigma: float = 1.0,
                         threshold: float = 0.5) -> Image:
    """Contrast stretch followed by unsharp masking.

    Applied identically to training and detection frames so the filter sees
    a stable appearance under gain and offset drift in the input.
    """
    return unsharp_mask(contrast_stretch(img), amount=amount, sigma=sigma,
                        threshold=threshold)
