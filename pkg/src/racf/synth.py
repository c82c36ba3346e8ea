"""Synthetic grayscale sequences with exact ground truth.

A textured rectangle moves over a smooth noise background under scripted
rotation, scaling, translation and per-frame gain/offset changes. Rendering
samples the target template with the inverse warp and composites with the
bilinearly interpolated coverage mask, so ground-truth corner coordinates
are exact by construction. All randomness comes from one seeded generator;
a given spec renders byte-identical frames on every run.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PILImage
from scipy.ndimage import gaussian_filter, gaussian_filter1d

from .patch import _bilinear
from .tracker import RotatedBox

TARGET_LOW = 40.0
TARGET_HIGH = 230.0
BG_LOW = 60.0
BG_HIGH = 190.0

SCENARIOS = ("rotation", "translation", "scale", "illumination",
             "fpe-twins", "mixed")


@dataclass
class SceneSpec:
    """Fully scripted scene: per-frame pose, photometry and decoy placement.

    Target and background textures draw from independent seeded streams;
    both default to values derived from the master seed.
    """

    name: str
    seed: int
    size: tuple[int, int]              # frame (width, height)
    target_size: tuple[int, int]       # template (width, height), unit scale
    centers: np.ndarray                # (n, 2) target center per frame, (x, y)
    angles: np.ndarray                 # (n,) degrees
    scales: np.ndarray                 # (n,)
    gains: np.ndarray                  # (n,)
    offsets: np.ndarray                # (n,)
    decoy_centers: np.ndarray | None = None   # (n, 2) or None
    target_seed: int | None = None
    background_seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.centers)
        for attr in ("angles", "scales", "gains", "offsets"):
            if len(getattr(self, attr)) != n:
                raise ValueError(f"{attr} length mismatch: expected {n}")
        if self.decoy_centers is not None and len(self.decoy_centers) != n:
            raise ValueError("decoy_centers length mismatch")
        if np.any(np.asarray(self.gains) <= 0):
            raise ValueError("gains must be positive")
        if self.target_seed is None:
            self.target_seed = self.seed
        if self.background_seed is None:
            self.background_seed = self.seed + 7919

    @property
    def n_frames(self) -> int:
        return len(self.centers)


def _normalized(a: np.ndarray) -> np.ndarray:
    lo, hi = float(a.min()), float(a.max())
    if hi - lo < 1e-12:
        return np.zeros_like(a)
    return (a - lo) / (hi - lo)


def make_target_texture(rng: np.random.Generator,
                        size: tuple[int, int]) -> np.ndarray:
    """Checker plus smoothed noise plus one off-center blob.

    The blob breaks the checker's 90 degree self-similarity so orientation
    is recoverable; values stay inside [40, 230] leaving headroom for
    gain/offset sweeps before clipping.
    """
    w, h = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    checker = ((yy // 8).astype(int) + (xx // 8).astype(int)) % 2
    noise = _normalized(gaussian_filter(rng.standard_normal((h, w)), 1.5))
    tex = 0.55 * checker + 0.45 * noise
    bx, by = 0.30 * w, 0.30 * h
    blob = np.exp(-(((xx - bx) / (0.16 * w)) ** 2
                    + ((yy - by) / (0.16 * h)) ** 2))
    tex = _normalized(tex + 0.9 * blob)
    return TARGET_LOW + tex * (TARGET_HIGH - TARGET_LOW)


def make_background(rng: np.random.Generator,
                    size: tuple[int, int]) -> np.ndarray:
    """Smooth noise field plus fixed black/white reference patches.

    The two corner patches anchor the frame extremes, so a per-frame
    gain/offset sweep stays exactly invertible by min-max stretching;
    without them the stretch normalization wobbles with whatever pixel
    happens to be darkest that frame.
    """
    w, h = size
    field_ = _normalized(gaussian_filter(rng.standard_normal((h, w)), 6.0))
    bg = BG_LOW + field_ * (BG_HIGH - BG_LOW)
    bg[2:7, 2:7] = 0.0
    bg[2:7, w - 7:w - 2] = 255.0
    return bg


def _composite(canvas: np.ndarray, tex: np.ndarray, center, scale: float,
               angle_deg: float) -> None:
    """Paint one sprite in place; coverage-weighted against the canvas.

    Template coordinates of a frame pixel p are M(angle) (p - c) / s plus
    the template center, with M = [[cos, -sin], [sin, cos]] acting on
    (x, y); the box corner convention inverts this exactly.
    """
    th, tw = tex.shape
    cx, cy = float(center[0]), float(center[1])
    t = math.radians(angle_deg)
    co, si = math.cos(t), math.sin(t)
    rad = 0.5 * scale * math.hypot(tw, th) + 2.0
    x0 = max(0, int(math.floor(cx - rad)))
    x1 = min(canvas.shape[1] - 1, int(math.ceil(cx + rad)))
    y0 = max(0, int(math.floor(cy - rad)))
    y1 = min(canvas.shape[0] - 1, int(math.ceil(cy + rad)))
    if x0 > x1 or y0 > y1:
        return
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1].astype(np.float64)
    dx = xs - cx
    dy = ys - cy
    u = (co * dx - si * dy) / scale + (tw - 1) / 2.0
    v = (si * dx + co * dy) / scale + (th - 1) / 2.0
    colors = _bilinear(tex, u, v, False)
    alpha = _bilinear(np.ones_like(tex), u, v, False)
    region = canvas[y0:y1 + 1, x0:x1 + 1]
    region *= 1.0 - alpha
    region += colors


def render_sequence(spec: SceneSpec):
    """Returns (frames, boxes): uint8 arrays and per-frame ground truth."""
    tex = make_target_texture(np.random.default_rng(spec.target_seed),
                              spec.target_size)
    bg = make_background(np.random.default_rng(spec.background_seed),
                         spec.size)
    frames = []
    boxes = []
    for k in range(spec.n_frames):
        canvas = bg.copy()
        s = float(spec.scales[k])
        a = float(spec.angles[k])
        if spec.decoy_centers is not None:
            _composite(canvas, tex, spec.decoy_centers[k], s, a)
        _composite(canvas, tex, spec.centers[k], s, a)
        canvas = canvas * float(spec.gains[k]) + float(spec.offsets[k])
        frames.append(np.rint(np.clip(canvas, 0, 255)).astype(np.uint8))
        boxes.append(RotatedBox((float(spec.centers[k][0]),
                                 float(spec.centers[k][1])),
                                spec.target_size[0] * s,
                                spec.target_size[1] * s, a))
    return frames, boxes


def _smooth_walk(rng: np.random.Generator, n: int, sigma: float,
                 smooth: float = 3.0) -> np.ndarray:
    """Zero-start random walk, low-pass filtered to look like hand shake."""
    steps = rng.standard_normal((n, 2)) * sigma
    path = np.cumsum(steps, axis=0)
    path = gaussian_filter1d(path, smooth, axis=0)
    return path - path[0]


def _const(n, value):
    return np.full(n, float(value))


def build_scenario(name: str, seed: int, n_frames: int | None = None,
                   size: tuple[int, int] = (192, 192),
                   target_size: tuple[int, int] = (48, 48)) -> SceneSpec:
    """Scripted parameter schedules for the stock test scenes."""
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}, pick one of {SCENARIOS}")
    rng = np.random.default_rng(seed + 0x5CE11E)
    w, h = size
    mid = np.array([w / 2.0, h / 2.0])
    params: dict = {}
    decoys = None

    if name == "rotation":
        n = 60 if n_frames is None else n_frames
        centers = np.tile(mid, (n, 1))
        angles = 3.0 * np.arange(n)
        scales = _const(n, 1.0)
        gains = _const(n, 1.0)
        offsets = _const(n, 0.0)
        params["deg_per_frame"] = 3.0
    elif name == "translation":
        n = 40 if n_frames is None else n_frames
        start = np.array([0.32 * w, 0.36 * h])
        vel = np.array([2.2, 1.4])
        centers = start + vel * np.arange(n)[:, None]
        angles = _const(n, 0.0)
        scales = _const(n, 1.0)
        gains = _const(n, 1.0)
        offsets = _const(n, 0.0)
        params["velocity"] = "2.2,1.4"
    elif name == "scale":
        n = 40 if n_frames is None else n_frames
        centers = np.tile(mid, (n, 1))
        angles = _const(n, 0.0)
        scales = 1.004 ** np.arange(n)
        gains = _const(n, 1.0)
        offsets = _const(n, 0.0)
        params["growth_per_frame"] = 1.004
    elif name == "illumination":
        n = 48 if n_frames is None else n_frames
        start = np.array([0.30 * w, 0.42 * h])
        centers = start + np.array([1.2, 0.0]) * np.arange(n)[:, None] \
            + _smooth_walk(rng, n, 0.4)
        angles = _const(n, 0.0)
        scales = _const(n, 1.0)
        # ramp down to 0.4 then hold there, so the appearance model must
        # survive a long dim stretch, not just a transient
        down = max(2, int(round(n * 5 / 12)))
        gains = np.concatenate([np.linspace(1.0, 0.4, down),
                                np.full(n - down, 0.4)])
        offsets = _const(n, 0.0)
        params["gain_ramp"] = "1.0->0.4 hold"
    elif name == "fpe-twins":
        n = 40 if n_frames is None else n_frames
        target_size = (36, 36)
        anchor = np.array([0.36 * w, 0.5 * h])
        centers = anchor + _smooth_walk(rng, n, 0.3)
        gap0, gap1 = 66.0, 44.0
        gaps = np.linspace(gap0, gap1, n)
        decoys = centers + np.stack([gaps, np.zeros(n)], axis=1)
        angles = _const(n, 0.0)
        scales = _const(n, 1.0)
        gains = _const(n, 1.0)
        offsets = _const(n, 0.0)
        params["twin_gap"] = f"{gap0}->{gap1}"
    else:  # mixed
        n = 50 if n_frames is None else n_frames
        drift = np.array([0.7, 0.45]) * np.arange(n)[:, None]
        centers = np.array([0.40 * w, 0.42 * h]) + drift \
            + _smooth_walk(rng, n, 0.5)
        angles = 2.0 * np.arange(n)
        scales = 1.002 ** np.arange(n)
        gains = np.linspace(1.0, 0.55, n)
        offsets = np.linspace(0.0, 6.0, n)
        params["deg_per_frame"] = 2.0
        params["gain_ramp"] = "1.0->0.55"

    return SceneSpec(name=name, seed=seed, size=size, target_size=target_size,
                     centers=centers, angles=np.asarray(angles, float),
                     scales=np.asarray(scales, float),
                     gains=np.asarray(gains, float),
                     offsets=np.asarray(offsets, float),
                     decoy_centers=decoys, params=params)


def write_sequence(out_dir: str, spec: SceneSpec) -> None:
    """Render and store frames, corner annotations and the scene manifest.

    Layout: NNNN.png (1-based), groundtruth.txt with one line of eight
    comma-separated corner coordinates per frame, manifest.txt with
    key=value pairs.
    """
    frames, boxes = render_sequence(spec)
    os.makedirs(out_dir, exist_ok=True)
    for i, frame in enumerate(frames):
        PILImage.fromarray(frame, mode="L").save(
            os.path.join(out_dir, f"{i + 1:04d}.png"))
    with open(os.path.join(out_dir, "groundtruth.txt"), "w") as fh:
        for box in boxes:
            cs = box.corners().reshape(-1)
            fh.write(",".join(f"{c:.3f}" for c in cs) + "\n")
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        fh.write(f"scenario={spec.name}\n")
        fh.write(f"seed={spec.seed}\n")
        fh.write(f"target_seed={spec.target_seed}\n")
        fh.write(f"background_seed={spec.background_seed}\n")
        fh.write(f"frames={spec.n_frames}\n")
        fh.write(f"width={spec.size[0]}\n")
        fh.write(f"height={spec.size[1]}\n")
        fh.write(f"target_width={spec.target_size[0]}\n")
        fh.write(f"target_height={spec.target_size[1]}\n")
        for key in sorted(spec.params):
            fh.write(f"{key}={spec.params[key]}\n")
