"""Overlap metrics and the failure/reset evaluation protocol.

Boxes are compared as convex quadrilaterals: the intersection is built by
clipping one quad against the other's edges, areas come from the shoelace
formula. A frame with zero overlap counts as a failure; the tracker is
restarted from ground truth after a fixed number of skipped frames, and
skipped frames are excluded from the aggregates.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .imaging import Image, load_frame
from . import tracker as _tracker
from .tracker import RotatedBox

SKIP_AFTER_FAILURE = 5


class SequenceError(Exception):
    """Sequence directory is unusable: missing frames or bad annotations."""


def shoelace_area(poly: np.ndarray) -> float:
    """Signed area of a polygon given as (n, 2) vertices."""
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _clip_halfplane(poly, a, b):
    """Keep the part of poly on the left of directed edge a->b."""
    ex, ey = b[0] - a[0], b[1] - a[1]

    def side(p):
        return ex * (p[1] - a[1]) - ey * (p[0] - a[0])

    out = []
    n = len(poly)
    for i in range(n):
        p = poly[i]
        q = poly[(i + 1) % n]
        sp, sq = side(p), side(q)
        if sp <= 0:
            out.append(p)
        if (sp < 0) != (sq < 0) and sp != sq:
            t = sp / (sp - sq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _ccw(poly: np.ndarray) -> np.ndarray:
    return poly if shoelace_area(poly) >= 0 else poly[::-1]


def polygon_iou(p: np.ndarray, q: np.ndarray) -> float:
    """Intersection over union of two convex polygons, each (n, 2)."""
    p = _ccw(np.asarray(p, dtype=np.float64))
    q = _ccw(np.asarray(q, dtype=np.float64))
    area_p = abs(shoelace_area(p))
    area_q = abs(shoelace_area(q))
    if area_p == 0.0 or area_q == 0.0:
        return 0.0
    # clip p against q; CCW means inside is the right of each edge, so flip
    clipped = [tuple(v) for v in p]
    for i in range(len(q)):
        if not clipped:
            break
        clipped = _clip_halfplane(clipped, q[(i + 1) % len(q)], q[i])
    if len(clipped) < 3:
        return 0.0
    inter = abs(shoelace_area(np.asarray(clipped)))
    union = area_p + area_q - inter
    if union <= 0.0:
        return 0.0
    return min(1.0, inter / union)


def box_from_corners(corners: np.ndarray) -> RotatedBox:
    """Fit an oriented box onto four corners written by corners()."""
    c = np.asarray(corners, dtype=np.float64).reshape(4, 2)
    center = c.mean(axis=0)
    top = c[1] - c[0]
    bot = c[2] - c[3]
    left = c[3] - c[0]
    right = c[2] - c[1]
    width = 0.5 * (np.hypot(*top) + np.hypot(*bot))
    height = 0.5 * (np.hypot(*left) + np.hypot(*right))
    # corner 0 -> 1 is R(angle) (w, 0) = w (cos, -sin)
    angle = np.degrees(np.arctan2(-top[1], top[0]))
    return RotatedBox((center[0], center[1]), width, height, angle)


def load_annotations(path: str) -> np.ndarray:
    """Reads corner annotations: one frame per line, eight floats."""
    rows = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line == "absent":
                rows.append(np.full((4, 2), np.nan))
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise SequenceError(
                    f"{path}:{ln}: expected 8 coordinates, got {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise SequenceError(f"{path}:{ln}: {exc}") from None
            rows.append(np.asarray(vals).reshape(4, 2))
    if not rows:
        raise SequenceError(f"{path}: no annotation lines")
    if not np.isfinite(rows[0]).all():
        raise SequenceError(f"{path}: first frame must have a box")
    return np.stack(rows)


def load_sequence(seq_dir: str):
    """Returns (frame paths, ground-truth corner stack) for a directory."""
    if not os.path.isdir(seq_dir):
        raise SequenceError(f"not a directory: {seq_dir}")
    names = sorted(n for n in os.listdir(seq_dir)
                   if n.lower().endswith(".png"))
    if not names:
        raise SequenceError(f"{seq_dir}: no .png frames")
    gt_path = os.path.join(seq_dir, "groundtruth.txt")
    if not os.path.isfile(gt_path):
        raise SequenceError(f"{seq_dir}: missing groundtruth.txt")
    gt = load_annotations(gt_path)
    if len(gt) != len(names):
        raise SequenceError(
            f"{seq_dir}: {len(names)} frames but {len(gt)} annotations")
    return [os.path.join(seq_dir, n) for n in names], gt


@dataclass
class RunReport:
    """Protocol outcome over one sequence."""

    n_frames: int
    n_failures: int
    n_skipped: int
    mean_iou: float
    precision_20: float
    mean_fpe: float
    ious: np.ndarray          # per frame; NaN where not evaluated
    center_errors: np.ndarray
    fpe_scores: np.ndarray
    resets: tuple[int, ...] = ()   # frame indices where overlap hit zero

    def summary_line(self) -> str:
        return (f"frames={self.n_frames} failures={self.n_failures} "
                f"skipped={self.n_skipped} mean_iou={self.mean_iou:.4f} "
                f"precision20={self.precision_20:.4f} "
                f"mean_fpe={self.mean_fpe:.4f}")


def _as_image(frame) -> Image:
    if isinstance(frame, Image):
        return frame
    if isinstance(frame, str):
        return load_frame(frame)
    return Image(np.asarray(frame, dtype=np.float64))


def precision_at(center_errors: np.ndarray, radius: float = 20.0) -> float:
    errs = center_errors[np.isfinite(center_errors)]
    if errs.size == 0:
        return 0.0
    return float(np.mean(errs <= radius))


def run_protocol(frames, gt: np.ndarray, cfg: RunConfig, *,
                 init_fn=_tracker.init, step_fn=_tracker.step,
                 skip=SKIP_AFTER_FAILURE) -> RunReport:
    """Track with ground-truth restarts after total losses.

    frames may be paths, arrays or Image objects; they are loaded lazily so
    long sequences do not need to reside in memory at once. Frame 0 (and
    every reinit frame) is initialization, not evaluation.
    """
    n = len(frames)
    if len(gt) != n:
        raise ValueError(f"{n} frames but {len(gt)} annotations")
    ious = np.full(n, np.nan)
    errors = np.full(n, np.nan)
    fpes = np.full(n, np.nan)
    failures = 0
    skipped = 0
    resets = []

    state = init_fn(_as_image(frames[0]), box_from_corners(gt[0]), cfg)
    k = 1
    while k < n:
        state, box = step_fn(state, _as_image(frames[k]))
        last = getattr(state, "last", None)
        if last is not None:
            fpes[k] = last.fpe_score
        if not np.isfinite(gt[k]).all():
            # annotated absent: tracker runs but the frame is not scored
            k += 1
            continue
        iou = polygon_iou(box.corners(), gt[k])
        ious[k] = iou
        gc = gt[k].mean(axis=0)
        errors[k] = float(np.hypot(box.center[0] - gc[0],
                                   box.center[1] - gc[1]))
        if iou == 0.0:
            failures += 1
            resets.append(k)
            restart = k + skip + 1
            skipped += min(skip, max(0, n - 1 - k))
            while restart < n and not np.isfinite(gt[restart]).all():
                restart += 1
            k = restart
            if k < n:
                state = init_fn(_as_image(frames[k]), box_from_corners(gt[k]),
                                cfg)
                k += 1
            continue
        k += 1

    valid = np.isfinite(ious)
    mean_iou = float(np.mean(ious[valid])) if valid.any() else 0.0
    if not valid.any():
        import warnings
        warnings.warn("no evaluated frames in sequence", stacklevel=2)
    fpe_valid = np.isfinite(fpes)
    mean_fpe = float(np.mean(fpes[fpe_valid])) if fpe_valid.any() else 0.0
    return RunReport(n_frames=n, n_failures=failures, n_skipped=skipped,
                     mean_iou=mean_iou, precision_20=precision_at(errors),
                     mean_fpe=mean_fpe, ious=ious, center_errors=errors,
                     fpe_scores=fpes, resets=tuple(resets))
