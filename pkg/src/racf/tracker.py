"""Frame-to-frame tracking loop tying the pieces together.

Per frame: illumination-correct, search scales and orientations around the
previous pose, smooth the detected displacement, then update the appearance
model with a de-rotated training sample and a few warm-started solver
sweeps. The sample memory always stores the target in its canonical (first
frame) orientation; the detected angle is only applied when cutting patches
and reporting boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig
from .dcf import (CorrelationFilter, SampleMemory, make_labels,
                  make_reg_weights, train, update_memory)
from .detect import DetectionResult, SearchConfig, detect, sample_features
from .imaging import Image, illumination_correct
from .motion import MotionHistory, push, smooth_update
from .patch import wrap_angle

MIN_CELLS = 8
MAX_CELLS = 64


@dataclass
class RotatedBox:
    """Oriented rectangle: center (x, y), size, angle in degrees."""

    center: tuple[float, float]
    width: float
    height: float
    angle: float = 0.0

    def __post_init__(self):
        self.center = (float(self.center[0]), float(self.center[1]))
        self.width = float(self.width)
        self.height = float(self.height)
        self.angle = wrap_angle(self.angle)

    def corners(self) -> np.ndarray:
        """(4, 2) corner coordinates, center + R(angle) (+-w/2, +-h/2)."""
        t = math.radians(self.angle)
        c, s = math.cos(t), math.sin(t)
        offs = np.array([[-self.width / 2, -self.height / 2],
                         [self.width / 2, -self.height / 2],
                         [self.width / 2, self.height / 2],
                         [-self.width / 2, self.height / 2]])
        rot = np.array([[c, s], [-s, c]])
        return offs @ rot.T + np.array(self.center)


@dataclass
class FrameRecord:
    """One output row: reported box plus detection diagnostics."""

    frame_index: int
    box: RotatedBox
    theta: float
    scale: float
    raw_score: float
    fpe_score: float
    confident: bool

    def csv_row(self) -> str:
        xs = self.box.corners().reshape(-1)
        coords = ",".join(repr(float(c)) for c in xs)
        return (f"{self.frame_index},{coords},{self.box.angle!r},"
                f"{self.scale!r},{self.raw_score!r},{self.fpe_score!r},"
                f"{int(self.confident)}")

    @staticmethod
    def csv_header() -> str:
        return ("frame,x1,y1,x2,y2,x3,y3,x4,y4,"
                "theta,scale,raw_score,fpe_score,confident")


@dataclass
class TrackerState:
    cfg: RunConfig
    center: tuple[float, float]
    base_size: tuple[float, float]
    scale: float
    theta: float
    angle_offset: float
    search_size: tuple[float, float]
    model_size: tuple[int, int]
    cell_size: int
    labels: object
    reg: object
    memory: SampleMemory
    filt: CorrelationFilter
    motion: MotionHistory
    frame_index: int
    last: FrameRecord | None = None
    last_det: DetectionResult | None = None

    def current_box(self) -> RotatedBox:
        return RotatedBox(self.center, self.base_size[0] * self.scale,
                          self.base_size[1] * self.scale,
                          self.angle_offset + self.theta)


def _search_config(cfg: RunConfig) -> SearchConfig:
    return SearchConfig(
        scales=cfg.scales, scale_step=cfg.scale_step,
        rot_halfcount=cfg.rot_halfcount if cfg.use_rotation else 0,
        rot_delta=cfg.rot_delta, fpe_rho=cfg.fpe_rho,
        newton_iters=cfg.newton_iters, fpe_enabled=cfg.use_fpe,
        min_confidence=cfg.min_confidence)


def _preprocess(frame: Image, cfg: RunConfig) -> Image:
    if not cfg.use_ic:
        return frame
    return illumination_correct(frame, amount=cfg.ic_amount,
                                sigma=cfg.ic_sigma, threshold=cfg.ic_threshold)


def _model_geometry(base_size, cfg: RunConfig):
    """Search region and fixed model raster for a given target size."""
    search_w = base_size[0] * cfg.search_padding
    search_h = base_size[1] * cfg.search_padding
    cells_y = int(np.clip(round(search_h / cfg.cell_size), MIN_CELLS, MAX_CELLS))
    cells_x = int(np.clip(round(search_w / cfg.cell_size), MIN_CELLS, MAX_CELLS))
    model = (cells_y * cfg.cell_size, cells_x * cfg.cell_size)
    return (search_w, search_h), model


def init(frame: Image, box: RotatedBox, cfg: RunConfig) -> TrackerState:
    """Build the initial state and cold-train the filter on frame one.

    The box orientation on the first frame defines the canonical appearance;
    the internal angle starts at zero and later detections are reported
    relative to it.
    """
    if box.width <= 0 or box.height <= 0:
        raise ValueError(f"degenerate init box: {box.width} x {box.height}")
    cx, cy = box.center
    if not (0 <= cx < frame.width and 0 <= cy < frame.height):
        raise ValueError(f"init box center {box.center} outside the frame")

    search, model = _model_geometry((box.width, box.height), cfg)
    cells_y = model[0] // cfg.cell_size
    cells_x = model[1] // cfg.cell_size
    # Target extent on the cell grid, after resampling the search region.
    th = box.height * model[0] / search[1] / cfg.cell_size
    tw = box.width * model[1] / search[0] / cfg.cell_size
    labels = make_labels(cells_y, cells_x, cfg.sigma_factor * math.sqrt(th * tw))
    reg = make_reg_weights(cells_y, cells_x, (th, tw), cfg.reg_min, cfg.reg_scale)

    frame_ic = _preprocess(frame, cfg)
    x0 = sample_features(frame_ic, box.center, search, 1.0, model, 0.0,
                         cfg.cell_size)
    memory = update_memory(SampleMemory(capacity=cfg.memory_capacity), x0, 0.0,
                           cfg.learning_rate)
    filt = train(memory, labels, reg, prev=None, iters=cfg.cold_sweeps,
                 tol=cfg.solver_tol, trunc=cfg.reg_trunc)
    motion = push(MotionHistory(), box.center)
    state = TrackerState(
        cfg=cfg, center=box.center, base_size=(box.width, box.height),
        scale=1.0, theta=0.0, angle_offset=box.angle, search_size=search,
        model_size=model, cell_size=cfg.cell_size, labels=labels, reg=reg,
        memory=memory, filt=filt, motion=motion, frame_index=0)
    state.last = FrameRecord(0, state.current_box(), box.angle, 1.0,
                             1.0, 1.0, True)
    return state


def step(state: TrackerState, frame: Image) -> tuple[TrackerState, RotatedBox]:
    """Track one frame; returns the advanced state and the reported box.

    Low-confidence detections (raw score under the configured floor) hold
    the pose and skip the model update entirely.
    """
    cfg = state.cfg
    frame_ic = _preprocess(frame, cfg)
    det = detect(state.filt, frame_ic, state, _search_config(cfg))

    idx = state.frame_index + 1
    if not det.confident:
        held = state.current_box()
        record = FrameRecord(idx, held, held.angle, state.scale,
                             det.raw_score, det.fpe_score, False)
        new_state = replace(state, frame_index=idx,
                            motion=push(state.motion, state.center),
                            last=record, last_det=det)
        return new_state, held

    raw = (state.center[0] + det.dx, state.center[1] + det.dy)
    if cfg.use_dc:
        smoothed = smooth_update(state.motion, raw, cfg.omega_d, cfg.omega_a)
    else:
        smoothed = smooth_update(state.motion, raw, 1.0, 1.0)
    new_scale = state.scale * det.scale_factor
    theta = wrap_angle(det.theta)

    x = sample_features(frame_ic, smoothed, state.search_size, new_scale,
                        state.model_size, theta, cfg.cell_size)
    memory = update_memory(state.memory, x, theta, cfg.learning_rate)
    filt = train(memory, state.labels, state.reg, prev=state.filt,
                 iters=cfg.warm_sweeps, tol=cfg.solver_tol, trunc=cfg.reg_trunc)

    box = RotatedBox(smoothed, state.base_size[0] * new_scale,
                     state.base_size[1] * new_scale,
                     state.angle_offset + theta)
    record = FrameRecord(idx, box, box.angle, new_scale, det.raw_score,
                         det.fpe_score, True)
    new_state = replace(state, center=smoothed, scale=new_scale, theta=theta,
                        memory=memory, filt=filt,
                        motion=push(state.motion, smoothed),
                        frame_index=idx, last=record, last_det=det)
    return new_state, box


def run_sequence(frames, box: RotatedBox, cfg: RunConfig):
    """Track an iterable of frames; returns (records, final_state)."""
    it = iter(frames)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("sequence has no frames") from None
    state = init(first, box, cfg)
    records = [state.last]
    for frame in it:
        state, _ = step(state, frame)
        records.append(state.last)
    return records, state
