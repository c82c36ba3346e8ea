"""Rotation-adaptive correlation filter tracking.

A discriminative correlation filter with spatial regularization, trained
in the Fourier domain by block Gauss-Seidel sweeps over a growing sample
memory. Detection searches a scale/orientation grid, weights score peaks
against a motion prior to drop duplicated distractors, refines the best
peak to sub-cell accuracy with Newton steps on the trigonometric
interpolant, and smooths the reported displacement over recent history.
Frames pass through contrast stretching and thresholded unsharp masking
before any sampling.
"""

from .config import RunConfig, load_config, parse_config
from .dcf import (CorrelationFilter, SampleMemory, dump_filter, load_filter,
                  make_labels, make_reg_weights, response, train,
                  training_cost, update_memory)
from .detect import DetectionResult, SearchConfig, detect, interpolate_score
from .evaluate import (RunReport, SequenceError, box_from_corners,
                       load_annotations, load_sequence, polygon_iou,
                       run_protocol)
from .features import FeatureMap, extract_features
from .imaging import (Image, UnsupportedImageError, contrast_stretch,
                      illumination_correct, load_frame, unsharp_mask)
from .motion import MotionHistory, push, smooth_update
from .patch import Patch, extract_patch, rotate_patch, wrap_angle
from .synth import SceneSpec, build_scenario, render_sequence, write_sequence
from .tracker import (FrameRecord, RotatedBox, TrackerState, init,
                      run_sequence, step)

__version__ = "0.1.0"

__all__ = [
    "CorrelationFilter", "DetectionResult", "FeatureMap", "FrameRecord",
    "Image", "MotionHistory", "Patch", "RotatedBox", "RunConfig",
    "RunReport", "SampleMemory", "SceneSpec", "SearchConfig",
    "SequenceError", "TrackerState", "UnsupportedImageError",
    "box_from_corners", "build_scenario", "contrast_stretch", "detect",
    "dump_filter", "extract_features", "extract_patch",
    "illumination_correct", "init", "interpolate_score", "load_annotations",
    "load_config", "load_filter", "load_frame", "load_sequence",
    "make_labels", "make_reg_weights", "parse_config", "polygon_iou",
    "push", "render_sequence", "response", "rotate_patch", "run_protocol",
    "run_sequence", "smooth_update", "step", "train", "training_cost",
    "unsharp_mask", "update_memory", "wrap_angle", "write_sequence",
]
