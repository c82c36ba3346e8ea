"""Displacement-consistency smoothing of raw per-frame detections.

Raw displacement is decomposed into length and direction; both are blended
with the previous frame's motion before being reapplied, which damps
detection jitter without touching the detector itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass
class MotionHistory:
    """Last two confirmed locations. valid_count saturates at 2."""

    loc_prev: tuple[float, float] = (0.0, 0.0)
    loc_last: tuple[float, float] = (0.0, 0.0)
    valid_count: int = 0


def push(hist: MotionHistory, loc) -> MotionHistory:
    """Advance the history with a newly confirmed location."""
    return MotionHistory(loc_prev=hist.loc_last, loc_last=(float(loc[0]), float(loc[1])),
                         valid_count=min(hist.valid_count + 1, 2))


def _wrap180(a: float) -> float:
    """Shortest signed angular difference representative in (-180, 180]."""
    a = a % 360.0
    if a > 180.0:
        a -= 360.0
    return a


def smooth_update(hist: MotionHistory, raw, omega_d: float, omega_a: float):
    """Blend the raw displacement with the previous one.

    d1n = omega_d * d1 + (1 - omega_d) * d0
    phi1n = blend of phi1 toward phi0 along the shortest angular path,
            weight (1 - omega_a)

    and the smoothed location is loc_last + d1n * (cos phi1n, sin phi1n).
    With fewer than two confirmed locations, or omega_d = omega_a = 1, the
    raw location passes through bit-identically. A zero-length displacement
    adopts the other displacement's direction rather than inventing one.
    """
    if not 0.0 <= omega_d <= 1.0 or not 0.0 <= omega_a <= 1.0:
        raise ValueError(f"omegas must be in [0, 1], got {omega_d}, {omega_a}")
    raw = (float(raw[0]), float(raw[1]))
    if hist.valid_count < 2:
        return raw
    if omega_d == 1.0 and omega_a == 1.0:
        return raw

    x0, y0 = hist.loc_prev
    x1, y1 = hist.loc_last
    d0 = math.hypot(x1 - x0, y1 - y0)
    d1 = math.hypot(raw[0] - x1, raw[1] - y1)
    phi0 = math.degrees(math.atan2(y1 - y0, x1 - x0)) if d0 > 0 else None
    phi1 = math.degrees(math.atan2(raw[1] - y1, raw[0] - x1)) if d1 > 0 else None
    if phi1 is None:
        phi1 = phi0 if phi0 is not None else 0.0
    if phi0 is None:
        phi0 = phi1

    d1n = omega_d * d1 + (1.0 - omega_d) * d0
    phi1n = phi1 + (1.0 - omega_a) * _wrap180(phi0 - phi1)
    t = math.radians(phi1n)
    return (x1 + d1n * math.cos(t), y1 + d1n * math.sin(t))
