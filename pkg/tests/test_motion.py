import math

import pytest

from racf.motion import MotionHistory, push, smooth_update


def _history(*locs):
    h = MotionHistory()
    for loc in locs:
        h = push(h, loc)
    return h


def test_push_advances_and_saturates():
    h = _history((1.0, 2.0))
    assert h.loc_last == (1.0, 2.0)
    assert h.valid_count == 1
    h = push(h, (3.0, 4.0))
    assert h.loc_prev == (1.0, 2.0)
    assert h.loc_last == (3.0, 4.0)
    assert h.valid_count == 2
    h = push(h, (5.0, 6.0))
    assert h.valid_count == 2  # saturates


def test_passthrough_without_history():
    h = _history((0.0, 0.0))  # only one confirmed location
    raw = (12.34, -5.6)
    assert smooth_update(h, raw, 0.5, 0.5) == raw


def test_passthrough_with_unit_weights_is_bit_identical():
    h = _history((0.0, 0.0), (10.0, 0.0))
    raw = (10.0 + 1e-13, 10.0 - 1e-13)
    out = smooth_update(h, raw, 1.0, 1.0)
    assert out == raw  # tuple equality, no arithmetic applied


def test_frozen_worked_example():
    # history (0,0) -> (10,0): d0 = 10, phi0 = 0. Raw (10,10): d1 = 10,
    # phi1 = 90. With omega = 0.9/0.9: d1n = 10, phi1n = 81, so the output
    # is (10 + 10 cos 81, 10 sin 81).
    h = _history((0.0, 0.0), (10.0, 0.0))
    out = smooth_update(h, (10.0, 10.0), 0.9, 0.9)
    want = (10.0 + 10.0 * math.cos(math.radians(81.0)),
            10.0 * math.sin(math.radians(81.0)))
    assert out[0] == pytest.approx(want[0], abs=1e-12)
    assert out[1] == pytest.approx(want[1], abs=1e-12)
    assert out[0] == pytest.approx(11.5643, abs=1e-4)
    assert out[1] == pytest.approx(9.8769, abs=1e-4)


def test_angle_blend_takes_shortest_path():
    # phi0 = 170, phi1 = -170: blending must cross 180, not swing through 0
    h = _history((0.0, 0.0),
                 (10.0 * math.cos(math.radians(170.0)),
                  10.0 * math.sin(math.radians(170.0))))
    x1, y1 = h.loc_last
    raw = (x1 + 10.0 * math.cos(math.radians(-170.0)),
           y1 + 10.0 * math.sin(math.radians(-170.0)))
    out = smooth_update(h, raw, 1.0, 0.5)
    ang = math.degrees(math.atan2(out[1] - y1, out[0] - x1))
    assert ang == pytest.approx(180.0, abs=1e-9) or ang == pytest.approx(-180.0, abs=1e-9)


def test_zero_length_displacements_adopt_other_direction():
    # raw displacement zero: direction comes from history, so the smoothed
    # point slides along the previous heading by (1 - omega_d) * d0
    h = _history((0.0, 0.0), (10.0, 0.0))
    out = smooth_update(h, (10.0, 0.0), 0.8, 0.9)
    assert out[0] == pytest.approx(10.0 + 0.2 * 10.0)
    assert out[1] == pytest.approx(0.0, abs=1e-12)

    # history displacement zero: its direction is taken from the raw one
    h = _history((5.0, 5.0), (5.0, 5.0))
    out = smooth_update(h, (5.0, 9.0), 0.75, 0.5)
    assert out[0] == pytest.approx(5.0)
    assert out[1] == pytest.approx(5.0 + 0.75 * 4.0)


def test_both_zero_is_stationary():
    h = _history((3.0, 4.0), (3.0, 4.0))
    out = smooth_update(h, (3.0, 4.0), 0.9, 0.9)
    assert out == (3.0, 4.0)


def test_omega_validation():
    h = _history((0.0, 0.0), (1.0, 0.0))
    with pytest.raises(ValueError):
        smooth_update(h, (2.0, 0.0), 1.5, 0.5)
    with pytest.raises(ValueError):
        smooth_update(h, (2.0, 0.0), 0.5, -0.1)


def test_smoothing_damps_jitter():
    # zig-zag raw path: the smoothed step lengths vary less than the raw ones
    import numpy as np
    rng = np.random.default_rng(0)
    raw_path = [(float(k * 3 + rng.uniform(-1.5, 1.5)),
                 float(rng.uniform(-1.5, 1.5))) for k in range(30)]
    h = _history(raw_path[0], raw_path[1])
    smoothed = [raw_path[0], raw_path[1]]
    for raw in raw_path[2:]:
        out = smooth_update(h, raw, 0.9, 0.9)
        smoothed.append(out)
        h = push(h, out)

    def speed_var(path):
        p = np.asarray(path)
        steps = np.linalg.norm(np.diff(p, axis=0), axis=1)
        return float(np.var(steps))

    assert speed_var(smoothed) <= speed_var(raw_path)
