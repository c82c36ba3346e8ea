"""Target detection: scale/orientation search, FPE weighting, Newton refinement.

The response grid is only known at integer cells; between cells it is
evaluated with the trigonometric series implied by its Fourier coefficients,
which gives exact values and analytic derivatives for Newton ascent. Raw
scores are divided by the circular distance to the previous location
(regularized so it stays finite at zero offset), which suppresses duplicate
targets far from the last known position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dcf import CorrelationFilter, ScoreMap, response
from .features import extract_features
from .imaging import Image
from .patch import cosine_window, extract_patch, rotate_patch, wrap_angle


@dataclass
class SearchConfig:
    """Detection-time search grid and peak-selection knobs."""

    scales: int = 5
    scale_step: float = 1.01
    rot_halfcount: int = 2
    rot_delta: float = 5.0
    fpe_rho: float = 1.0
    newton_iters: int = 5
    fpe_enabled: bool = True
    min_confidence: float = 0.01

    def __post_init__(self):
        if self.scales < 1 or self.scales % 2 == 0:
            raise ValueError(f"scales must be odd and >= 1, got {self.scales}")
        if self.scale_step <= 1.0:
            raise ValueError(f"scale_step must be > 1, got {self.scale_step}")
        if self.rot_halfcount < 0:
            raise ValueError(f"rot_halfcount must be >= 0, got {self.rot_halfcount}")
        if self.rot_delta <= 0:
            raise ValueError(f"rot_delta must be > 0, got {self.rot_delta}")
        if self.fpe_rho <= 0:
            raise ValueError(f"fpe_rho must be > 0, got {self.fpe_rho}")
        if self.newton_iters < 0:
            raise ValueError(f"newton_iters must be >= 0, got {self.newton_iters}")


@dataclass
class DetectionResult:
    """Refined peak in cell coordinates plus the winning hypothesis.

    (u, v) live on the sub-grid torus [0, M) x [0, N); dx, dy are the same
    displacement converted to frame pixels. score_map keeps the winning
    response grid around for diagnostics dumps.
    """

    u: float
    v: float
    scale_index: int
    scale_factor: float
    theta: float
    fpe_score: float
    raw_score: float
    dx: float
    dy: float
    confident: bool
    score_map: ScoreMap | None = None


def torus_offset(a: float, period: int) -> float:
    """Shortest signed offset of a on a circle of the given period."""
    return (a + period / 2.0) % period - period / 2.0


def fpe_denominator(u: float, v: float, prev, rho: float, shape) -> float:
    """Regularized circular distance sqrt(du^2 + dv^2 + rho^2) to prev."""
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    M, N = shape
    du = torus_offset(u - prev[0], M)
    dv = torus_offset(v - prev[1], N)
    return math.sqrt(du * du + dv * dv + rho * rho)


def _denominator_grid(shape, prev, rho: float | None) -> np.ndarray:
    """FPE denominator at every grid cell; all ones when rho is None."""
    M, N = shape
    if rho is None:
        return np.ones((M, N))
    du = torus_offset(np.arange(M, dtype=np.float64) - prev[0], M)
    dv = torus_offset(np.arange(N, dtype=np.float64) - prev[1], N)
    return np.sqrt(du[:, None] ** 2 + dv[None, :] ** 2 + rho * rho)


class ScoreInterpolator:
    """Continuous evaluation of a score grid from its Fourier coefficients.

    Frequencies are centered and, for even dimensions, the Nyquist bin is
    split evenly between +M/2 and -M/2. That is the unique real-valued
    trigonometric interpolant through the grid samples, so values carry no
    imaginary residue beyond floating-point noise and derivatives are exact.
    """

    def __init__(self, shat: np.ndarray):
        M, N = shat.shape
        self.M, self.N = M, N
        coeff, km = self._extend(shat, axis=0)
        coeff, kn = self._extend(coeff, axis=1)
        self.coeff = coeff / (M * N)
        self.wm = 2.0 * np.pi * km / M
        self.wn = 2.0 * np.pi * kn / N

    @staticmethod
    def _extend(coeff: np.ndarray, axis: int):
        n = coeff.shape[axis]
        k = np.where(np.arange(n) <= n // 2, np.arange(n), np.arange(n) - n)
        if n % 2 == 0:
            nyq = np.take(coeff, n // 2, axis=axis) * 0.5
            coeff = np.concatenate(
                [coeff, np.expand_dims(nyq, axis)], axis=axis)
            coeff = np.moveaxis(coeff, axis, 0)
            coeff[n // 2] = coeff[n // 2] * 0.5 + 0.0  # halve the +Nyquist row
            coeff = np.moveaxis(coeff, 0, axis)
            k = np.concatenate([k, [-(n // 2)]])
        return coeff, k.astype(np.float64)

    def value(self, u: float, v: float) -> float:
        eu = np.exp(1j * self.wm * u)
        ev = np.exp(1j * self.wn * v)
        t = eu @ self.coeff @ ev
        self._check_real(t)
        return t.real

    def value_grad_hess(self, u: float, v: float):
        eu = np.exp(1j * self.wm * u)
        ev = np.exp(1j * self.wn * v)
        ce = self.coeff @ ev
        cev = self.coeff @ (1j * self.wn * ev)
        t = eu @ ce
        self._check_real(t)
        gu = (1j * self.wm * eu) @ ce
        gv = eu @ cev
        huu = (-self.wm ** 2 * eu) @ ce
        hvv = eu @ (self.coeff @ (-self.wn ** 2 * ev))
        huv = (1j * self.wm * eu) @ cev
        grad = np.array([gu.real, gv.real])
        hess = np.array([[huu.real, huv.real], [huv.real, hvv.real]])
        return t.real, grad, hess

    def grid(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        """Dense evaluation on the outer product of coordinate vectors."""
        eu = np.exp(1j * np.outer(us, self.wm))
        ev = np.exp(1j * np.outer(self.wn, vs))
        vals = eu @ self.coeff @ ev
        if np.abs(vals.imag).max() > 1e-9 * max(1.0, np.abs(vals.real).max()):
            raise AssertionError("interpolated grid has non-trivial imaginary part")
        return vals.real

    @staticmethod
    def _check_real(t: complex):
        if abs(t.imag) > 1e-9 * max(1.0, abs(t.real)):
            raise AssertionError("interpolated score has non-trivial imaginary part")


def interpolate_score(sm: ScoreMap, u: float, v: float):
    """Score value, gradient and Hessian at continuous cell coordinates."""
    return ScoreInterpolator(sm.shat).value_grad_hess(u, v)


def orientation_energy(sm: ScoreMap, prev, rho: float) -> float:
    """Sum over the grid of (s / D)^2, the orientation selection energy."""
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    return _energy(sm, _denominator_grid(sm.s.shape, prev, rho))


def _energy(sm: ScoreMap, denom: np.ndarray) -> float:
    r = sm.s / denom
    return float(np.sum(r * r))


def detect_orientation(responses, prev, rho: float) -> float:
    """Pick the candidate angle with maximal energy.

    responses must cover the candidate fan in ascending angle order with the
    current angle in the middle. Exact ties prefer the smallest |theta -
    theta_k|, then the smaller theta; scaling every response by a common
    positive factor cannot change the outcome.
    """
    if len(responses) % 2 == 0:
        raise ValueError("responses must have odd length (centered on theta_k)")
    theta_k = responses[len(responses) // 2].theta
    best = None
    for sm in responses:
        e = orientation_energy(sm, prev, rho)
        key = (-e, abs(sm.theta - theta_k), sm.theta)
        if best is None or key < best[0]:
            best = (key, sm.theta)
    return best[1]


class _FpeObjective:
    """s(u, v) / D(u, v) with analytic derivatives; D = 1 when rho is None."""

    def __init__(self, interp: ScoreInterpolator, prev, rho: float | None):
        self.interp = interp
        self.prev = prev
        self.rho = rho

    def value(self, u: float, v: float) -> float:
        if self.rho is None:
            return self.interp.value(u, v)
        return self.interp.value(u, v) / self._dparts(u, v)[0]

    def _dparts(self, u, v):
        du = torus_offset(u - self.prev[0], self.interp.M)
        dv = torus_offset(v - self.prev[1], self.interp.N)
        d = math.sqrt(du * du + dv * dv + self.rho * self.rho)
        return d, du, dv

    def value_grad_hess(self, u: float, v: float):
        val, g, h = self.interp.value_grad_hess(u, v)
        if self.rho is None:
            return val, g, h
        d, du, dv = self._dparts(u, v)
        delta = np.array([du, dv])
        ginv = 1.0 / d
        grad_ginv = -delta / d ** 3
        hess_ginv = 3.0 * np.outer(delta, delta) / d ** 5 - np.eye(2) / d ** 3
        f = val * ginv
        gf = g * ginv + val * grad_ginv
        hf = (h * ginv + np.outer(g, grad_ginv) + np.outer(grad_ginv, g)
              + val * hess_ginv)
        return f, gf, hf


def newton_refine(sm: ScoreMap, start, prev, rho: float | None,
                  iters: int = 5):
    """Ascend s/D from the grid argmax with damped Newton steps.

    Indefinite Hessians fall back to a bounded gradient step; every step is
    halved (up to 10 times) until the objective does not decrease, so the
    final value is never below the starting one. Coordinates wrap on the
    torus. rho = None drops the distance weighting and refines s itself.

    Returns (u, v, objective value).
    """
    interp = ScoreInterpolator(sm.shat)
    obj = _FpeObjective(interp, prev, rho)
    M, N = sm.s.shape
    u, v = float(start[0]) % M, float(start[1]) % N
    f_cur = obj.value(u, v)
    for _ in range(iters):
        _, g, h = obj.value_grad_hess(u, v)
        neg_definite = h[0, 0] < 0 and np.linalg.det(h) > 0
        if neg_definite:
            step = -np.linalg.solve(h, g)
        else:
            gn = np.linalg.norm(g)
            if gn == 0.0:
                break
            step = g / max(gn, 1.0)  # bounded ascent step, at most 1 cell
        if not np.isfinite(step).all():
            break
        moved = False
        t = 1.0
        for _ in range(11):
            cu = (u + t * step[0]) % M
            cv = (v + t * step[1]) % N
            f_new = obj.value(cu, cv)
            if f_new >= f_cur:
                if f_new > f_cur:
                    moved = True
                u, v, f_cur = cu, cv, f_new
                break
            t *= 0.5
        if not moved:
            break
    return u, v, f_cur


def sample_features(frame: Image, center, base_size, scale: float,
                    out_size, theta: float, cell_size: int):
    """Shared detection/training pipeline: cut, de-rotate, band, featurize.

    The patch is rotated by -theta so a target sitting at orientation theta
    comes out in the canonical (training) orientation.
    """
    p = extract_patch(frame, center, base_size, scale, out_size)
    p = rotate_patch(p, -theta)
    p = cosine_window(p)
    return extract_features(p, cell_size)


def detect(filt: CorrelationFilter, frame: Image, state, cfg: SearchConfig) -> DetectionResult:
    """Search scales and orientations, pick by FPE score, refine sub-grid.

    state supplies the geometry: center, scale, theta, search_size (w, h),
    model_size (rows, cols) and cell_size. Per scale, the orientation is
    chosen by energy; the winning scale has the maximal FPE grid peak at its
    chosen orientation (ties prefer the scale nearest 1). The refined peak
    is converted back to frame pixels, un-rotating the displacement out of
    the canonical frame and undoing the patch resampling ratio.
    """
    M = state.model_size[0] // state.cell_size
    N = state.model_size[1] // state.cell_size
    prev = (0.0, 0.0)  # search patch is centered on the previous location
    rho = cfg.fpe_rho if cfg.fpe_enabled else None
    denom = _denominator_grid((M, N), prev, rho)
    half = cfg.scales // 2
    halfrot = cfg.rot_halfcount
    angles = [state.theta + j * cfg.rot_delta for j in range(-halfrot, halfrot + 1)]

    best = None  # (grid_peak, |r|, r, sm, argmax)
    for si, r in enumerate(range(-half, half + 1)):
        step = cfg.scale_step ** r
        maps = []
        for theta in angles:
            x = sample_features(frame, state.center, state.search_size,
                                state.scale * step, state.model_size, theta,
                                state.cell_size)
            sm = response(filt, x)
            sm.scale_index = si
            sm.theta = theta
            maps.append(sm)
        mid = len(maps) // 2
        theta_sel = maps[mid].theta
        if len(maps) > 1:
            theta_sel = detect_orientation(maps, prev, cfg.fpe_rho) \
                if cfg.fpe_enabled else _plain_orientation(maps)
        sm_sel = maps[[m.theta for m in maps].index(theta_sel)]
        weighted = sm_sel.s / denom
        flat = int(np.argmax(weighted))
        peak = float(weighted.flat[flat])
        key = (-peak, abs(r), r)
        if best is None or key < best[0]:
            best = (key, sm_sel, np.unravel_index(flat, weighted.shape), step, r)

    _, sm_win, argmax, step_win, r_win = best
    u, v, fpe_score = newton_refine(sm_win, argmax, prev, rho,
                                    iters=cfg.newton_iters)
    raw = ScoreInterpolator(sm_win.shat).value(u, v)

    # Cells -> patch pixels -> frame pixels at the winning pyramid scale.
    ratio_y = state.search_size[1] * state.scale * step_win / state.model_size[0]
    ratio_x = state.search_size[0] * state.scale * step_win / state.model_size[1]
    du = torus_offset(u, M) * state.cell_size * ratio_y
    dv = torus_offset(v, N) * state.cell_size * ratio_x
    # (dv, du) is the displacement in the de-rotated patch; rotate it back
    # into frame coordinates.
    t = math.radians(sm_win.theta)
    ct, st = math.cos(t), math.sin(t)
    dx = ct * dv + st * du
    dy = -st * dv + ct * du

    return DetectionResult(
        u=u, v=v, scale_index=sm_win.scale_index,
        scale_factor=step_win, theta=wrap_angle(sm_win.theta),
        fpe_score=fpe_score, raw_score=raw, dx=dx, dy=dy,
        confident=bool(raw >= cfg.min_confidence), score_map=sm_win)


def _plain_orientation(maps) -> float:
    """Orientation by unweighted energy, used when FPE is disabled."""
    theta_k = maps[len(maps) // 2].theta
    ones = np.ones(maps[0].s.shape)
    best = None
    for sm in maps:
        key = (-_energy(sm, ones), abs(sm.theta - theta_k), sm.theta)
        if best is None or key < best[0]:
            best = (key, sm.theta)
    return best[1]
