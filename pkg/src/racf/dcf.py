"""Multi-channel correlation filter learning with spatial regularization.

The filter f minimizes a weighted least-squares fit of circular-correlation
responses to a Gaussian label, plus a spatial penalty w * f that grows away
from the target region. Everything is solved in the Fourier domain: the data
term is block-diagonal over frequencies and the penalty becomes a circular
convolution with the (truncated) transform of w, which stays sparse. The
resulting Hermitian normal equations are relaxed with Gauss-Seidel sweeps,
warm-started from the previous filter during tracking.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ._solver import gs_sweep
from .features import FeatureMap

DUMP_MAGIC = b"RACF"


@dataclass
class Labels:
    """Desired response: circular Gaussian with peak 1 at the origin."""

    y: np.ndarray
    yhat: np.ndarray
    sigma: float


def make_labels(M: int, N: int, sigma: float) -> Labels:
    """Gaussian label grid, circularly wrapped so the peak sits at (0, 0)."""
    if M < 1 or N < 1:
        raise ValueError(f"label grid must be at least 1x1, got {M}x{N}")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    mw = ((np.arange(M) + M // 2) % M) - M // 2
    nw = ((np.arange(N) + N // 2) % N) - N // 2
    y = np.exp(-(mw[:, None] ** 2 + nw[None, :] ** 2) / (2.0 * sigma ** 2))
    return Labels(y=y, yhat=np.fft.fft2(y), sigma=float(sigma))


@dataclass
class RegWeights:
    """Spatial penalty w, a quadratic bowl with its minimum on the target."""

    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 2:
            raise ValueError(f"reg weights must be 2-D, got {self.w.shape}")
        if not (self.w > 0).all():
            raise ValueError("reg weights must be strictly positive")


def make_reg_weights(M: int, N: int, target_cells, w_min: float = 0.1,
                     w_scale: float = 3.0) -> RegWeights:
    """Quadratic penalty w(m, n) = w_min + w_scale ((2m~/h)^2 + (2n~/w)^2).

    target_cells is (h, w) in cells; offsets m~, n~ are taken from the grid
    center, so the center cell gets exactly w_min and a half-target offset
    along either axis gets w_min + w_scale.
    """
    th, tw = float(target_cells[0]), float(target_cells[1])
    if th <= 0 or tw <= 0:
        raise ValueError(f"target_cells must be positive, got {target_cells}")
    if w_min <= 0 or w_scale < 0:
        raise ValueError("need w_min > 0 and w_scale >= 0")
    mo = np.arange(M) - M // 2
    no = np.arange(N) - N // 2
    w = w_min + w_scale * ((2.0 * mo[:, None] / th) ** 2
                           + (2.0 * no[None, :] / tw) ** 2)
    return RegWeights(w)


@dataclass
class ScoreMap:
    """Correlation response s on the cell grid plus its Fourier coefficients."""

    s: np.ndarray
    shat: np.ndarray
    scale_index: int = 0
    theta: float = 0.0


@dataclass
class CorrelationFilter:
    """Learned filter: (d, M, N) complex Fourier coefficients.

    Coefficients are kept conjugate-symmetric so the spatial filter is real.
    converged reflects whether the last training call reached its residual
    tolerance; residuals records the relative residual after each sweep,
    starting with the warm-start value.
    """

    coeffs: np.ndarray
    converged: bool = True
    residuals: tuple = ()
    cost_start: float = 0.0
    cost_end: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.ndim != 3:
            raise ValueError(f"filter coeffs must be (d, M, N), got {self.coeffs.shape}")

    @property
    def shape(self):
        return self.coeffs.shape

    def spatial(self) -> np.ndarray:
        """Real spatial-domain filter stack."""
        return np.fft.ifft2(self.coeffs, axes=(-2, -1)).real


@dataclass
class MemoryEntry:
    features: FeatureMap
    theta: float
    weight: float
    fhat: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.fhat is None:
            self.fhat = np.fft.fft2(self.features.data, axes=(-2, -1))


@dataclass
class SampleMemory:
    """Exponentially weighted training-sample store, weights summing to 1."""

    capacity: int
    entries: list = field(default_factory=list)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")

    def __len__(self):
        return len(self.entries)

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.entries])


def update_memory(mem: SampleMemory, x: FeatureMap, theta: float,
                  learning_rate: float) -> SampleMemory:
    """Append a sample, decay the rest, evict on overflow, renormalize.

    The first sample enters with full weight. Afterwards the new sample gets
    learning_rate and prior weights shrink by (1 - learning_rate). Overflow
    evicts the smallest weight (ties going to the oldest entry) and weights
    are renormalized to sum 1.
    """
    if not 0.0 < learning_rate < 1.0:
        raise ValueError(f"learning_rate must be in (0, 1), got {learning_rate}")
    if mem.entries and mem.entries[0].features.shape != x.shape:
        raise ValueError(
            f"sample shape {x.shape} does not match memory {mem.entries[0].features.shape}")
    if not mem.entries:
        entries = [MemoryEntry(x, float(theta), 1.0)]
    else:
        keep = 1.0 - learning_rate
        entries = [MemoryEntry(e.features, e.theta, e.weight * keep, e.fhat)
                   for e in mem.entries]
        entries.append(MemoryEntry(x, float(theta), learning_rate))
        if len(entries) > mem.capacity:
            drop = min(range(len(entries)), key=lambda i: (entries[i].weight, i))
            del entries[drop]
        total = sum(e.weight for e in entries)
        entries = [MemoryEntry(e.features, e.theta, e.weight / total, e.fhat)
                   for e in entries]
    return SampleMemory(capacity=mem.capacity, entries=entries)


def response(filt: CorrelationFilter, x: FeatureMap) -> ScoreMap:
    """Correlation response: sum over channels of x^l convolved with f^l."""
    if filt.coeffs.shape != x.data.shape:
        raise ValueError(
            f"filter shape {filt.coeffs.shape} does not match features {x.data.shape}")
    xhat = np.fft.fft2(x.data, axes=(-2, -1))
    shat = np.sum(xhat * filt.coeffs, axis=0)
    return ScoreMap(s=np.fft.ifft2(shat).real, shat=shat)


def _reg_kernel(w: np.ndarray, trunc: int) -> np.ndarray:
    """Fourier kernel of the penalty: what / (MN), truncated to its centered
    trunc x trunc block of dominant (low-frequency) coefficients."""
    if trunc < 1 or trunc % 2 == 0:
        raise ValueError(f"truncation size must be odd and >= 1, got {trunc}")
    M, N = w.shape
    what = np.fft.fft2(w)
    k = trunc // 2
    km = min(k, (M - 1) // 2)
    kn = min(k, (N - 1) // 2)
    rows = np.r_[0:km + 1, M - km:M] if km > 0 else np.array([0])
    cols = np.r_[0:kn + 1, N - kn:N] if kn > 0 else np.array([0])
    c = np.zeros_like(what)
    c[np.ix_(rows, cols)] = what[np.ix_(rows, cols)] / (M * N)
    return c


def _autocorr_kernel(c: np.ndarray) -> np.ndarray:
    """Circular self-convolution c * c, dense on the frequency grid.

    Because w is real, the adjoint of convolution-by-c is again
    convolution-by-c, so the normal-equation penalty operator is
    convolution with this kernel.
    """
    M, N = c.shape
    out = np.zeros_like(c)
    nz = np.argwhere(c != 0)
    vals = c[nz[:, 0], nz[:, 1]]
    for (m1, n1), v1 in zip(nz, vals):
        rows = (m1 + nz[:, 0]) % M
        cols = (n1 + nz[:, 1]) % N
        np.add.at(out, (rows, cols), v1 * vals)
    return out


def _normal_apply(fhat_mnl, G, gamma, off_m, off_n, off_c):
    """Apply the full normal operator to an (M, N, d) iterate."""
    out = np.einsum("mnlp,mnp->mnl", G, fhat_mnl) + gamma * fhat_mnl
    for dm, dn, cv in zip(off_m, off_n, off_c):
        out += cv * np.roll(fhat_mnl, (dm, dn), axis=(0, 1))
    return out


def _conj_symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Project Fourier coefficients onto the conjugate-symmetric subspace.

    The training cost is invariant under the symmetry, so this never
    increases it, and it guarantees a real spatial filter.
    """
    d, M, N = coeffs.shape
    im = (-np.arange(M)) % M
    jn = (-np.arange(N)) % N
    flipped = np.conj(coeffs[:, im][:, :, jn])
    return 0.5 * (coeffs + flipped)


def _system(mem: SampleMemory, labels: Labels, reg: RegWeights, trunc: int):
    """Assemble the per-frequency blocks and the penalty stencil."""
    X = np.stack([e.fhat for e in mem.entries])          # (t, d, M, N)
    alpha = np.array([e.weight for e in mem.entries])
    Xc = X.conj()
    G = np.einsum("k,klmn,kpmn->mnlp", alpha, Xc, X, optimize=True)
    b = np.einsum("k,klmn,mn->mnl", alpha, Xc, labels.yhat, optimize=True)
    c = _reg_kernel(reg.w, trunc)
    c2 = _autocorr_kernel(c)
    gamma = c2[0, 0].real
    c2[0, 0] = 0.0
    nz = np.argwhere(c2 != 0)
    off_m = np.ascontiguousarray(nz[:, 0])
    off_n = np.ascontiguousarray(nz[:, 1])
    off_c = np.ascontiguousarray(c2[off_m, off_n])
    return G, b, gamma, off_m, off_n, off_c, c


def training_cost(filt: CorrelationFilter, mem: SampleMemory, labels: Labels,
                  reg: RegWeights, trunc: int = 5) -> float:
    """Regularized training cost, evaluated on Fourier coefficients.

    Scaled by 1/(MN) so it equals the spatial-domain sum of squared
    residuals plus the penalty term (Parseval).
    """
    d, M, N = filt.coeffs.shape
    c = _reg_kernel(reg.w, trunc)
    data = 0.0
    for e in mem.entries:
        r = np.sum(e.fhat * filt.coeffs, axis=0) - labels.yhat
        data += e.weight * np.vdot(r, r).real
    chat = np.fft.fft2(c)
    pen = 0.0
    for l in range(d):
        wf = np.fft.ifft2(chat * np.fft.fft2(filt.coeffs[l]))
        pen += np.vdot(wf, wf).real
    return (data + pen) / (M * N)


def train(mem: SampleMemory, labels: Labels, reg: RegWeights,
          prev: CorrelationFilter | None = None, iters: int = 30,
          tol: float = 1e-3, trunc: int = 5) -> CorrelationFilter:
    """Fit the filter to the sample memory by Gauss-Seidel relaxation.

    Solves (A^H Gamma A + W^H W) fhat = A^H Gamma yhat, where A stacks the
    per-frequency channel rows of the samples, Gamma holds the sample
    weights, and W is circular convolution with the truncated transform of
    w / (MN). Each sweep performs exact per-frequency block solves in
    row-major order, so the quadratic cost never increases; a sweep that
    fails to reduce the residual norm (numerical floor) is rolled back and
    iteration stops. The result is projected back to conjugate symmetry.

    Args:
        prev: warm-start filter; zeros when None (cold start).
        iters: maximum number of sweeps.
        tol: relative-residual convergence tolerance; missing it only flags
            the filter as non-converged, tracking continues regardless.
        trunc: odd side length of the retained penalty coefficient block.
    """
    if not mem.entries:
        raise ValueError("cannot train on an empty sample memory")
    if iters < 0:
        raise ValueError(f"iters must be >= 0, got {iters}")
    d, M, N = mem.entries[0].fhat.shape
    if labels.yhat.shape != (M, N) or reg.w.shape != (M, N):
        raise ValueError("labels/reg weights do not match the sample grid")

    G, b, gamma, off_m, off_n, off_c, _ = _system(mem, labels, reg, trunc)
    block = G + gamma * np.eye(d)[None, None]
    block_inv = np.linalg.inv(block)

    if prev is not None:
        if prev.coeffs.shape != (d, M, N):
            raise ValueError("warm-start filter shape mismatch")
        fhat = np.ascontiguousarray(prev.coeffs.transpose(1, 2, 0))
    else:
        fhat = np.zeros((M, N, d), dtype=np.complex128)

    bnorm = np.linalg.norm(b)
    scale = bnorm if bnorm > 0 else 1.0

    def rel_residual(it):
        return np.linalg.norm(b - _normal_apply(it, G, gamma, off_m, off_n, off_c)) / scale

    cost_start = _fourier_cost(fhat, mem, labels, b, G, gamma, off_m, off_n, off_c)
    residuals = [rel_residual(fhat)]
    best = fhat.copy()
    for _ in range(iters):
        gs_sweep(fhat, b, block_inv, off_m, off_n, off_c)
        r = rel_residual(fhat)
        if r > residuals[-1] * (1.0 + 1e-9) + 1e-15:
            fhat = best  # numerical floor reached, keep the better iterate
            break
        residuals.append(r)
        best = fhat.copy()
        if r <= tol:
            break

    coeffs = _conj_symmetrize(fhat.transpose(2, 0, 1))
    fhat_sym = coeffs.transpose(1, 2, 0)
    final = rel_residual(fhat_sym)
    cost_end = _fourier_cost(fhat_sym, mem, labels, b, G, gamma, off_m, off_n, off_c)
    return CorrelationFilter(coeffs=coeffs, converged=bool(final <= tol),
                             residuals=tuple(residuals),
                             cost_start=cost_start, cost_end=cost_end)


def _fourier_cost(fhat_mnl, mem, labels, b, G, gamma, off_m, off_n, off_c):
    """Quadratic cost via the assembled system, in spatial-domain units.

    J = f^H T f - 2 Re(f^H b) + sum_k alpha_k |yhat_k|^2, all over MN.
    """
    M, N, _ = fhat_mnl.shape
    Tf = _normal_apply(fhat_mnl, G, gamma, off_m, off_n, off_c)
    quad = np.vdot(fhat_mnl, Tf).real - 2.0 * np.vdot(fhat_mnl, b).real
    ynorm = np.vdot(labels.yhat, labels.yhat).real
    const = sum(e.weight for e in mem.entries) * ynorm
    return (quad + const) / (M * N)


def dump_filter(filt: CorrelationFilter, path) -> None:
    """Serialize to a binary dump: magic, int32 shape header, raw complex128."""
    d, M, N = filt.coeffs.shape
    with open(path, "wb") as fh:
        fh.write(DUMP_MAGIC)
        fh.write(struct.pack("<3i", d, M, N))
        fh.write(np.ascontiguousarray(filt.coeffs).tobytes())


def load_filter(path) -> CorrelationFilter:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DUMP_MAGIC:
            raise ValueError(f"not a filter dump: {path}")
        d, M, N = struct.unpack("<3i", fh.read(12))
        raw = fh.read(d * M * N * 16)
    coeffs = np.frombuffer(raw, dtype=np.complex128).reshape(d, M, N).copy()
    return CorrelationFilter(coeffs=coeffs)
