"""Slow, independent reference implementations used to check the fast paths.

Everything here is written the dumb direct way on purpose: nested loops,
explicit index arithmetic, no FFTs except where the oracle is *defined*
spectrally (dense interpolation). Tests compare the package against these.
"""

import numpy as np


def direct_response(filt_spatial: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Circular convolution response by explicit O(M^2 N^2) summation.

    filt_spatial, x: (d, M, N) real arrays. Response at (u, v) is
    sum_l sum_{p,q} x[l, p, q] * f[l, (u-p)%M, (v-q)%N], the spatial form
    of ifft(sum_l fft(x) * fft(f)).
    """
    d, M, N = x.shape
    out = np.zeros((M, N))
    for u in range(M):
        for v in range(N):
            acc = 0.0
            for l in range(d):
                for p in range(M):
                    for q in range(N):
                        acc += x[l, p, q] * filt_spatial[l, (u - p) % M, (v - q) % N]
            out[u, v] = acc
    return out


def direct_response_fast(filt_spatial: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Same sum as direct_response but via index rolls; still no FFT."""
    d, M, N = x.shape
    # g[m, n] = f[-m, -n] turns the convolution into a sliding dot product
    g = filt_spatial[:, (-np.arange(M)) % M][:, :, (-np.arange(N)) % N]
    out = np.zeros((M, N))
    for u in range(M):
        rolled = np.roll(g, u, axis=1)
        for v in range(N):
            out[u, v] = float(np.sum(x * np.roll(rolled, v, axis=2)))
    return out


def circ_conv2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Circular 2-D convolution by explicit summation."""
    M, N = a.shape
    out = np.zeros((M, N), dtype=np.result_type(a, b))
    for m in range(M):
        for n in range(N):
            acc = 0.0
            for p in range(M):
                for q in range(N):
                    acc += a[p, q] * b[(m - p) % M, (n - q) % N]
            out[m, n] = acc
    return out


def dense_normal_system(mem, labels, reg, trunc=5):
    """Assemble the full (MNd x MNd) training system as an explicit matrix.

    Returns (T, b) with unknown ordering fhat[m, n, l] flattened row-major,
    such that T @ fhat_vec = b reproduces the per-frequency data term plus
    the truncated-kernel regularization normal operator.
    """
    weights = np.asarray(mem.weights)
    X = np.stack([np.fft.fft2(e.features.data, axes=(1, 2)) for e in mem.entries])
    yhat = np.fft.fft2(labels.y)
    d = X.shape[1]
    M, N = labels.y.shape

    # truncated regularization kernel, identical definition to the trainer
    what = np.fft.fft2(reg.w) / (M * N)
    km = min(trunc // 2, (M - 1) // 2)
    kn = min(trunc // 2, (N - 1) // 2)
    c = np.zeros_like(what)
    rows = np.r_[0:km + 1, M - km:M]
    cols = np.r_[0:kn + 1, N - kn:N]
    c[np.ix_(rows, cols)] = what[np.ix_(rows, cols)]

    n_unknown = M * N * d
    T = np.zeros((n_unknown, n_unknown), dtype=complex)
    b = np.zeros(n_unknown, dtype=complex)

    def idx(m, n, l):
        return (m * N + n) * d + l

    for m in range(M):
        for n in range(N):
            for l in range(d):
                row = idx(m, n, l)
                b[row] = np.sum(weights * np.conj(X[:, l, m, n]) * yhat[m, n])
                for p in range(d):
                    T[row, idx(m, n, p)] += np.sum(
                        weights * np.conj(X[:, l, m, n]) * X[:, p, m, n])

    # W^H W is circular convolution by the autocorrelation of c
    c2 = np.zeros_like(c)
    for a1 in range(M):
        for b1 in range(N):
            acc = 0.0
            for p in range(M):
                for q in range(N):
                    acc += np.conj(c[p, q]) * c[(p + a1) % M, (q + b1) % N]
            c2[a1, b1] = acc
    for m in range(M):
        for n in range(N):
            for dm in range(M):
                for dn in range(N):
                    v = c2[(dm - m) % M, (dn - n) % N]
                    if v == 0:
                        continue
                    for l in range(d):
                        T[idx(m, n, l), idx(dm, dn, l)] += np.conj(v)
    return T, b


def spatial_training_cost(filt, mem, labels, reg, trunc=5):
    """Training objective evaluated entirely in the spatial domain.

    Data term: weighted squared error of the circular-correlation response
    against the labels. Regularization: || w_eff * f ||^2 per channel with
    w_eff = ifft2 of the truncated weight spectrum, matching the operator
    the solver actually applies.
    """
    M, N = labels.y.shape
    what = np.fft.fft2(reg.w) / (M * N)
    km = min(trunc // 2, (M - 1) // 2)
    kn = min(trunc // 2, (N - 1) // 2)
    keep = np.zeros_like(what)
    rows = np.r_[0:km + 1, M - km:M]
    cols = np.r_[0:kn + 1, N - kn:N]
    keep[np.ix_(rows, cols)] = what[np.ix_(rows, cols)]
    w_eff = np.fft.ifft2(keep).real * (M * N)

    f_spatial = filt.spatial()
    cost = 0.0
    for wk, entry in zip(mem.weights, mem.entries):
        resp = direct_response_fast(f_spatial, entry.features.data)
        cost += wk * float(np.sum((resp - labels.y) ** 2))
    for l in range(f_spatial.shape[0]):
        cost += float(np.sum((w_eff * f_spatial[l]) ** 2))
    return cost


def rasterize_iou(p: np.ndarray, q: np.ndarray, res: int = 500) -> float:
    """IoU of two convex polygons by point sampling on a res x res grid."""
    pts = np.vstack([p, q])
    lo = pts.min(axis=0) - 1.0
    hi = pts.max(axis=0) + 1.0
    xs = np.linspace(lo[0], hi[0], res)
    ys = np.linspace(lo[1], hi[1], res)
    gx, gy = np.meshgrid(xs, ys)

    def inside(poly):
        poly = np.asarray(poly, dtype=float)
        # normalize to counter-clockwise
        area2 = np.sum(poly[:, 0] * np.roll(poly[:, 1], -1)
                       - np.roll(poly[:, 0], -1) * poly[:, 1])
        if area2 < 0:
            poly = poly[::-1]
        mask = np.ones(gx.shape, dtype=bool)
        n = len(poly)
        for i in range(n):
            ax, ay = poly[i]
            bx, by = poly[(i + 1) % n]
            cross = (bx - ax) * (gy - ay) - (by - ay) * (gx - ax)
            mask &= cross >= 0
        return mask

    mp, mq = inside(p), inside(q)
    union = np.count_nonzero(mp | mq)
    if union == 0:
        return 0.0
    return np.count_nonzero(mp & mq) / union


def dense_interpolation(s: np.ndarray, factor: int) -> np.ndarray:
    """Evaluate the periodic trig interpolant on a factor-times finer grid.

    Zero-pad the centered spectrum, splitting Nyquist bins half/half for
    even sizes; this is the standard dense equivalent of the continuous
    interpolation formula.
    """
    M, N = s.shape
    S = np.fft.fftshift(np.fft.fft2(s))
    # split Nyquist rows/cols so the padded spectrum stays conjugate-sym
    if M % 2 == 0:
        row = S[0:1, :].copy()
        S = np.vstack([0.5 * row, S[1:, :], 0.5 * row])
    if N % 2 == 0:
        col = S[:, 0:1].copy()
        S = np.hstack([0.5 * col, S[:, 1:], 0.5 * col])
    Mp, Np = factor * M, factor * N
    out = np.zeros((Mp, Np), dtype=complex)
    # align the zero-frequency bin (index len//2 of the odd-length extended
    # spectrum) with index Mp//2 expected by ifftshift
    r0 = Mp // 2 - S.shape[0] // 2
    c0 = Np // 2 - S.shape[1] // 2
    out[r0:r0 + S.shape[0], c0:c0 + S.shape[1]] = S
    dense = np.fft.ifft2(np.fft.ifftshift(out)) * (factor * factor)
    return dense.real


def gaussian_bump_map(M, N, cu, cv, sigma=1.6, amp=1.0):
    """Periodic Gaussian bump centered at fractional grid position (cu, cv)."""
    u = np.arange(M)[:, None]
    v = np.arange(N)[None, :]
    du = (u - cu + M / 2) % M - M / 2
    dv = (v - cv + N / 2) % N - N / 2
    return amp * np.exp(-(du ** 2 + dv ** 2) / (2 * sigma ** 2))
