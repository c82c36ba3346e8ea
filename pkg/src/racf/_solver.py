"""Compiled Gauss-Seidel sweep for the Fourier-domain normal equations.

The system couples the d channels of each frequency through a dense d x d
block (data term) and neighboring frequencies through a small circular
stencil (regularization term). A sweep walks the frequency grid in row-major
order, always consuming the most recent neighbor values, so the iteration is
strictly sequential and bit-for-bit deterministic.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def gs_sweep(fhat, rhs0, block_inv, off_m, off_n, off_c):  # pragma: no cover
    """One in-place Gauss-Seidel sweep.

    Args:
        fhat: (M, N, d) complex128 current iterate, updated in place.
        rhs0: (M, N, d) complex128 right-hand side.
        block_inv: (M, N, d, d) complex128 inverses of the per-frequency
            diagonal blocks (data block plus stencil center).
        off_m, off_n: int64 stencil offsets, pre-wrapped into [0, M) / [0, N),
            center excluded.
        off_c: complex128 stencil coefficients matching off_m/off_n.
    """
    M, N, d = fhat.shape
    K = off_m.shape[0]
    rhs = np.empty(d, np.complex128)
    out = np.empty(d, np.complex128)
    for m in range(M):
        for n in range(N):
            for l in range(d):
                rhs[l] = rhs0[m, n, l]
            for j in range(K):
                mm = m - off_m[j]
                if mm < 0:
                    mm += M
                nn = n - off_n[j]
                if nn < 0:
                    nn += N
                cj = off_c[j]
                for l in range(d):
                    rhs[l] -= cj * fhat[mm, nn, l]
            for l in range(d):
                acc = 0.0 + 0.0j
                for l2 in range(d):
                    acc += block_inv[m, n, l, l2] * rhs[l2]
                out[l] = acc
            for l in range(d):
                fhat[m, n, l] = out[l]
