"""Numba-compiled block-diagonal kernels.

Same contracts as :mod:`anprecode.kernels._numpy`; loops are written out so the
compiler can fuse them. All inputs must be C-contiguous complex128 / float64.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def gram_forms(grams, V):
    L, N, _ = grams.shape
    nb = V.shape[0]
    out = np.empty((L, nb))
    for l in range(L):
        for b in range(nb):
            acc = 0.0
            for i in range(N):
                s = 0j
                for j in range(N):
                    s += grams[l, i, j] * V[b, j]
                acc += (V[b, i].conjugate() * s).real
            out[l, b] = acc
    return out


@njit(cache=True)
def assemble_blocks(grams, coef):
    L, N, _ = grams.shape
    nb = coef.shape[1]
    out = np.zeros((nb, N, N), dtype=np.complex128)
    for b in range(nb):
        for l in range(L):
            c = coef[l, b]
            if c == 0.0:
                continue
            for i in range(N):
                for j in range(N):
                    out[b, i, j] += c * grams[l, i, j]
    return out


@njit(cache=True)
def block_matvec(blocks, shift, V):
    nb, N, _ = blocks.shape
    out = np.empty((nb, N), dtype=np.complex128)
    for b in range(nb):
        for i in range(N):
            s = shift * V[b, i]
            for j in range(N):
                s += blocks[b, i, j] * V[b, j]
            out[b, i] = s
    return out


@njit(cache=True)
def block_cholesky_solve(blocks, shift, rhs):
    nb, N, _ = blocks.shape
    x = np.empty((nb, N), dtype=np.complex128)
    L = np.zeros((N, N), dtype=np.complex128)
    y = np.empty(N, dtype=np.complex128)
    for b in range(nb):
        # in-place Hermitian Cholesky of blocks[b] + shift*I
        for j in range(N):
            d = blocks[b, j, j].real + shift
            for k in range(j):
                d -= L[j, k].real ** 2 + L[j, k].imag ** 2
            if not d > 0.0:
                x[:, :] = np.nan
                return x, b
            ljj = np.sqrt(d)
            L[j, j] = ljj
            for i in range(j + 1, N):
                s = blocks[b, i, j]
                for k in range(j):
                    s -= L[i, k] * L[j, k].conjugate()
                L[i, j] = s / ljj
        for i in range(N):
            s = rhs[b, i]
            for k in range(i):
                s -= L[i, k] * y[k]
            y[i] = s / L[i, i].real
        for i in range(N - 1, -1, -1):
            s = y[i]
            for k in range(i + 1, N):
                s -= L[k, i].conjugate() * x[b, k]
            x[b, i] = s / L[i, i].real
    return x, -1
