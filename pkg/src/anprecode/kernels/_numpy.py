"""Pure-numpy block-diagonal kernels (reference path, always available)."""

import numpy as np


def gram_forms(grams, V):
    """Real quadratic forms ``Re(V[b]^H grams[l] V[b])`` as an ``(L, nb)`` array."""
    # (L, N, nb): grams[l] @ V[b] for every block
    T = np.matmul(grams, V.T)
    return np.einsum("bi,lib->lb", V.conj(), T).real


def assemble_blocks(grams, coef):
    """Blocks ``sum_l coef[l, b] * grams[l]`` for every block index ``b``."""
    return np.tensordot(coef.T, grams, axes=(1, 0))


def block_matvec(blocks, shift, V):
    return np.einsum("bij,bj->bi", blocks, V) + shift * V


def block_cholesky_solve(blocks, shift, rhs):
    """Solve ``(blocks[b] + shift*I) x_b = rhs[b]`` for all blocks.

    Returns ``(x, bad)`` where ``bad`` is the index of the first block that
    is not positive definite, or -1.
    """
    n = blocks.shape[-1]
    full = blocks + shift * np.eye(n)
    try:
        L = np.linalg.cholesky(full)
    except np.linalg.LinAlgError:
        for b in range(full.shape[0]):
            try:
                np.linalg.cholesky(full[b])
            except np.linalg.LinAlgError:
                return np.full_like(rhs, np.nan), b
        raise
    y = np.linalg.solve(L, rhs[..., None])
    x = np.linalg.solve(np.conj(np.swapaxes(L, -1, -2)), y)
    return x[..., 0], -1
