"""Brute-force reference optimizer for tiny instances.

The search space is the unit sphere of the stacked design vector. Rates
are recomputed from their closed forms (no Rayleigh matrices), so the
oracle shares no code path with the GPI machinery beyond the channel
object. The best value found is a lower bound on the true optimum.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from ..chanmodel import sigma_over_p
from ..errors import DimensionError, ParameterError
from ..ratecore import StackedDesign

__all__ = ["MAX_ORACLE_DIM", "design_values", "brute_force_secrecy", "sphere_grid"]

MAX_ORACLE_DIM = 4


def design_values(V, channels, config, n_an_cols, objective="clipped"):
    """Objective for a batch of stacked vectors ``V`` of shape (S, N(K+J)).

    Vectors are normalized internally. ``objective`` is ``'clipped'``
    (exact sum secrecy rate) or ``'surrogate'`` (LogSumExp-smoothed,
    unclipped).
    """
    V = np.atleast_2d(np.asarray(V, dtype=np.complex128))
    N, K, J = channels.n_antennas, channels.n_users, n_an_cols
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    blocks = V.reshape(len(V), K + J, N)
    F, Phi = blocks[:, :K], blocks[:, K:]
    s2, se2 = sigma_over_p(config)

    def sinr_rates(X, noise):
        # X: (N, L) receivers -> rates (S, L, K) of stream k at receiver l
        pf = np.abs(np.einsum("skn,nl->slk", F.conj(), X)) ** 2
        pa = (np.abs(np.einsum("sjn,nl->slj", Phi.conj(), X)) ** 2).sum(axis=2) if J else 0.0
        tot = pf.sum(axis=2) + pa + noise
        return np.log2(tot[..., None] / (tot[..., None] - pf))

    ru = sinr_rates(channels.h_users, s2)
    ru = ru[:, np.arange(K), np.arange(K)]
    M = channels.n_eves
    if M == 0:
        return ru.sum(axis=1)
    re = sinr_rates(channels.g_eves, se2)  # (S, M, K)
    if objective == "clipped":
        return np.maximum(ru - re.max(axis=1), 0.0).sum(axis=1)
    if objective == "surrogate":
        a = config.alpha
        return ru.sum(axis=1) - (a * logsumexp(re / a, axis=1)).sum(axis=1)
    raise ParameterError("objective must be 'clipped' or 'surrogate'")


def sphere_grid(dim, resolution):
    """Hyperspherical-angle grid on the unit sphere of R^dim.

    ``resolution`` points per polar angle on [0, pi] and ``2*resolution``
    on the azimuth.
    """
    if dim == 1:
        return np.array([[1.0]])
    polar = np.linspace(0.0, np.pi, resolution)
    azim = np.linspace(0.0, 2 * np.pi, 2 * resolution, endpoint=False)
    axes = [polar] * (dim - 2) + [azim]
    ang = np.array(list(itertools.product(*axes)))
    X = np.ones((len(ang), dim))
    for i in range(dim - 1):
        X[:, i] *= np.cos(ang[:, i])
        X[:, i + 1 :] *= np.sin(ang[:, i])[:, None]
    return X


def _embed(x, n, blocks, block_size):
    """Real parameters -> complex vector with a real first entry per block."""
    v = np.zeros(n, dtype=np.complex128)
    pos = 0
    for b in range(blocks):
        s = b * block_size
        v[s] = x[pos]
        pos += 1
        m = block_size - 1
        v[s + 1 : s + block_size] = x[pos : pos + m] + 1j * x[pos + m : pos + 2 * m]
        pos += 2 * m
    return v


def brute_force_secrecy(channels, config, resolution=8, objective="clipped", n_starts=8, seed=0):
    """Best design found by grid search plus multistart local refinement.

    Per-column phases do not affect any rate, so the first entry of every
    column is kept real; the remaining real coordinates are covered by a
    hyperspherical grid and a batch of random points, and the best
    ``n_starts`` candidates are refined with Nelder-Mead.

    Parameters
    ----------
    channels : ChannelRealization
    config : SystemConfig
        ``n_an_cols`` gives J.
    resolution : int
        Grid points per polar angle.
    objective : {'clipped', 'surrogate'}

    Returns
    -------
    (StackedDesign, float)
        Best design and its objective value (a lower bound on the optimum).

    Raises
    ------
    DimensionError
        If ``N (K + J)`` exceeds 4 complex dimensions.
    """
    N, K, J = channels.n_antennas, channels.n_users, config.n_an_cols
    n = N * (K + J)
    if n > MAX_ORACLE_DIM:
        raise DimensionError(f"oracle limited to N(K+J) <= {MAX_ORACLE_DIM}, got {n}")
    if resolution < 2:
        raise ParameterError("resolution must be >= 2")
    nb = K + J
    dim = nb * (2 * N - 1)

    def f(X):
        X = np.atleast_2d(X)
        V = np.array([_embed(x, n, nb, N) for x in X])
        return design_values(V, channels, config, J, objective)

    rng = np.random.default_rng(seed)
    cand = np.concatenate([sphere_grid(dim, resolution), rng.standard_normal((4096, dim))])
    vals = np.concatenate([f(cand[i : i + 4096]) for i in range(0, len(cand), 4096)])
    order = np.argsort(-vals, kind="stable")[:n_starts]
    best_x, best_val = cand[order[0]], vals[order[0]]
    for idx in order:
        res = minimize(
            lambda x: -f(x)[0], cand[idx], method="Nelder-Mead",
            options=dict(xatol=1e-10, fatol=1e-12, maxiter=4000 * dim, maxfev=4000 * dim),
        )
        if -res.fun > best_val:
            best_x, best_val = res.x, -res.fun
    v = _embed(best_x, n, nb, N)
    v = v / np.linalg.norm(v)
    return StackedDesign(v, N, K), float(best_val)
