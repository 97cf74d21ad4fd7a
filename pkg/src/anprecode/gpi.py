"""Generalized power iteration on the self-consistent KKT pencil.

At a stationary point of the smoothed objective the design satisfies
``A_kkt(v) v = lambda(v) B_kkt(v) v`` where, per user k and eavesdropper m,
with ``w_mk`` the softmax of ``beta*ln(c_mk/d_mk)`` over m::

    A_kkt ∝ sum_k [ A_k/(ln2 a_k) + alpha*beta sum_m w_mk D_mk/d_mk ]
    B_kkt ∝ sum_k [ B_k/(ln2 b_k) + alpha*beta sum_m w_mk C_mk/c_mk ]

Both are block diagonal and Hermitian. We store the bracketed sums
(``a_kkt`` and ``b_kkt``) and keep the positive prefactors ``lambda_num`` and
``lambda_den`` in log form only, since the products over users overflow
easily. The iteration ``v <- B^-1 A v / ||.||`` does not depend on those
common scalars, and with this normalization::

    dL/dv^H = a_kkt v - b_kkt v = (A_KKT v - lambda B_KKT v) / lambda_num

where ``A_KKT = lambda_num a_kkt`` and ``B_KKT = lambda_den b_kkt`` are the
fully scaled matrices. ``log2(lambda)`` is the smoothed objective exactly:
``lambda_den`` carries the softmax normalizer to the power ``alpha*ln2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .errors import BlockDecompositionError, DimensionError, ParameterError
from .ratecore import LN2, BlockDiagHermitian, RayleighMatrices, as_blocks

__all__ = [
    "VARIANTS",
    "KktPair",
    "GpiSettings",
    "GpiOutcome",
    "assemble_kkt",
    "blockdiag_solve",
    "gpi_iterate",
    "fixed_point_residual",
    "softmax_weights",
]

VARIANTS = ("perfect", "covariance", "nullspace", "nullspace_xi0", "sumrate")


@dataclass(frozen=True)
class KktPair:
    """Normalized KKT pencil at one design vector.

    ``a_kkt`` and ``b_kkt`` are the fully scaled KKT matrices divided by
    ``lambda_num`` and ``lambda_den`` respectively.
    """

    a_kkt: BlockDiagHermitian
    b_kkt: BlockDiagHermitian
    log_lambda_num: float
    log_lambda_den: float
    objective: float
    weights: np.ndarray = field(repr=False)

    @property
    def log_lambda(self):
        return self.log_lambda_num - self.log_lambda_den

    @property
    def lambda_(self):
        return math.exp(self.log_lambda)

    @property
    def lambda_num(self):
        return math.exp(self.log_lambda_num)

    @property
    def lambda_den(self):
        return math.exp(self.log_lambda_den)

    def scaled(self):
        """``(A_KKT, B_KKT)`` with the prefactors applied; may overflow."""
        return self.a_kkt * self.lambda_num, self.b_kkt * self.lambda_den


@dataclass(frozen=True)
class GpiSettings:
    epsilon: float = 1e-6
    max_iters: int = 100
    # prefactors are kept in log form; the iteration never materializes them
    lambda_den_products_in_log: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        if int(self.max_iters) < 1:
            raise ParameterError("max_iters must be >= 1")


@dataclass
class GpiOutcome:
    vbar: np.ndarray
    trace: list
    iterations: int
    converged: bool
    objective: float


def softmax_weights(c, d, alpha):
    """Softmax over eavesdroppers of ``beta*ln(c/d)``; columns sum to one.

    Returns ``(w, lse)`` with ``lse[k] = ln sum_m (c_mk/d_mk)^beta``.
    """
    beta = 1.0 / (alpha * LN2)
    z = beta * (np.log(c) - np.log(d))
    lse = logsumexp(z, axis=0)
    return np.exp(z - lse), lse


def _check_variant(variant, matrices):
    if variant not in VARIANTS:
        raise ParameterError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant == "sumrate":
        return
    if matrices.n_eves == 0:
        raise ParameterError(f"variant {variant!r} needs at least one eavesdropper; use 'sumrate'")
    if variant.startswith("nullspace") and matrices.n_blocks != matrices.n_users:
        raise DimensionError("null-space variants operate on K blocks")


def _kkt_from_forms(q, matrices, alpha, variant):
    K, M, nb = matrices.n_users, matrices.n_eves, matrices.n_blocks
    s = matrices.scale
    q.check_positive()
    inv_ln2 = 1.0 / LN2
    off = np.ones((K, nb))
    off[np.arange(K), np.arange(K)] = 0.0

    coef_a = np.zeros((K + M, nb))
    coef_b = np.zeros((K + M, nb))
    coef_a[:K] = (inv_ln2 * s / q.a)[:, None]
    coef_b[:K] = (inv_ln2 * s / q.b)[:, None] * off
    shift_a = inv_ln2 * float(np.sum(matrices.user_shift / q.a))
    shift_b = inv_ln2 * float(np.sum(matrices.user_shift / q.b))
    log_num = float(np.sum(np.log(q.a)))
    log_den = float(np.sum(np.log(q.b)))
    objective = (log_num - log_den) / LN2

    w = np.zeros((M, K))
    if variant != "sumrate" and M:
        w, lse = softmax_weights(q.c, q.d, alpha)
        # alpha*beta == 1/ln2
        wd = inv_ln2 * w / q.d
        wc = inv_ln2 * w / q.c
        coef_a[K:] = s * (wd @ off)
        coef_b[K:, :] = s * wc.sum(axis=1)[:, None]
        shift_a += float(np.sum(wd.sum(axis=1) * matrices.eve_shift))
        shift_b += float(np.sum(wc.sum(axis=1) * matrices.eve_shift))
        log_den += alpha * LN2 * float(np.sum(lse))
        objective -= alpha * float(np.sum(lse))

    grams = matrices.grams
    a_kkt = BlockDiagHermitian(kernels.assemble_blocks(grams, coef_a), shift_a)
    b_kkt = BlockDiagHermitian(kernels.assemble_blocks(grams, coef_b), shift_b)
    return KktPair(a_kkt, b_kkt, log_num, log_den, objective, w)


def assemble_kkt(variant, vbar, matrices, alpha):
    """KKT pencil of the smoothed objective at ``vbar``.

    Parameters
    ----------
    variant : {'perfect', 'covariance', 'nullspace', 'nullspace_xi0', 'sumrate'}
        Which lemma the matrices instantiate. The assembly formula is shared;
        the variant only fixes what ``matrices`` must look like.
    vbar : complex array
        Design vector; need not be normalized.
    matrices : RayleighMatrices
    alpha : float
        LogSumExp smoothing parameter.
    """
    _check_variant(variant, matrices)
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    q = matrices.forms(vbar)
    return _kkt_from_forms(q, matrices, alpha, variant)


def blockdiag_solve(b_kkt, rhs):
    """Solve ``b_kkt x = rhs`` with one Cholesky factorization per block.

    Raises
    ------
    BlockDecompositionError
        If a diagonal block (shift included) is not positive definite.
    """
    V = as_blocks(rhs, b_kkt.block_size)
    if V.shape[0] != b_kkt.n_blocks:
        raise DimensionError("right-hand side does not match the block structure")
    x, bad = kernels.block_cholesky_solve(b_kkt.blocks, b_kkt.identity_shift, V)
    if bad >= 0:
        raise BlockDecompositionError(int(bad))
    return x.reshape(-1)


def _step(kkt, v):
    return blockdiag_solve(kkt.b_kkt, kkt.a_kkt.matvec(v))


def gpi_iterate(variant, v0, matrices, settings=None, alpha=0.3):
    """Run the normalized fixed-point update until ``||v_t - v_{t-1}|| <= eps``.

    The trace holds ``(t, ||v_t - v_{t-1}||, objective(v_t))`` with entry 0
    for the starting point (its step norm is ``nan``). When ``max_iters`` is
    reached without convergence the best iterate by objective is returned
    and ``converged`` is False.
    """
    settings = settings or GpiSettings()
    _check_variant(variant, matrices)
    v = np.asarray(v0, dtype=np.complex128).reshape(-1)
    nrm = np.linalg.norm(v)
    if not nrm > 0:
        raise ParameterError("initial vector must be nonzero")
    v = v / nrm
    kkt = assemble_kkt(variant, v, matrices, alpha)
    trace = [(0, float("nan"), kkt.objective)]
    best_v, best_obj = v, kkt.objective
    converged = False
    t = 0
    while t < settings.max_iters:
        t += 1
        u = _step(kkt, v)
        u = u / np.linalg.norm(u)
        delta = float(np.linalg.norm(u - v))
        v = u
        kkt = assemble_kkt(variant, v, matrices, alpha)
        trace.append((t, delta, kkt.objective))
        if kkt.objective > best_obj:
            best_v, best_obj = v, kkt.objective
        if delta <= settings.epsilon:
            converged = True
            break
    if converged:
        return GpiOutcome(v, trace, t, True, kkt.objective)
    return GpiOutcome(best_v, trace, t, False, best_obj)


def fixed_point_residual(variant, vbar, matrices, alpha):
    """``||B^-1 A v - lambda v|| / ||lambda v||`` for the scaled pencil.

    With the normalized pencil this reduces to ``||b^-1 a v - v|| / ||v||``.
    """
    v = np.asarray(vbar, dtype=np.complex128).reshape(-1)
    kkt = assemble_kkt(variant, v, matrices, alpha)
    u = _step(kkt, v)
    return float(np.linalg.norm(u - v) / np.linalg.norm(v))
