"""Rates, secrecy metrics and Rayleigh-quotient matrix families.

Every rate in the model is a log-ratio of two quadratic forms in the stacked
design vector ``vbar = [f_1; ...; f_K; phi_1; ...; phi_J]``. The matrices
involved are all block diagonal with N x N blocks of the form::

    numerator   = blkdiag(s*Q, ..., s*Q) + shift*I
    denominator = numerator - blkdiag(0, ..., s*Q (block k), ..., 0)

where ``Q`` is an outer product ``h h^H`` (or a covariance). The
:class:`RayleighMatrices` container stores only the base matrices ``Q`` and
evaluates all the forms through the block kernels; explicit
:class:`BlockDiagHermitian` objects are built on request.

Rates are in bits/s/Hz. ``noise`` arguments accept either a
:class:`~anprecode.chanmodel.SystemConfig` or a pair
``(sigma^2/P, sigma_e^2/P)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .chanmodel import SystemConfig, sigma_over_p
from .errors import DimensionError, NumericalDomainError, ParameterError

LN2 = math.log(2.0)

__all__ = [
    "LN2",
    "StackedDesign",
    "BlockDiagHermitian",
    "RayleighMatrices",
    "QuadForms",
    "RateReport",
    "noise_ratios",
    "stack",
    "unstack",
    "as_blocks",
    "rate_user",
    "rate_eve",
    "user_rates",
    "eve_rates",
    "ergodic_eve_rate",
    "sum_secrecy_rate",
    "logsumexp_max",
    "surrogate_objective",
    "build_perfect_matrices",
    "build_covariance_matrices",
    "build_nullspace_matrices",
    "build_sumrate_matrices",
    "grad_surrogate",
]


def noise_ratios(noise):
    if isinstance(noise, SystemConfig):
        return sigma_over_p(noise)
    if np.isscalar(noise):
        return float(noise), float(noise)
    s, se = noise
    return float(s), float(se)


# ---------------------------------------------------------------------------
# design vector


def stack(F, Phi=None):
    F = np.asarray(F, dtype=np.complex128)
    if F.ndim == 1:
        F = F[:, None]
    cols = [F] if Phi is None else [F, np.asarray(Phi, dtype=np.complex128).reshape(F.shape[0], -1)]
    return np.concatenate(cols, axis=1).T.reshape(-1)


def unstack(vbar, n_antennas, n_users):
    V = as_blocks(vbar, n_antennas)
    return V[:n_users].T.copy(), V[n_users:].T.copy()


def as_blocks(vbar, n_antennas):
    """View a stacked vector as an ``(n_blocks, N)`` array (row b is block b)."""
    v = np.asarray(vbar, dtype=np.complex128)
    if v.size % n_antennas:
        raise DimensionError(f"length {v.size} is not a multiple of N={n_antennas}")
    return v.reshape(-1, n_antennas)


@dataclass(frozen=True)
class StackedDesign:
    """Precoders and AN columns concatenated into one vector.

    Layout is ``f_1, ..., f_K, phi_1, ..., phi_J``, each a contiguous slice
    of length N.
    """

    vbar: np.ndarray
    n_antennas: int
    n_users: int

    def __post_init__(self):
        v = np.asarray(self.vbar, dtype=np.complex128).reshape(-1)
        if v.size % self.n_antennas or v.size // self.n_antennas < self.n_users:
            raise DimensionError("vbar length inconsistent with N and K")
        object.__setattr__(self, "vbar", v)

    @classmethod
    def from_matrices(cls, F, Phi=None):
        F = np.asarray(F, dtype=np.complex128)
        if F.ndim == 1:
            F = F[:, None]
        return cls(stack(F, Phi), F.shape[0], F.shape[1])

    @property
    def n_an_cols(self):
        return self.vbar.size // self.n_antennas - self.n_users

    @property
    def precoder(self):
        return unstack(self.vbar, self.n_antennas, self.n_users)[0]

    @property
    def an_factor(self):
        return unstack(self.vbar, self.n_antennas, self.n_users)[1]

    @property
    def blocks(self):
        return as_blocks(self.vbar, self.n_antennas)

    def normalized(self):
        return StackedDesign(self.vbar / np.linalg.norm(self.vbar), self.n_antennas, self.n_users)


def _split(design, n_antennas=None, n_users=None):
    """``(F, Phi)`` from a StackedDesign, a pair, or a stacked vector."""
    if isinstance(design, StackedDesign):
        return design.precoder, design.an_factor
    if isinstance(design, tuple):
        F, Phi = design
        F = np.asarray(F, dtype=np.complex128)
        if F.ndim == 1:
            F = F[:, None]
        if Phi is None:
            Phi = np.zeros((F.shape[0], 0), complex)
        return F, np.asarray(Phi, dtype=np.complex128).reshape(F.shape[0], -1)
    if n_antennas is None or n_users is None:
        raise DimensionError("a bare vector needs n_antennas and n_users")
    return unstack(design, n_antennas, n_users)


# ---------------------------------------------------------------------------
# block-diagonal Hermitian matrices


@dataclass(frozen=True)
class BlockDiagHermitian:
    """``blkdiag(blocks[0], ..., blocks[nb-1]) + identity_shift * I``."""

    blocks: np.ndarray
    identity_shift: float = 0.0

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=np.complex128)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise DimensionError("blocks must have shape (nb, N, N)")
        object.__setattr__(self, "blocks", b)
        object.__setattr__(self, "identity_shift", float(self.identity_shift))

    @property
    def n_blocks(self):
        return self.blocks.shape[0]

    @property
    def block_size(self):
        return self.blocks.shape[1]

    @property
    def shape(self):
        n = self.n_blocks * self.block_size
        return (n, n)

    def hermitian_error(self):
        return float(np.max(np.abs(self.blocks - np.conj(np.swapaxes(self.blocks, 1, 2)))))

    def matvec(self, v):
        V = as_blocks(v, self.block_size)
        return kernels.block_matvec(self.blocks, self.identity_shift, V).reshape(-1)

    def quad(self, v):
        v = np.asarray(v, dtype=np.complex128).reshape(-1)
        return float(np.vdot(v, self.matvec(v)).real)

    def solve(self, rhs):
        from .gpi import blockdiag_solve

        return blockdiag_solve(self, rhs)

    def to_dense(self):
        from scipy.linalg import block_diag

        return block_diag(*self.blocks) + self.identity_shift * np.eye(self.shape[0])

    def __add__(self, other):
        return BlockDiagHermitian(self.blocks + other.blocks, self.identity_shift + other.identity_shift)

    def __sub__(self, other):
        return BlockDiagHermitian(self.blocks - other.blocks, self.identity_shift - other.identity_shift)

    def __mul__(self, c):
        return BlockDiagHermitian(c * self.blocks, c * self.identity_shift)

    __rmul__ = __mul__


@dataclass(frozen=True)
class QuadForms:
    """Quadratic forms of one design against a matrix family.

    ``a[k] = v^H A_k v``, ``b[k] = v^H B_k v``, ``c[m, k] = v^H C_{m,k} v``
    and ``d[m, k] = v^H D_{m,k} v``.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def check_positive(self):
        for name in ("a", "b", "c", "d"):
            arr = getattr(self, name)
            if arr.size and not np.all(arr > 0):
                raise NumericalDomainError(f"non-positive quadratic form in family {name.upper()}")
        return self


@dataclass(frozen=True)
class RayleighMatrices:
    """Structured storage of the A/B (user) and C/D (eavesdropper) families.

    Parameters
    ----------
    user_grams : (K, N, N)
        Base matrices of the user family (``h_k h_k^H``).
    eve_grams : (M, N, N)
        Base matrices of the eavesdropper family (``g_m g_m^H`` or ``R_m^e``).
    user_shift, eve_shift : (K,), (M,)
        Identity shifts of ``A_k`` and ``C_{m,k}``.
    scale : float
        Common factor on every outer-product block (1 outside the
        null-space reformulation).
    n_blocks : int
        Number of N x N diagonal blocks (K + J, or K).
    kind : str
        Label of the construction, for diagnostics.
    """

    user_grams: np.ndarray
    eve_grams: np.ndarray
    user_shift: np.ndarray
    eve_shift: np.ndarray
    scale: float
    n_blocks: int
    kind: str = "perfect"

    def __post_init__(self):
        ug = np.ascontiguousarray(self.user_grams, dtype=np.complex128)
        n = ug.shape[1]
        eg = np.ascontiguousarray(np.asarray(self.eve_grams, dtype=np.complex128).reshape(-1, n, n))
        object.__setattr__(self, "user_grams", ug)
        object.__setattr__(self, "eve_grams", eg)
        object.__setattr__(self, "user_shift", np.asarray(self.user_shift, dtype=float).reshape(ug.shape[0]))
        object.__setattr__(self, "eve_shift", np.asarray(self.eve_shift, dtype=float).reshape(eg.shape[0]))
        object.__setattr__(self, "_all", np.concatenate([ug, eg], axis=0))
        if self.n_blocks < ug.shape[0]:
            raise DimensionError("need at least one block per user")

    @property
    def n_antennas(self):
        return self.user_grams.shape[1]

    @property
    def n_users(self):
        return self.user_grams.shape[0]

    @property
    def n_eves(self):
        return self.eve_grams.shape[0]

    @property
    def dim(self):
        return self.n_blocks * self.n_antennas

    @property
    def grams(self):
        """User grams followed by eavesdropper grams, ``(K + M, N, N)``."""
        return self._all

    # explicit matrices -------------------------------------------------

    def _numerator(self, Q, shift):
        blocks = np.repeat((self.scale * Q)[None], self.n_blocks, axis=0)
        return BlockDiagHermitian(blocks, shift)

    def _denominator(self, Q, shift, k):
        M = self._numerator(Q, shift)
        blocks = M.blocks.copy()
        blocks[k] = 0.0
        return BlockDiagHermitian(blocks, shift)

    def A(self, k):
        return self._numerator(self.user_grams[k], self.user_shift[k])

    def B(self, k):
        return self._denominator(self.user_grams[k], self.user_shift[k], k)

    def C(self, m, k):
        if not 0 <= k < self.n_users:
            raise IndexError(k)
        return self._numerator(self.eve_grams[m], self.eve_shift[m])

    def D(self, m, k):
        return self._denominator(self.eve_grams[m], self.eve_shift[m], k)

    # forms ---------------------------------------------------------------

    def forms(self, vbar):
        """All quadratic forms at ``vbar`` via one pass of the gram kernel."""
        V = as_blocks(vbar, self.n_antennas)
        if V.shape[0] != self.n_blocks:
            raise DimensionError(f"design has {V.shape[0]} blocks, matrices have {self.n_blocks}")
        G = kernels.gram_forms(self._all, V)
        vv = float(np.vdot(V, V).real)
        K = self.n_users
        s = self.scale
        Gu, Ge = G[:K], G[K:]
        a = s * Gu.sum(axis=1) + self.user_shift * vv
        b = a - s * np.diagonal(Gu[:, :K])
        c_m = s * Ge.sum(axis=1) + self.eve_shift * vv
        c = np.repeat(c_m[:, None], K, axis=1)
        d = c - s * Ge[:, :K]
        return QuadForms(a, b, c, d)


# ---------------------------------------------------------------------------
# matrix builders


def _outer_stack(X):
    return np.einsum("ik,jk->kij", X, X.conj())


def build_perfect_matrices(channels, noise, n_an_cols=None):
    """A_k, B_k, C_{m,k}, D_{m,k} with perfect wiretap CSIT.

    ``n_an_cols`` defaults to ``noise.n_an_cols`` when ``noise`` is a
    SystemConfig, else 0.
    """
    s2, se2 = noise_ratios(noise)
    J = _resolve_j(noise, n_an_cols)
    K, M = channels.n_users, channels.n_eves
    return RayleighMatrices(
        _outer_stack(channels.h_users),
        _outer_stack(channels.g_eves),
        np.full(K, s2),
        np.full(M, se2),
        1.0,
        K + J,
        "perfect",
    )


def build_covariance_matrices(channels, noise, n_an_cols=None):
    """Same user family, eavesdropper family built from ``R_m^e``."""
    s2, se2 = noise_ratios(noise)
    J = _resolve_j(noise, n_an_cols)
    K, M = channels.n_users, channels.n_eves
    if channels.r_eves.shape[0] != M:
        raise DimensionError("eavesdropper covariances are required")
    return RayleighMatrices(
        _outer_stack(channels.h_users),
        channels.r_eves,
        np.full(K, s2),
        np.full(M, se2),
        1.0,
        K + J,
        "covariance",
    )


def build_sumrate_matrices(channels, noise, n_an_cols=None):
    """User family only; the eavesdropper family is empty."""
    s2, _ = noise_ratios(noise)
    J = _resolve_j(noise, n_an_cols)
    K, N = channels.n_users, channels.n_antennas
    return RayleighMatrices(
        _outer_stack(channels.h_users), np.zeros((0, N, N)), np.full(K, s2), np.zeros(0), 1.0, K + J, "sumrate"
    )


def build_nullspace_matrices(channels, noise, phi_tilde, xi):
    """K-block families for a fixed AN ``sqrt(xi) * phi_tilde``.

    The precoder is parameterized as ``F = sqrt(1 - xi*tr(PP^H)) W``; the
    outer-product blocks are scaled by that power factor and the AN leakage
    enters through the identity shifts.
    """
    if not 0.0 <= xi <= 1.0:
        raise ParameterError("xi must lie in [0, 1]")
    s2, se2 = noise_ratios(noise)
    P = np.asarray(phi_tilde, dtype=np.complex128).reshape(channels.n_antennas, -1)
    scale = 1.0 - xi * float(np.vdot(P, P).real)
    if not scale > 0:
        raise ParameterError(f"xi={xi} leaves no power for the precoder (factor {scale:.3g})")
    h, g = channels.h_users, channels.g_eves
    user_leak = (np.abs(h.conj().T @ P) ** 2).sum(axis=1)
    eve_leak = (np.abs(g.conj().T @ P) ** 2).sum(axis=1)
    kind = "nullspace_xi0" if xi == 0 else "nullspace"
    return RayleighMatrices(
        _outer_stack(h),
        _outer_stack(g),
        xi * user_leak + s2,
        xi * eve_leak + se2,
        scale,
        channels.n_users,
        kind,
    )


def _resolve_j(noise, n_an_cols):
    if n_an_cols is not None:
        return int(n_an_cols)
    return noise.n_an_cols if isinstance(noise, SystemConfig) else 0


# ---------------------------------------------------------------------------
# direct rate formulas


def _sinr_terms(x, F, Phi):
    """Signal, interference-plus-AN power of every stream at receiver ``x``."""
    p = np.abs(x.conj() @ F) ** 2
    an = float(np.sum(np.abs(x.conj() @ Phi) ** 2)) if Phi.size else 0.0
    return p, p.sum() - p + an


def rate_user(k, design, h_users, noise):
    """Rate of user k treating interference and AN as noise."""
    F, Phi = _split(design)
    h_users = getattr(h_users, "h_users", h_users)
    h = np.asarray(h_users, dtype=np.complex128).reshape(F.shape[0], -1)
    if h.shape[1] != F.shape[1]:
        raise DimensionError("precoder columns must match the number of users")
    s2, _ = noise_ratios(noise)
    p, intf = _sinr_terms(h[:, k], F, Phi)
    return float(np.log2(1.0 + p[k] / (intf[k] + s2)))


def rate_eve(m, k, design, g_eves, noise):
    """Rate at which eavesdropper m decodes the message of user k."""
    F, Phi = _split(design)
    g_eves = getattr(g_eves, "g_eves", g_eves)
    g = np.asarray(g_eves, dtype=np.complex128).reshape(F.shape[0], -1)
    _, se2 = noise_ratios(noise)
    p, intf = _sinr_terms(g[:, m], F, Phi)
    return float(np.log2(1.0 + p[k] / (intf[k] + se2)))


def user_rates(design, channels, noise):
    F, Phi = _split(design)
    s2, _ = noise_ratios(noise)
    H = channels.h_users
    P = np.abs(H.conj().T @ F) ** 2
    an = (np.abs(H.conj().T @ Phi) ** 2).sum(axis=1)
    sig = np.diagonal(P)
    return np.log2(1.0 + sig / (P.sum(axis=1) - sig + an + s2))


def eve_rates(design, channels, noise):
    """``(M, K)`` array of wiretap rates."""
    F, Phi = _split(design)
    _, se2 = noise_ratios(noise)
    G = channels.g_eves
    P = np.abs(G.conj().T @ F) ** 2
    an = (np.abs(G.conj().T @ Phi) ** 2).sum(axis=1)
    intf = P.sum(axis=1, keepdims=True) - P + an[:, None] + se2
    return np.log2(1.0 + P / intf)


def ergodic_eve_rate(m, k, F, Phi, r_eves, noise):
    """Wiretap rate with ``|g^H x|^2`` replaced by its mean ``x^H R x``."""
    F, Phi = _split((F, Phi))
    _, se2 = noise_ratios(noise)
    R = np.asarray(r_eves, dtype=np.complex128)
    R = R[m] if R.ndim == 3 else R
    q = np.einsum("ik,ij,jk->k", F.conj(), R, F).real
    an = float(np.einsum("ik,ij,jk->", Phi.conj(), R, Phi).real) if Phi.size else 0.0
    return float(np.log2(1.0 + q[k] / (q.sum() - q[k] + an + se2)))


@dataclass(frozen=True)
class RateReport:
    user_rates: np.ndarray
    eve_rates: np.ndarray
    secrecy_rates: np.ndarray
    sum_secrecy: float
    surrogate_value: float


def sum_secrecy_rate(design, channels, config, alpha=None):
    """Exact clipped sum secrecy rate and its smoothed counterpart.

    ``surrogate_value`` applies the LogSumExp smoothing without clipping;
    it equals the unclipped sum when there are no eavesdroppers.
    """
    ru = user_rates(design, channels, config)
    re = eve_rates(design, channels, config)
    if alpha is None:
        alpha = config.alpha if isinstance(config, SystemConfig) else 0.3
    if re.shape[0]:
        sec = np.maximum(ru - re.max(axis=0), 0.0)
        smooth = float(np.sum(ru) - sum(logsumexp_max(re[:, k], alpha) for k in range(re.shape[1])))
    else:
        sec = ru.copy()
        smooth = float(np.sum(ru))
    return RateReport(ru, re, sec, float(sec.sum()), smooth)


def logsumexp_max(values, alpha):
    """Smooth maximum ``alpha * ln(sum(exp(x / alpha)))``."""
    x = np.asarray(values, dtype=float).reshape(-1)
    if x.size == 0:
        raise ParameterError("logsumexp_max needs at least one value")
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    return float(alpha * logsumexp(x / alpha))


# ---------------------------------------------------------------------------
# smoothed objective and its gradient


def _objective_from_forms(q, alpha):
    """Surrogate value in bits from precomputed forms."""
    val = float(np.sum(np.log2(q.a) - np.log2(q.b)))
    if q.c.shape[0]:
        beta = 1.0 / (alpha * LN2)
        z = beta * (np.log(q.c) - np.log(q.d))
        val -= alpha * float(np.sum(logsumexp(z, axis=0)))
    return val


def surrogate_objective(design, matrices, alpha):
    """Smoothed sum secrecy rate::

        sum_k log2(a_k/b_k) - alpha * ln(sum_m (c_mk/d_mk)^beta),  beta = 1/(alpha ln 2)

    Invariant to any nonzero rescaling of the design. The ``[.]^+``
    clipping of the exact secrecy rate is deliberately absent.
    """
    v = design.vbar if isinstance(design, StackedDesign) else design
    q = matrices.forms(v).check_positive()
    return _objective_from_forms(q, alpha)


def grad_surrogate(design, matrices, alpha):
    """Wirtinger gradient ``dL/d(vbar^H)`` of :func:`surrogate_objective`.

    Built term by term from the explicit block matrices::

        (1/ln2) sum_k (A_k v/a_k - B_k v/b_k)
          - alpha*beta sum_k sum_m w_mk (C_mk v/c_mk - D_mk v/d_mk)

    with softmax weights ``w_mk = r_mk^beta / sum_m r_mk^beta``. For a real
    function of ``v = x + iy`` this equals ``(df/dx + i df/dy) / 2``.
    """
    v = np.asarray(design.vbar if isinstance(design, StackedDesign) else design, dtype=np.complex128)
    K, M = matrices.n_users, matrices.n_eves
    A = [matrices.A(k) for k in range(K)]
    B = [matrices.B(k) for k in range(K)]
    a = np.array([A[k].quad(v) for k in range(K)])
    b = np.array([B[k].quad(v) for k in range(K)])
    if np.any(a <= 0) or np.any(b <= 0):
        raise NumericalDomainError("non-positive user quadratic form")
    g = np.zeros_like(v)
    for k in range(K):
        g += (A[k].matvec(v) / a[k] - B[k].matvec(v) / b[k]) / LN2
    if M == 0:
        return g
    beta = 1.0 / (alpha * LN2)
    for k in range(K):
        C = [matrices.C(m, k) for m in range(M)]
        D = [matrices.D(m, k) for m in range(M)]
        c = np.array([Cm.quad(v) for Cm in C])
        d = np.array([Dm.quad(v) for Dm in D])
        if np.any(c <= 0) or np.any(d <= 0):
            raise NumericalDomainError("non-positive eavesdropper quadratic form")
        z = beta * np.log(c / d)
        w = np.exp(z - logsumexp(z))
        for m in range(M):
            g -= alpha * beta * w[m] * (C[m].matvec(v) / c[m] - D[m].matvec(v) / d[m])
    return g
