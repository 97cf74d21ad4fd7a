"""Conventional linear precoders and their null-space AN extensions."""

from __future__ import annotations

import enum
import warnings

import numpy as np
import scipy.linalg

from .chanmodel import sigma_over_p
from .errors import ParameterError
from .ratecore import sum_secrecy_rate
from .result import LineSearchSettings, SolverResult

__all__ = [
    "BaselineKind",
    "linear_precoder",
    "zf_precoder",
    "mrt_precoder",
    "nullspace_basis",
    "nullspace_an",
    "an_columns",
    "ns_extension",
    "plain_result",
    "gpip_baseline",
    "run_baseline",
]


class BaselineKind(str, enum.Enum):
    ZF = "zf"
    RZF = "rzf"
    MRT = "mrt"
    RZF_EVE = "rzf_eve"
    GPIP = "gpip"


def _unit_power(F, name):
    p = np.linalg.norm(F)
    if not np.isfinite(p) or p == 0:
        raise np.linalg.LinAlgError(f"{name} precoder is undefined for this channel")
    return F / p


def mrt_precoder(H):
    return _unit_power(np.asarray(H, dtype=np.complex128), "MRT")


def zf_precoder(H, reg=0.0, name="ZF"):
    """Columns of ``H (H^H H + reg I)^-1``, scaled to unit total power."""
    H = np.asarray(H, dtype=np.complex128)
    N, K = H.shape
    if K > N and reg == 0:
        raise np.linalg.LinAlgError(f"{name} precoder needs K <= N (got K={K}, N={N})")
    gram = H.conj().T @ H + reg * np.eye(K)
    if np.linalg.matrix_rank(gram) < K:
        raise np.linalg.LinAlgError(f"{name} precoder: channel Gram matrix is rank deficient")
    return _unit_power(H @ np.linalg.solve(gram, np.eye(K)), name)


def linear_precoder(kind, channels, config):
    """Unit-power N x K precoder of the given conventional kind.

    RZF loads the Gram matrix with ``K sigma^2/P``. RZF-EVE appends the
    ``min(N-K, M)`` strongest eavesdropper channels to H, builds RZF on the
    augmented matrix and keeps the K user columns.
    """
    kind = BaselineKind(kind)
    H = channels.h_users
    N, K = H.shape
    s2, _ = sigma_over_p(config)
    if kind is BaselineKind.MRT:
        return mrt_precoder(H)
    if kind is BaselineKind.ZF:
        return zf_precoder(H)
    if kind is BaselineKind.RZF:
        return zf_precoder(H, K * s2, "RZF")
    if kind is BaselineKind.RZF_EVE:
        if not N > K:
            raise ParameterError("RZF-EVE requires N > K")
        G = channels.g_eves
        m_sel = min(N - K, G.shape[1])
        order = np.argsort(-np.linalg.norm(G, axis=0), kind="stable")[:m_sel]
        Haug = np.concatenate([H, G[:, order]], axis=1)
        Faug = zf_precoder(Haug, Haug.shape[1] * s2, "RZF-EVE")
        return _unit_power(Faug[:, :K], "RZF-EVE")
    raise ParameterError(f"{kind.value} is not a closed-form precoder")


def nullspace_basis(H, J):
    """First J columns of an orthonormal basis of ``null(H^H)``.

    The basis comes from a thin QR of the orthogonal projector
    ``I - H (H^H H)^-1 H^H``. When J exceeds the null-space dimension
    ``N - K`` the remaining columns are zero, with a warning.
    """
    H = np.asarray(H, dtype=np.complex128)
    N, K = H.shape
    if K >= N:
        raise ParameterError(f"no null space: K={K} >= N={N}")
    if J < 0 or J > N:
        raise ParameterError("J must lie in [0, N]")
    Q, _ = np.linalg.qr(H)
    proj = np.eye(N) - Q @ Q.conj().T
    # pivoted QR is rank revealing: the leading N-K columns span range(proj)
    U, _, _ = scipy.linalg.qr(proj, pivoting=True)
    basis = U[:, : N - K]
    out = np.zeros((N, J), dtype=np.complex128)
    r = min(J, N - K)
    out[:, :r] = basis[:, :r]
    if J > N - K:
        warnings.warn(f"J={J} exceeds null-space dimension {N - K}; padding with zero columns", stacklevel=2)
    return out


def an_columns(config):
    """AN column count for null-space designs; 0 in the config means N."""
    return config.n_an_cols or config.n_antennas


def nullspace_an(H, J):
    """Null-space AN direction with unit Frobenius norm (total AN power 1)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        P = nullspace_basis(H, J)
    return P / np.linalg.norm(P)


def plain_result(F, channels, config, name="", Phi=None):
    N = channels.n_antennas
    Phi = np.zeros((N, 0), complex) if Phi is None else Phi
    report = sum_secrecy_rate((F, Phi), channels, config)
    return SolverResult(
        precoder=F,
        an_factor=Phi,
        power_split=float(np.linalg.norm(Phi) ** 2),
        objective_trace=[],
        iterations=0,
        converged=True,
        report=report,
        name=name,
    )


def ns_extension(F, channels, config, line=None, name=""):
    """Power line search between a fixed precoder and null-space AN.

    Evaluates ``(sqrt(1-xi) F, sqrt(xi) Phi)`` for every xi on the grid and
    keeps the best exact clipped sum secrecy rate. Ties go to the smaller xi.
    """
    line = line or LineSearchSettings()
    H = channels.h_users
    Phi_t = nullspace_an(H, an_columns(config))
    F = np.asarray(F, dtype=np.complex128)
    if abs(np.linalg.norm(F) - 1.0) > 1e-12:
        F = _unit_power(F, "input")
    best = None
    for xi in line.grid():
        Fx, Px = np.sqrt(1.0 - xi) * F, np.sqrt(xi) * Phi_t
        # xi = 0 is scored exactly like the plain precoder
        rep = sum_secrecy_rate((Fx, Px if xi > 0 else Phi_t[:, :0]), channels, config)
        if best is None or rep.sum_secrecy > best[0].sum_secrecy:
            best = (rep, Fx, Px, xi)
    rep, Fx, Px, xi = best
    return SolverResult(
        precoder=Fx,
        an_factor=Px,
        power_split=float(xi),
        objective_trace=[],
        iterations=0,
        converged=True,
        report=rep,
        name=name,
        xi=float(xi),
    )


def gpip_baseline(channels, config, settings=None):
    """Sum-rate GPI precoding that ignores the eavesdroppers (J = 0)."""
    from .gpi import gpi_iterate
    from .ratecore import build_sumrate_matrices, unstack
    from .solvers import initial_precoder, _result

    mats = build_sumrate_matrices(channels, config, n_an_cols=0)
    out = gpi_iterate("sumrate", initial_precoder(channels.h_users).T.reshape(-1), mats, settings, config.alpha)
    F, Phi = unstack(out.vbar, channels.n_antennas, channels.n_users)
    return _result("gpip", F, Phi, channels, config, out)


def run_baseline(kind, channels, config, ns=False, settings=None, line=None):
    """Plain or null-space-extended baseline as a :class:`SolverResult`."""
    kind = BaselineKind(kind)
    name = kind.value.replace("_", "-") + ("-ns" if ns else "")
    if kind is BaselineKind.GPIP:
        plain = gpip_baseline(channels, config, settings)
        F = plain.precoder
    else:
        F = linear_precoder(kind, channels, config)
        plain = plain_result(F, channels, config, name)
    if not ns:
        plain.name = name
        return plain
    res = ns_extension(F, channels, config, line, name)
    res.iterations = plain.iterations
    return res
