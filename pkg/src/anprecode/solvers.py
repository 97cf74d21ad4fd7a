"""Joint precoder / AN design algorithms built on the GPI engine.

* :func:`js_gpip` optimizes precoders, AN columns and their power split in
  one power iteration with perfect wiretap CSIT.
* :func:`js_gpip_cov` does the same knowing only the eavesdropper
  covariances.
* :func:`s_gpip` is the AN-free special case (J = 0).
* :func:`j_gpip_ns` fixes the AN to the user null space and alternates a
  GPI precoder solve with a line search over the AN power fraction.
* :func:`j_gpip_ns_low` runs GPI once without AN and only line-searches the
  power split afterwards.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from .baselines import an_columns, mrt_precoder, nullspace_an, zf_precoder
from .errors import ParameterError
from .gpi import GpiSettings, gpi_iterate
from .ratecore import (
    build_covariance_matrices,
    build_nullspace_matrices,
    build_perfect_matrices,
    build_sumrate_matrices,
    stack,
    sum_secrecy_rate,
    unstack,
)
from .result import LineSearchSettings, SolverResult

log = logging.getLogger(__name__)

__all__ = [
    "SolverResult",
    "LineSearchSettings",
    "initial_precoder",
    "initial_design",
    "js_gpip",
    "js_gpip_cov",
    "s_gpip",
    "j_gpip_ns",
    "j_gpip_ns_low",
    "run_gpi_design",
    "alpha_search",
]


def initial_precoder(H):
    """ZF when it exists, MRT otherwise; unit total power."""
    try:
        return zf_precoder(H)
    except np.linalg.LinAlgError:
        return mrt_precoder(H)


def initial_design(H, J):
    """Stacked starting point: ZF precoder plus null-space projector columns.

    The AN part is the first J columns of ``I - H (H^H H)^-1 H^H`` (identity
    columns when the null space is empty). Precoder and AN each get half
    of the unit power.
    """
    H = np.asarray(H, dtype=np.complex128)
    N, K = H.shape
    F0 = initial_precoder(H)
    if J == 0:
        return stack(F0)
    Phi0 = None
    if K < N:
        Q, _ = np.linalg.qr(H)
        proj = np.eye(N) - Q @ Q.conj().T
        Phi0 = proj[:, :J]
        if np.linalg.norm(Phi0) < 1e-8:
            Phi0 = None
    if Phi0 is None:
        Phi0 = np.eye(N, J, dtype=np.complex128)
    Phi0 = Phi0 / np.linalg.norm(Phi0)
    return stack(F0, Phi0) / np.sqrt(2.0)


def _result(name, F, Phi, channels, config, outcome, xi=None, iterations=None):
    return SolverResult(
        precoder=F,
        an_factor=Phi,
        power_split=float(np.linalg.norm(Phi) ** 2),
        objective_trace=[t[2] for t in outcome.trace],
        iterations=outcome.iterations if iterations is None else iterations,
        converged=outcome.converged,
        report=sum_secrecy_rate((F, Phi), channels, config),
        name=name,
        xi=xi,
        trace=list(outcome.trace),
    )


def run_gpi_design(variant, matrices, channels, config, settings=None, v0=None, n_restarts=0, seed=0):
    """Run GPI from the ZF start (plus optional random restarts).

    Returns the outcome with the highest final objective.
    """
    settings = settings or GpiSettings()
    J = matrices.n_blocks - channels.n_users
    if v0 is None:
        v0 = initial_design(channels.h_users, J)
    best = gpi_iterate(variant, v0, matrices, settings, config.alpha)
    if n_restarts:
        rng = np.random.default_rng(seed)
        for _ in range(n_restarts):
            z = rng.standard_normal((2, matrices.dim))
            out = gpi_iterate(variant, z[0] + 1j * z[1], matrices, settings, config.alpha)
            if out.objective > best.objective:
                best = out
    return best


def js_gpip(channels, config, settings=None, n_restarts=0, seed=0):
    """Joint precoder and AN design with perfect wiretap CSIT.

    Without eavesdroppers this is plain sum-rate GPI over the same stacked
    vector.
    """
    if channels.n_eves:
        variant, mats = "perfect", build_perfect_matrices(channels, config)
    else:
        variant, mats = "sumrate", build_sumrate_matrices(channels, config)
    out = run_gpi_design(variant, mats, channels, config, settings, n_restarts=n_restarts, seed=seed)
    F, Phi = unstack(out.vbar, channels.n_antennas, channels.n_users)
    return _result("js-gpip", F, Phi, channels, config, out)


def js_gpip_cov(channels, config, settings=None, n_restarts=0, seed=0):
    """Joint design from eavesdropper covariances only.

    The design step never reads ``channels.g_eves``; the returned report is
    scored on the true wiretap channels.
    """
    if channels.n_eves:
        variant, mats = "covariance", build_covariance_matrices(channels, config)
    else:
        variant, mats = "sumrate", build_sumrate_matrices(channels, config)
    out = run_gpi_design(variant, mats, channels, config, settings, n_restarts=n_restarts, seed=seed)
    F, Phi = unstack(out.vbar, channels.n_antennas, channels.n_users)
    return _result("js-gpip-cov", F, Phi, channels, config, out)


def s_gpip(channels, config, settings=None):
    """Secure GPI precoding without AN."""
    res = js_gpip(channels, config.replace(n_an_cols=0), settings)
    res.name = "s-gpip"
    return res


def _require_null_space(channels):
    if not channels.n_users < channels.n_antennas:
        raise ParameterError("null-space AN needs K < N")


def _ns_variant(channels, xi):
    if channels.n_eves == 0:
        return "sumrate"
    return "nullspace_xi0" if xi == 0 else "nullspace"


def j_gpip_ns(channels, config, settings=None, line=None):
    """GPI precoding with null-space AN and a line search over xi.

    For each xi the precoder is reparameterized as
    ``F = sqrt(1 - xi) W`` (the AN direction has unit power), GPI solves for
    ``W`` warm-started from the previous grid point, and the grid point
    with the highest exact clipped sum secrecy rate wins. At ``xi = 1`` no
    power is left for the precoder and the all-AN design is scored directly.
    """
    _require_null_space(channels)
    settings = settings or GpiSettings()
    line = line or LineSearchSettings()
    N, K = channels.n_antennas, channels.n_users
    Phi_t = nullspace_an(channels.h_users, an_columns(config))
    f0 = stack(initial_precoder(channels.h_users))
    w_prev = f0
    best = None
    total_iters = 0
    for xi in line.grid():
        Phi = np.sqrt(xi) * Phi_t
        if xi >= 1.0:
            F = np.zeros((N, K), complex)
            rep = sum_secrecy_rate((F, Phi), channels, config)
            if best is None or rep.sum_secrecy > best.report.sum_secrecy:
                best = SolverResult(F, Phi, float(xi), [], 0, True, rep, "j-gpip-ns", float(xi))
            continue
        try:
            mats = build_nullspace_matrices(channels, config, Phi_t, xi)
        except ParameterError as exc:
            warnings.warn(f"skipping xi={xi:.3f}: {exc}", stacklevel=2)
            continue
        start = w_prev if line.warm_start else f0
        out = gpi_iterate(_ns_variant(channels, xi), start, mats, settings, config.alpha)
        total_iters += out.iterations
        W, _ = unstack(out.vbar, N, K)
        F = np.sqrt(mats.scale) * W
        res = _result("j-gpip-ns", F, Phi, channels, config, out, xi=float(xi))
        if best is None or res.report.sum_secrecy > best.report.sum_secrecy:
            best = res
        w_prev = out.vbar
    best.iterations = total_iters
    return best


def j_gpip_ns_low(channels, config, settings=None, line=None):
    """One GPI run without AN, then a pure power-split line search."""
    _require_null_space(channels)
    settings = settings or GpiSettings()
    line = line or LineSearchSettings()
    N, K = channels.n_antennas, channels.n_users
    Phi_t = nullspace_an(channels.h_users, an_columns(config))
    mats = build_nullspace_matrices(channels, config, Phi_t, 0.0)
    out = gpi_iterate(_ns_variant(channels, 0.0), stack(initial_precoder(channels.h_users)), mats, settings, config.alpha)
    F1, _ = unstack(out.vbar, N, K)
    best = None
    for xi in line.grid():
        F, Phi = np.sqrt(1.0 - xi) * F1, np.sqrt(xi) * Phi_t
        rep = sum_secrecy_rate((F, Phi), channels, config)
        if best is None or rep.sum_secrecy > best[0].sum_secrecy:
            best = (rep, F, Phi, float(xi))
    rep, F, Phi, xi = best
    res = _result("j-gpip-ns-low", F, Phi, channels, config, out, xi=xi)
    res.report = rep
    return res


def alpha_search(solver, channels, config, alphas, **kwargs):
    """Rerun ``solver`` for each smoothing value and keep the best design.

    Designs are compared on the exact clipped sum secrecy rate; ties go to
    the earlier alpha. The returned result records the total iteration count.
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ParameterError("alpha grid is empty")
    best, total = None, 0
    for a in alphas:
        res = solver(channels, config.replace(alpha=a), **kwargs)
        total += res.iterations
        if best is None or res.sum_secrecy > best.sum_secrecy:
            best = res
    best.iterations = total
    return best
