"""Seeded channel realizations for the downlink wiretap scenario.

Geometry follows an indoor deployment: users uniform in an annulus around
the access point, each eavesdropper within a few meters of a randomly chosen
user. Small-scale fading uses the one-ring model on a uniform linear array
and large-scale loss an ITU-R indoor NLOS style log-distance law with
lognormal shadowing.

Randomness comes from numpy's counter-based ``Philox`` bit generator. A drop
seed is expanded with ``numpy.random.SeedSequence`` into four independent
child streams, in this fixed order: user placement, eavesdropper placement,
user fading, eavesdropper fading. Changing the number of eavesdroppers
therefore never perturbs the user draws of the same seed.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "SystemConfig",
    "GeometryConfig",
    "Layout",
    "ChannelRealization",
    "dbm_to_watt",
    "one_ring_covariance",
    "path_loss_db",
    "place_nodes",
    "draw_channels",
    "drop_network",
    "sigma_over_p",
    "psd_sqrt",
    "drop_streams",
]

STREAMS = ("user_geometry", "eve_geometry", "user_fading", "eve_fading")


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions, power budget, noise and smoothing parameter.

    ``n_antennas`` (N) transmit antennas serve ``n_users`` (K) single-antenna
    users while ``n_eves`` (M) eavesdroppers listen. ``n_an_cols`` (J) is the
    number of artificial-noise columns.
    """

    n_antennas: int
    n_users: int
    n_eves: int = 0
    n_an_cols: int = 0
    tx_power_dbm: float = 20.0
    noise_psd_dbm_hz: float = -174.0
    bandwidth_hz: float = 1e7
    noise_figure_db: float = 5.0
    alpha: float = 0.3

    def __post_init__(self):
        for name in ("n_antennas", "n_users", "n_eves", "n_an_cols"):
            v = getattr(self, name)
            if int(v) != v:
                raise ParameterError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.n_antennas < 1:
            raise ParameterError("n_antennas must be >= 1")
        if self.n_users < 1:
            raise ParameterError("n_users must be >= 1")
        if self.n_eves < 0 or self.n_an_cols < 0:
            raise ParameterError("n_eves and n_an_cols must be >= 0")
        if self.n_an_cols > self.n_antennas:
            raise ParameterError("n_an_cols must not exceed n_antennas")
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if not math.isfinite(self.tx_power_dbm):
            raise ParameterError("tx_power_dbm must be finite")

    @property
    def noise_dbm(self):
        return self.noise_psd_dbm_hz + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db

    @property
    def noise_power_w(self):
        return float(dbm_to_watt(self.noise_dbm))

    @property
    def eve_noise_power_w(self):
        # same PSD, bandwidth and noise figure as the users
        return self.noise_power_w

    @property
    def tx_power_w(self):
        return float(dbm_to_watt(self.tx_power_dbm))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class GeometryConfig:
    user_dist_min_m: float = 5.0
    user_dist_max_m: float = 50.0
    eve_dist_max_m: float = 5.0
    path_loss_coefficient: float = 30.0
    carrier_ghz: float = 5.0
    shadowing_var_db: float = 10.0
    angular_spread_deg: float = 10.0
    antenna_spacing: float = 0.5
    # path loss is evaluated no closer than this to the AP
    min_link_dist_m: float = 1.0

    def __post_init__(self):
        if not 0 < self.user_dist_min_m < self.user_dist_max_m:
            raise ParameterError("need 0 < user_dist_min_m < user_dist_max_m")
        if not self.eve_dist_max_m > 0:
            raise ParameterError("eve_dist_max_m must be positive")
        if not 0 < self.angular_spread_deg <= 90:
            raise ParameterError("angular_spread_deg must be in (0, 90]")
        if self.shadowing_var_db < 0:
            raise ParameterError("shadowing_var_db must be non-negative")
        if not self.min_link_dist_m > 0:
            raise ParameterError("min_link_dist_m must be positive")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def one_ring_covariance(n_antennas, angle_of_arrival, angular_spread, antenna_spacing=0.5, order=64):
    """Spatial covariance of a uniform linear array under the one-ring model.

    Entries are the angular average of the array response over
    ``[aoa - spread, aoa + spread]``::

        R[p, q] = 1/(2*spread) * int exp(-2j*pi*spacing*(p - q)*sin(t)) dt

    evaluated with fixed-order Gauss-Legendre quadrature. The result is a
    Hermitian Toeplitz PSD matrix with unit diagonal. A zero spread gives
    the rank-1 steering-vector outer product.
    """
    if not 0 <= angular_spread <= math.pi / 2:
        raise ParameterError("angular_spread must lie in [0, pi/2]")
    n = int(n_antennas)
    if n < 1:
        raise ParameterError("n_antennas must be >= 1")
    if angular_spread == 0:
        a = np.exp(-2j * np.pi * antenna_spacing * np.arange(n) * math.sin(angle_of_arrival))
        return np.outer(a, a.conj())
    nodes, weights = np.polynomial.legendre.leggauss(order)
    theta = angle_of_arrival + angular_spread * nodes
    lag = np.arange(n)
    # first column of the Toeplitz matrix; weights sum to 2
    col = (weights * np.exp(-2j * np.pi * antenna_spacing * lag[:, None] * np.sin(theta))).sum(axis=1) / 2.0
    diff = lag[:, None] - lag[None, :]
    R = np.where(diff >= 0, col[np.abs(diff)], np.conj(col[np.abs(diff)]))
    R[np.diag_indices(n)] = 1.0
    return 0.5 * (R + R.conj().T)


def path_loss_db(distance_m, geometry, shadowing_draw=0.0):
    """Path loss in dB: ``20 log10(f_MHz) + coeff*log10(d) - 28 + shadowing``."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(~(d > 0)):
        raise ParameterError("distance must be positive")
    f_mhz = geometry.carrier_ghz * 1e3
    loss = 20.0 * math.log10(f_mhz) + geometry.path_loss_coefficient * np.log10(d) - 28.0 + shadowing_draw
    return float(loss) if loss.ndim == 0 else loss


def sigma_over_p(config):
    """Noise-to-power ratios ``(sigma^2/P, sigma_e^2/P)``."""
    p = config.tx_power_w
    return config.noise_power_w / p, config.eve_noise_power_w / p


def psd_sqrt(R):
    """Hermitian square root of a PSD matrix (negative eigenvalues clipped)."""
    w, U = np.linalg.eigh(0.5 * (R + R.conj().T))
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.conj().T


@dataclass(frozen=True)
class Layout:
    """Large-scale state of a drop: positions, gains and covariances.

    Covariances include the linear path gain, so ``r_users[k]`` is
    ``E[h_k h_k^H]`` for the fixed geometry.
    """

    user_pos: np.ndarray
    eve_pos: np.ndarray
    eve_anchor: np.ndarray
    user_gain_db: np.ndarray
    eve_gain_db: np.ndarray
    r_users: np.ndarray
    r_eves: np.ndarray
    sqrt_users: np.ndarray = field(repr=False)
    sqrt_eves: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ChannelRealization:
    """Legitimate and wiretap channels with their spatial covariances.

    ``h_users`` is N x K (column k is h_k), ``g_eves`` is N x M, and the
    covariance stacks have shapes (K, N, N) and (M, N, N).
    """

    h_users: np.ndarray
    g_eves: np.ndarray
    r_users: np.ndarray
    r_eves: np.ndarray

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.h_users, dtype=np.complex128))
        n = h.shape[0]
        g = np.asarray(self.g_eves, dtype=np.complex128).reshape(n, -1)
        ru = np.asarray(self.r_users, dtype=np.complex128).reshape(-1, n, n)
        re = np.asarray(self.r_eves, dtype=np.complex128).reshape(-1, n, n)
        if ru.shape[0] not in (0, h.shape[1]):
            raise DimensionError("r_users must hold one covariance per user")
        if re.shape[0] not in (0, g.shape[1]):
            raise DimensionError("r_eves must hold one covariance per eavesdropper")
        for name, arr in (("h_users", h), ("g_eves", g), ("r_users", ru), ("r_eves", re)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_channels(cls, h_users, g_eves=None, r_eves=None, r_users=None):
        """Build a realization from bare channels.

        Missing covariances default to the rank-1 outer products of the
        given channels.
        """
        h = np.atleast_2d(np.asarray(h_users, dtype=np.complex128))
        n = h.shape[0]
        g = np.zeros((n, 0), complex) if g_eves is None else np.asarray(g_eves, complex).reshape(n, -1)
        if r_users is None:
            r_users = np.einsum("ik,jk->kij", h, h.conj())
        if r_eves is None:
            r_eves = np.einsum("ik,jk->kij", g, g.conj())
        return cls(h, g, r_users, r_eves)

    @property
    def n_antennas(self):
        return self.h_users.shape[0]

    @property
    def n_users(self):
        return self.h_users.shape[1]

    @property
    def n_eves(self):
        return self.g_eves.shape[1]


def drop_streams(seed):
    """Independent Philox generators for the four randomness streams of a drop."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return {name: np.random.Generator(np.random.Philox(child)) for name, child in zip(STREAMS, ss.spawn(len(STREAMS)))}


def _covariances(pos, gain_db, n, geometry):
    spread = math.radians(geometry.angular_spread_deg)
    R = np.empty((len(pos), n, n), dtype=np.complex128)
    S = np.empty_like(R)
    for i, (x, y) in enumerate(pos):
        aoa = math.atan2(y, x)
        base = one_ring_covariance(n, aoa, spread, geometry.antenna_spacing)
        R[i] = 10.0 ** (gain_db[i] / 10.0) * base
        S[i] = psd_sqrt(R[i])
    return R, S


def place_nodes(config, geometry, rngs):
    """Draw positions and shadowing, and build the large-scale covariances."""
    K, M, N = config.n_users, config.n_eves, config.n_antennas
    ru = rngs["user_geometry"]
    r = np.sqrt(ru.uniform(geometry.user_dist_min_m**2, geometry.user_dist_max_m**2, K))
    phi = ru.uniform(-np.pi, np.pi, K)
    user_pos = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    user_shadow = ru.normal(0.0, geometry.shadowing_var_db, K)

    re = rngs["eve_geometry"]
    anchor = re.integers(0, K, M)
    rho = geometry.eve_dist_max_m * np.sqrt(re.uniform(0.0, 1.0, M))
    psi = re.uniform(-np.pi, np.pi, M)
    eve_pos = user_pos[anchor] + np.column_stack([rho * np.cos(psi), rho * np.sin(psi)])
    eve_shadow = re.normal(0.0, geometry.shadowing_var_db, M)

    def gains(pos, shadow):
        d = np.maximum(np.hypot(pos[:, 0], pos[:, 1]), geometry.min_link_dist_m)
        if len(d) == 0:
            return np.zeros(0)
        return -path_loss_db(d, geometry, shadow)

    ug = gains(user_pos, user_shadow)
    eg = gains(eve_pos, eve_shadow)
    Ru, Su = _covariances(user_pos, ug, N, geometry)
    Re, Se = _covariances(eve_pos, eg, N, geometry)
    return Layout(user_pos, eve_pos, anchor, ug, eg, Ru, Re, Su, Se)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def draw_channels(layout, rngs):
    """Small-scale draw ``R^{1/2} w`` for every node of a fixed layout."""
    K, N = layout.r_users.shape[:2]
    M = layout.r_eves.shape[0]
    wu = _cn(rngs["user_fading"], (K, N))
    we = _cn(rngs["eve_fading"], (M, N))
    h = np.einsum("kij,kj->ik", layout.sqrt_users, wu)
    g = np.einsum("mij,mj->im", layout.sqrt_eves, we).reshape(N, M)
    return ChannelRealization(h, g, layout.r_users, layout.r_eves)


def drop_network(config, geometry=None, seed=0):
    """One seeded network drop: geometry, covariances and channel draw."""
    geometry = geometry or GeometryConfig()
    rngs = drop_streams(seed)
    layout = place_nodes(config, geometry, rngs)
    return draw_channels(layout, rngs)
