"""Secure MU-MIMO precoding with artificial noise via generalized power iteration.

The package is organized bottom-up:

* :mod:`anprecode.chanmodel` -- system configuration and seeded one-ring channel drops
* :mod:`anprecode.ratecore` -- rates, Rayleigh-quotient matrix families, smoothed objective
* :mod:`anprecode.gpi` -- KKT pencil assembly and the fixed-point iteration
* :mod:`anprecode.solvers` -- JS-GPIP, JS-GPIP(Cov), S-GPIP, J-GPIP-NS, J-GPIP-NS(Low)
* :mod:`anprecode.baselines` -- ZF/RZF/MRT/RZF-EVE/GPIP and their null-space AN versions
* :mod:`anprecode.harness` -- experiment specs, Monte Carlo runner, brute-force oracle, CLI

Set ``ANPRECODE_DISABLE_NUMBA=1`` before import to run the pure-numpy kernels.
"""

from .baselines import BaselineKind, linear_precoder, run_baseline
from .chanmodel import ChannelRealization, GeometryConfig, SystemConfig, drop_network
from .errors import BlockDecompositionError, DimensionError, NumericalDomainError, ParameterError
from .gpi import GpiSettings, assemble_kkt, gpi_iterate
from .kernels import BACKEND
from .ratecore import StackedDesign, sum_secrecy_rate, surrogate_objective
from .result import LineSearchSettings, SolverResult
from .solvers import alpha_search, j_gpip_ns, j_gpip_ns_low, js_gpip, js_gpip_cov, s_gpip

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BaselineKind",
    "BlockDecompositionError",
    "ChannelRealization",
    "DimensionError",
    "GeometryConfig",
    "GpiSettings",
    "LineSearchSettings",
    "NumericalDomainError",
    "ParameterError",
    "SolverResult",
    "StackedDesign",
    "SystemConfig",
    "alpha_search",
    "assemble_kkt",
    "drop_network",
    "gpi_iterate",
    "j_gpip_ns",
    "j_gpip_ns_low",
    "js_gpip",
    "js_gpip_cov",
    "linear_precoder",
    "run_baseline",
    "s_gpip",
    "sum_secrecy_rate",
    "surrogate_objective",
]
