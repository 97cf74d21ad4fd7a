from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError
from .ratecore import RateReport


@dataclass(frozen=True)
class LineSearchSettings:
    """Grid over the AN power fraction xi.

    By default the grid is ``0, xi_step, 2*xi_step, ..., 1``. An explicit
    ``xi_values`` sequence overrides it and must contain 0.
    """

    xi_step: float = 0.05
    xi_values: Optional[Sequence[float]] = None
    warm_start: bool = True

    def __post_init__(self):
        if not 0 < self.xi_step <= 1:
            raise ParameterError("xi_step must lie in (0, 1]")
        if self.xi_values is not None:
            vals = tuple(float(x) for x in self.xi_values)
            if 0.0 not in vals or any(not 0 <= x <= 1 for x in vals):
                raise ParameterError("xi_values must lie in [0, 1] and include 0")
            object.__setattr__(self, "xi_values", vals)

    def grid(self):
        if self.xi_values is not None:
            return np.array(sorted(set(self.xi_values)))
        n = int(round(1.0 / self.xi_step))
        if abs(n * self.xi_step - 1.0) < 1e-9:
            return np.linspace(0.0, 1.0, n + 1)
        return np.append(np.arange(0.0, 1.0, self.xi_step), 1.0)


@dataclass
class SolverResult:
    """Final design of one solver on one channel realization.

    ``power_split`` is the fraction of the unit power budget spent on AN.
    ``trace`` keeps ``(iteration, step_norm, objective)`` tuples of the GPI
    run behind the returned design, when there is one.
    """

    precoder: np.ndarray
    an_factor: np.ndarray
    power_split: float
    objective_trace: list
    iterations: int
    converged: bool
    report: RateReport
    name: str = ""
    xi: Optional[float] = None
    trace: list = field(default_factory=list)

    @property
    def total_power(self):
        return float(np.linalg.norm(self.precoder) ** 2 + np.linalg.norm(self.an_factor) ** 2)

    @property
    def sum_secrecy(self):
        return self.report.sum_secrecy

    @property
    def objective(self):
        return self.objective_trace[-1] if self.objective_trace else float("nan")
