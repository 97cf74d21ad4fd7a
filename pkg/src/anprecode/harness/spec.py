"""Experiment specifications, solver registry and figure presets.

A spec file is YAML with these top-level keys (all optional except
``name``, ``sweep_variable`` and ``sweep_values``)::

    name: fig4
    sweep_variable: n_antennas        # tx_power | n_antennas | n_eves | n_an_cols
    sweep_values: [6, 8, 10, 12, 14, 16]
    n_drops: 200
    seed: 0
    solvers: [js-gpip, s-gpip, rzf-ns]
    output_dir: results/fig4
    traces: false                     # per-iteration GPI traces
    alpha_grid: null                  # e.g. [0.1, 0.3, 1.0] for online alpha search
    system:   {n_antennas: 16, n_users: 4, n_eves: 4, n_an_cols: null, tx_power_dbm: 20, ...}
    geometry: {user_dist_min_m: 5, user_dist_max_m: 50, ...}
    gpi:      {epsilon: 1.0e-6, max_iters: 100}
    line_search: {xi_step: 0.05, warm_start: true}

``system.n_an_cols: null`` (the default) means J = N at every sweep point.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import Optional

import yaml

from ..baselines import run_baseline
from ..chanmodel import GeometryConfig, SystemConfig
from ..errors import ParameterError
from ..gpi import GpiSettings
from ..result import LineSearchSettings
from ..solvers import alpha_search, j_gpip_ns, j_gpip_ns_low, js_gpip, js_gpip_cov, s_gpip

__all__ = [
    "SWEEP_VARIABLES",
    "PROPOSED",
    "BASELINES",
    "SOLVER_NAMES",
    "ExperimentSpec",
    "load_spec",
    "spec_from_dict",
    "preset",
    "PRESETS",
    "run_solver",
]

SWEEP_VARIABLES = ("tx_power", "n_antennas", "n_eves", "n_an_cols")
_SWEEP_FIELD = {"tx_power": "tx_power_dbm", "n_antennas": "n_antennas", "n_eves": "n_eves", "n_an_cols": "n_an_cols"}

PROPOSED = ("js-gpip", "js-gpip-cov", "j-gpip-ns", "j-gpip-ns-low", "s-gpip")
BASELINES = (
    "zf", "rzf", "mrt", "rzf-eve", "gpip",
    "zf-ns", "rzf-ns", "mrt-ns", "rzf-eve-ns", "gpip-ns",
)
SOLVER_NAMES = PROPOSED + BASELINES
# GPI-driven solvers produce traces and take part in alpha search
GPI_SOLVERS = PROPOSED + ("gpip", "gpip-ns")

_PROPOSED_FN = {
    "js-gpip": lambda ch, cfg, gpi, line: js_gpip(ch, cfg, gpi),
    "js-gpip-cov": lambda ch, cfg, gpi, line: js_gpip_cov(ch, cfg, gpi),
    "s-gpip": lambda ch, cfg, gpi, line: s_gpip(ch, cfg, gpi),
    "j-gpip-ns": lambda ch, cfg, gpi, line: j_gpip_ns(ch, cfg, gpi, line),
    "j-gpip-ns-low": lambda ch, cfg, gpi, line: j_gpip_ns_low(ch, cfg, gpi, line),
}


def run_solver(name, channels, config, gpi=None, line=None, alpha_grid=None):
    """Run one registered solver or baseline by its identifier."""
    if name in _PROPOSED_FN:
        fn = _PROPOSED_FN[name]
        if alpha_grid:
            return alpha_search(lambda ch, cfg: fn(ch, cfg, gpi, line), channels, config, alpha_grid)
        return fn(channels, config, gpi, line)
    if name in BASELINES:
        ns = name.endswith("-ns")
        kind = name[:-3] if ns else name
        return run_baseline(kind.replace("-", "_"), channels, config, ns=ns, settings=gpi, line=line)
    raise ParameterError(f"unknown solver {name!r}; known: {', '.join(SOLVER_NAMES)}")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    sweep_variable: str
    sweep_values: tuple
    system: dict = field(default_factory=dict)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    n_drops: int = 200
    seed: int = 0
    solvers: tuple = PROPOSED
    output_dir: str = "results"
    gpi: GpiSettings = field(default_factory=GpiSettings)
    line_search: LineSearchSettings = field(default_factory=LineSearchSettings)
    traces: bool = False
    alpha_grid: Optional[tuple] = None

    def __post_init__(self):
        if not self.name:
            raise ParameterError("spec needs a name")
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ParameterError(f"sweep_variable must be one of {SWEEP_VARIABLES}, got {self.sweep_variable!r}")
        if len(self.sweep_values) == 0:
            raise ParameterError("sweep_values must be non-empty")
        if int(self.n_drops) < 1:
            raise ParameterError("n_drops must be >= 1")
        if not self.solvers:
            raise ParameterError("at least one solver is required")
        for s in self.solvers:
            if s not in SOLVER_NAMES:
                raise ParameterError(f"unknown solver {s!r}; known: {', '.join(SOLVER_NAMES)}")
        if self.alpha_grid is not None and (not self.alpha_grid or min(self.alpha_grid) <= 0):
            raise ParameterError("alpha_grid must hold positive values")
        unknown = set(self.system) - {f.name for f in dataclasses.fields(SystemConfig)}
        if unknown:
            raise ParameterError(f"unknown system keys: {sorted(unknown)}")
        # resolve every sweep point once so bad combinations fail at load time
        for v in self.sweep_values:
            self.config_at(v)

    def config_at(self, value):
        """SystemConfig at one sweep point (J defaults to N)."""
        kw = dict(self.system)
        kw[_SWEEP_FIELD[self.sweep_variable]] = value
        for key in ("n_antennas", "n_users", "n_eves", "n_an_cols"):
            if kw.get(key) is not None:
                v = kw[key]
                if float(v) != int(v):
                    raise ParameterError(f"{key} must be an integer, got {v!r}")
                kw[key] = int(v)
        if kw.get("n_an_cols") is None:
            if "n_antennas" not in kw:
                raise ParameterError("system.n_antennas is required")
            kw["n_an_cols"] = kw["n_antennas"]
        try:
            return SystemConfig(**kw)
        except TypeError as exc:
            raise ParameterError(str(exc)) from None

    def to_dict(self):
        """Fully resolved, YAML/JSON-serializable form."""
        return {
            "name": self.name,
            "sweep_variable": self.sweep_variable,
            "sweep_values": list(self.sweep_values),
            "n_drops": int(self.n_drops),
            "seed": int(self.seed),
            "solvers": list(self.solvers),
            "output_dir": str(self.output_dir),
            "traces": bool(self.traces),
            "alpha_grid": None if self.alpha_grid is None else list(self.alpha_grid),
            "system": {k: (None if v is None else v) for k, v in self._system_defaults().items()},
            "geometry": dataclasses.asdict(self.geometry),
            "gpi": dataclasses.asdict(self.gpi),
            "line_search": {
                "xi_step": self.line_search.xi_step,
                "xi_values": None if self.line_search.xi_values is None else list(self.line_search.xi_values),
                "warm_start": self.line_search.warm_start,
            },
        }

    def _system_defaults(self):
        out = {f.name: f.default for f in dataclasses.fields(SystemConfig)}
        out["n_an_cols"] = None
        out.update(self.system)
        out.pop(_SWEEP_FIELD[self.sweep_variable], None)
        return out

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _sub(d, key, cls):
    raw = d.get(key) or {}
    if not isinstance(raw, dict):
        raise ParameterError(f"{key} must be a mapping")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ParameterError(f"{key}: {exc}") from None


def spec_from_dict(d):
    """Build an :class:`ExperimentSpec` from a parsed mapping, applying defaults."""
    if not isinstance(d, dict):
        raise ParameterError("spec must be a mapping")
    known = {f.name for f in dataclasses.fields(ExperimentSpec)}
    unknown = set(d) - known
    if unknown:
        raise ParameterError(f"unknown spec keys: {sorted(unknown)}")
    for key in ("name", "sweep_variable", "sweep_values"):
        if key not in d:
            raise ParameterError(f"spec is missing {key!r}")
    system = dict(d.get("system") or {})
    alpha_grid = d.get("alpha_grid")
    return ExperimentSpec(
        name=str(d["name"]),
        sweep_variable=d["sweep_variable"],
        sweep_values=tuple(d["sweep_values"] or ()),
        system=system,
        geometry=_sub(d, "geometry", GeometryConfig),
        n_drops=int(d.get("n_drops", 200)),
        seed=int(d.get("seed", 0)),
        solvers=tuple(d.get("solvers") or PROPOSED),
        output_dir=str(d.get("output_dir", os.path.join("results", str(d["name"])))),
        gpi=_sub(d, "gpi", GpiSettings),
        line_search=_sub(d, "line_search", LineSearchSettings),
        traces=bool(d.get("traces", False)),
        alpha_grid=None if alpha_grid is None else tuple(float(a) for a in alpha_grid),
    )


def load_spec(path):
    """Parse a YAML spec file.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    ParameterError
        On malformed content.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ParameterError(f"{path}: not valid YAML ({exc})") from None
    return spec_from_dict(data)


# --------------------------------------------------------------------------
# figure presets

_STANDARD = PROPOSED + ("gpip", "rzf", "rzf-eve", "gpip-ns", "rzf-ns", "rzf-eve-ns", "mrt-ns")
_AN_AIDED = ("js-gpip", "js-gpip-cov", "j-gpip-ns", "j-gpip-ns-low", "gpip-ns", "rzf-ns", "rzf-eve-ns", "mrt-ns")

PRESETS = {
    "fig2": dict(
        sweep_variable="tx_power", sweep_values=(0, 10, 20, 30, 40),
        system=dict(n_antennas=4, n_users=1, n_eves=3),
        solvers=PROPOSED + ("gpip-ns", "rzf-eve-ns", "mrt-ns"),
        alpha_grid=(0.05, 0.1, 0.2, 0.3, 0.5, 1.0),
    ),
    "fig3": dict(
        sweep_variable="tx_power", sweep_values=(0, 10, 20, 30, 40),
        system=dict(n_antennas=16, n_users=2, n_eves=4), solvers=_STANDARD,
    ),
    "fig4": dict(
        sweep_variable="n_antennas", sweep_values=(6, 8, 10, 12, 14, 16),
        system=dict(n_users=4, n_eves=4, tx_power_dbm=20), solvers=_STANDARD,
    ),
    "fig5": dict(
        sweep_variable="n_eves", sweep_values=(1, 2, 4, 6, 8),
        system=dict(n_antennas=16, n_users=4, tx_power_dbm=20), solvers=_STANDARD,
    ),
    "fig6": dict(
        sweep_variable="n_an_cols", sweep_values=(1, 2, 4, 8, 16),
        system=dict(n_antennas=16, n_users=2, n_eves=4, tx_power_dbm=20), solvers=_AN_AIDED,
    ),
    "fig7": dict(
        sweep_variable="tx_power", sweep_values=(-20, 0, 20, 40),
        system=dict(n_antennas=8, n_users=4, n_eves=4), solvers=("js-gpip",), traces=True,
    ),
}


def preset(name, n_drops=None, seed=None, output_dir=None):
    """ExperimentSpec for one of the figure presets (``fig2`` ... ``fig7``)."""
    if name not in PRESETS:
        raise ParameterError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    kw = dict(PRESETS[name])
    kw["system"] = dict(kw["system"])
    return ExperimentSpec(
        name=name,
        n_drops=200 if n_drops is None else int(n_drops),
        seed=0 if seed is None else int(seed),
        output_dir=output_dir or os.path.join("results", name),
        **kw,
    )
