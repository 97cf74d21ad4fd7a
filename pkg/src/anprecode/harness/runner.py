"""Monte Carlo orchestration and result persistence.

Drop ``i`` of an experiment with master seed ``s`` is generated from
``SeedSequence(s, spawn_key=(i,))``. The channel of drop ``i`` therefore
depends neither on the solver list nor on the worker count, and the same
drop index yields the same geometry at every sweep point whose dimensions
agree.

Work is split into (sweep point, drop) units. Units run in a process pool
of ``ANPRECODE_WORKERS`` workers (default 1) and rows are merged by
(sweep index, drop index, solver index), so the output files do not
depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..chanmodel import drop_network
from ..errors import ParameterError
from .spec import GPI_SOLVERS, ExperimentSpec, run_solver, spec_from_dict

log = logging.getLogger(__name__)

__all__ = [
    "CSV_HEADER",
    "ResultRow",
    "Failure",
    "ExperimentResult",
    "drop_seed_sequence",
    "worker_count",
    "run_experiment",
    "emit_results",
    "summarize",
    "load_rows_json",
]

CSV_HEADER = (
    "experiment", "solver", "sweep_value", "drop_seed", "sum_secrecy",
    "power_split", "iterations", "wall_time_ms",
)


@dataclass(frozen=True)
class ResultRow:
    """One (sweep value, drop, solver) outcome.

    ``drop_seed`` is the drop index fed to :func:`drop_seed_sequence`;
    ``wall_time_ms`` is None unless timing was requested.
    """

    experiment: str
    solver: str
    sweep_value: float
    drop_seed: int
    sum_secrecy: float
    per_user_secrecy: tuple
    power_split: float
    iterations: int
    wall_time_ms: Optional[float] = None

    def __post_init__(self):
        if not self.sum_secrecy >= 0:
            raise ParameterError(f"sum_secrecy must be >= 0, got {self.sum_secrecy}")
        object.__setattr__(self, "per_user_secrecy", tuple(float(x) for x in self.per_user_secrecy))

    def to_dict(self):
        d = asdict(self)
        d["per_user_secrecy"] = list(self.per_user_secrecy)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class Failure:
    solver: str
    sweep_value: float
    drop_seed: int
    error: str


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list
    failures: list = field(default_factory=list)
    # traces[(solver, sweep_value)] -> list of (drop, iteration, delta_norm, objective)
    traces: dict = field(default_factory=dict)


def drop_seed_sequence(master_seed, drop_index):
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(drop_index),))


def worker_count(deterministic=False):
    """Worker processes from ``ANPRECODE_WORKERS`` (1 when deterministic)."""
    if deterministic:
        return 1
    raw = os.environ.get("ANPRECODE_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"ANPRECODE_WORKERS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ParameterError("ANPRECODE_WORKERS must be >= 1")
    return n


def _run_unit(spec_dict, sweep_index, drop_index, timing):
    spec = spec_from_dict(spec_dict)
    value = spec.sweep_values[sweep_index]
    config = spec.config_at(value)
    channels = drop_network(config, spec.geometry, drop_seed_sequence(spec.seed, drop_index))
    rows, failures, traces = [], [], {}
    for name in spec.solvers:
        t0 = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = run_solver(name, channels, config, spec.gpi, spec.line_search, spec.alpha_grid)
        except Exception as exc:  # recorded per row; the run goes on
            failures.append(Failure(name, value, drop_index, f"{type(exc).__name__}: {exc}"))
            continue
        elapsed = (time.perf_counter() - t0) * 1e3 if timing else None
        rows.append(
            ResultRow(
                experiment=spec.name,
                solver=name,
                sweep_value=value,
                drop_seed=drop_index,
                sum_secrecy=float(res.sum_secrecy),
                per_user_secrecy=tuple(res.report.secrecy_rates),
                power_split=float(res.power_split),
                iterations=int(res.iterations),
                wall_time_ms=elapsed,
            )
        )
        if spec.traces and name in GPI_SOLVERS and res.trace:
            traces[name] = [(drop_index, int(t), float(d), float(o)) for t, d, o in res.trace]
    return sweep_index, drop_index, rows, failures, traces


def run_experiment(spec, deterministic=False, timing=False, workers=None, progress=None):
    """Run every (sweep value, drop, solver) combination of ``spec``.

    Parameters
    ----------
    spec : ExperimentSpec
    deterministic : bool
        Run in-process and in order. Output is identical to the parallel run.
    timing : bool
        Record per-solve wall time. Timings differ between runs, so files
        are only byte-reproducible with timing off.
    workers : int, optional
        Overrides ``ANPRECODE_WORKERS``.
    progress : callable, optional
        Called with ``(done, total)`` after each unit.
    """
    n_workers = 1 if deterministic else (workers or worker_count())
    spec_dict = spec.to_dict()
    units = [(i, d) for i in range(len(spec.sweep_values)) for d in range(spec.n_drops)]
    results = {}
    if n_workers == 1:
        for n, (i, d) in enumerate(units, 1):
            out = _run_unit(spec_dict, i, d, timing)
            results[(i, d)] = out
            if progress:
                progress(n, len(units))
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futs = [pool.submit(_run_unit, spec_dict, i, d, timing) for i, d in units]
            for n, fut in enumerate(futs, 1):
                out = fut.result()
                results[(out[0], out[1])] = out
                if progress:
                    progress(n, len(units))
    rows, failures, traces = [], [], {}
    for key in sorted(results):
        _, _, r, f, tr = results[key]
        rows.extend(r)
        failures.extend(f)
        value = spec.sweep_values[key[0]]
        for name, entries in tr.items():
            traces.setdefault((name, value), []).extend(entries)
    for f in failures:
        log.warning("solver %s failed at %s=%s drop %d: %s", f.solver, spec.sweep_variable, f.sweep_value, f.drop_seed, f.error)
    return ExperimentResult(spec, rows, failures, traces)


def summarize(rows):
    """Mean, sample std and standard error per (solver, sweep value).

    Returns a list of dicts in first-appearance order.
    """
    groups = {}
    for r in rows:
        groups.setdefault((r.solver, r.sweep_value), []).append(r)
    out = []
    for (solver, value), rs in groups.items():
        x = np.array([r.sum_secrecy for r in rs])
        p = np.array([r.power_split for r in rs])
        std = float(x.std(ddof=1)) if len(x) > 1 else 0.0
        out.append(
            dict(
                solver=solver,
                sweep_value=value,
                n=len(x),
                mean=float(x.mean()),
                std=std,
                sem=std / math.sqrt(len(x)),
                mean_power_split=float(p.mean()),
                median_iterations=float(np.median([r.iterations for r in rs])),
            )
        )
    return out


def _fmt(x):
    if x is None:
        return "nan"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _value_tag(v):
    return str(int(v)) if float(v) == int(v) else repr(float(v))


def _csv_text(rows):
    n_users = max(len(r.per_user_secrecy) for r in rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER + tuple(f"secrecy_user_{k}" for k in range(n_users)))
    for r in rows:
        users = [_fmt(x) for x in r.per_user_secrecy] + [""] * (n_users - len(r.per_user_secrecy))
        w.writerow([
            r.experiment, r.solver, _fmt(r.sweep_value), r.drop_seed, _fmt(r.sum_secrecy),
            _fmt(r.power_split), r.iterations, _fmt(r.wall_time_ms),
        ] + users)
    return buf.getvalue()


def emit_results(rows, out_dir, formats=("csv", "json"), spec=None, failures=(), traces=None):
    """Write ``results.csv`` / ``results.json`` (and traces) under ``out_dir``.

    Returns the list of written paths.

    Raises
    ------
    ParameterError
        If ``rows`` is empty or a row has no per-user secrecy values.
    OSError
        If ``out_dir`` cannot be written.
    """
    rows = list(rows)
    if not rows:
        raise ParameterError("no rows to emit")
    for r in rows:
        if not r.per_user_secrecy:
            raise ParameterError(f"row {r.solver}/{r.sweep_value}/{r.drop_seed} has no per-user secrecy values")
    bad = set(formats) - {"csv", "json"}
    if bad:
        raise ParameterError(f"unknown formats {sorted(bad)}")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats:
        path = os.path.join(out_dir, "results.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(_csv_text(rows))
        written.append(path)
        path = os.path.join(out_dir, "summary.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            summ = summarize(rows)
            keys = list(summ[0])
            w.writerow(keys)
            for s in summ:
                w.writerow([_fmt(s[k]) for k in keys])
        written.append(path)
    if "json" in formats:
        path = os.path.join(out_dir, "results.json")
        doc = {
            "spec": spec.to_dict() if spec is not None else None,
            "rows": [r.to_dict() for r in rows],
            "failures": [asdict(f) for f in failures],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        written.append(path)
    if traces:
        tdir = os.path.join(out_dir, "traces")
        os.makedirs(tdir, exist_ok=True)
        for (solver, value), entries in sorted(traces.items(), key=lambda kv: (kv[0][0], float(kv[0][1]))):
            path = os.path.join(tdir, f"{solver}_{_value_tag(value)}.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("drop", "iteration", "delta_norm", "objective"))
                for d, t, dn, obj in entries:
                    w.writerow((d, t, _fmt(dn), _fmt(obj)))
            written.append(path)
    return written


def load_rows_json(path):
    """Rows back from ``results.json``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return [ResultRow.from_dict(d) for d in doc["rows"]]
