"""Command-line entry point: ``anprecode {run,preset,oracle,validate}``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import warnings

import yaml

from ..chanmodel import drop_network
from ..errors import ParameterError
from ..solvers import js_gpip
from .oracle import MAX_ORACLE_DIM, brute_force_secrecy
from .runner import drop_seed_sequence, emit_results, run_experiment, summarize
from .spec import PRESETS, load_spec, preset

log = logging.getLogger("anprecode")


class _UsageError(Exception):
    pass


def _parser():
    p = argparse.ArgumentParser(prog="anprecode", description="Secure MU-MIMO precoding experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--out", help="output directory (overrides output_dir in the spec file)")
        sp.add_argument("--deterministic", action="store_true", help="single process, fixed order")
        sp.add_argument("--workers", type=int, help="worker processes (default: $ANPRECODE_WORKERS or 1)")
        sp.add_argument("--timing", action="store_true", help="record per-solve wall time")

    sp = sub.add_parser("run", help="run an experiment from a spec file")
    sp.add_argument("spec_file")
    run_opts(sp)

    sp = sub.add_parser("preset", help="run a figure preset")
    sp.add_argument("name", choices=sorted(PRESETS))
    sp.add_argument("--drops", type=int, help="number of drops (default 200)")
    sp.add_argument("--seed", type=int, help="master seed (default 0)")
    run_opts(sp)

    sp = sub.add_parser("oracle", help="brute-force oracle vs JS-GPIP on a tiny spec")
    sp.add_argument("spec_file")
    sp.add_argument("--resolution", type=int, default=8)
    sp.add_argument("--objective", choices=("clipped", "surrogate"), default="surrogate")
    sp.add_argument("--out", help="output directory (overrides output_dir in the spec file)")

    sp = sub.add_parser("validate", help="check a spec file and print the resolved config")
    sp.add_argument("spec_file")
    return p


def _load(path):
    if not os.path.exists(path):
        raise _UsageError(f"spec file not found: {path}")
    return load_spec(path)


def _execute(spec, args):
    if args.out:
        spec = spec.replace(output_dir=args.out)
    if args.workers is not None and args.workers < 1:
        raise _UsageError("--workers must be >= 1")

    def progress(done, total):
        log.info("%s: %d/%d units", spec.name, done, total)

    res = run_experiment(spec, deterministic=args.deterministic, timing=args.timing,
                         workers=args.workers, progress=progress)
    if not res.rows:
        raise ParameterError("every solve failed; nothing to write")
    paths = emit_results(res.rows, spec.output_dir, spec=spec, failures=res.failures, traces=res.traces)
    for s in summarize(res.rows):
        print(f"{s['solver']:>14s}  {spec.sweep_variable}={s['sweep_value']!s:>5s}  "
              f"{s['mean']:8.3f} ± {s['sem']:.3f}  (n={s['n']}, split={s['mean_power_split']:.3f})")
    if res.failures:
        print(f"{len(res.failures)} solve(s) failed; see results.json", file=sys.stderr)
    for p in paths:
        print(p)
    return 0


def _oracle(spec, args):
    out_dir = args.out or spec.output_dir
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "oracle.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("sweep_value", "drop_seed", "oracle", "js_gpip", "ratio"))
        for value in spec.sweep_values:
            cfg = spec.config_at(value)
            n = cfg.n_antennas * (cfg.n_users + cfg.n_an_cols)
            if n > MAX_ORACLE_DIM:
                raise ParameterError(f"oracle needs N(K+J) <= {MAX_ORACLE_DIM}; {spec.sweep_variable}={value} gives {n}")
            for d in range(spec.n_drops):
                ch = drop_network(cfg, spec.geometry, drop_seed_sequence(spec.seed, d))
                _, best = brute_force_secrecy(ch, cfg, args.resolution, args.objective)
                res = js_gpip(ch, cfg, spec.gpi)
                got = res.report.surrogate_value if args.objective == "surrogate" else res.sum_secrecy
                ratio = got / best if best > 0 else float("nan")
                w.writerow((value, d, repr(best), repr(got), repr(ratio)))
                print(f"{spec.sweep_variable}={value} drop {d}: oracle {best:.6f}  js-gpip {got:.6f}  ratio {ratio:.5f}")
    print(path)
    return 0


def cli_main(argv=None):
    """Run the CLI; returns the process exit code."""
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")
    try:
        if args.command == "validate":
            spec = _load(args.spec_file)
            print(yaml.safe_dump(spec.to_dict(), sort_keys=False), end="")
            return 0
        if args.command == "run":
            return _execute(_load(args.spec_file), args)
        if args.command == "preset":
            if args.drops is not None and args.drops < 1:
                raise _UsageError("--drops must be >= 1")
            return _execute(preset(args.name, args.drops, args.seed), args)
        if args.command == "oracle":
            return _oracle(_load(args.spec_file), args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"anprecode: error: {exc}", file=sys.stderr)
        return 2
    except (ParameterError, OSError) as exc:
        print(f"anprecode: error: {exc}", file=sys.stderr)
        return 2
    return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
