"""Command-line entry point.

``relaxlab {validate,run,study} CONFIG [--override section.key=value ...]``

Exit codes: 0 success, 1 usage or configuration error, 2 a structural
hypothesis failed, 3 the convergence study failed or was inconclusive.
"""
import argparse
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import kernels
from .config import MODES, parse_config
from .diagnostics import (convergence_study, convergence_summary, thread_count,
                          write_convergence_csv)
from .errors import ConfigError, RelaxLabError
from .framework import validate_model
from .presets import initial_profile
from .solver import run_relaxation, write_series_csv, write_snapshot_csv

EXIT_OK, EXIT_USAGE, EXIT_HYPOTHESIS, EXIT_STUDY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parser():
    p = _Parser(prog="relaxlab", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=MODES)
    p.add_argument("config", help="path to the configuration file")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a configuration key (section.key=value); repeatable")
    p.add_argument("--output-dir", help="overrides [run] output_dir")
    return p


def _fmt(x):
    return f"{x:.17g}"


def _write_summary(cfg, lines):
    path = os.path.join(cfg.output_dir, "summary.txt")
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    print(text, end="")


def _header(cfg, command):
    params = ", ".join(f"{k}={v}" for k, v in sorted(cfg.model_params.items())) or "defaults"
    return [f"relaxlab {command}", f"  model            {cfg.model} ({params})"]


def cmd_validate(cfg):
    model = cfg.build_model()
    reports = validate_model(model, count=cfg.samples, seed=cfg.seed, tol=cfg.tol)
    path = os.path.join(cfg.output_dir, "hypotheses.csv")
    with open(path, "w", newline="") as fh:
        fh.write("hypothesis,passed,worst_violation,threshold,samples_used,witness\n")
        for r in reports:
            wit = " ".join(_fmt(w) for w in np.ravel(r.witness))
            fh.write(f"{r.hypothesis_id},{int(r.passed)},{_fmt(r.worst_violation)},"
                     f"{_fmt(r.threshold)},{r.samples_used},{wit}\n")
    lines = _header(cfg, "validate") + [f"  samples          {cfg.samples} (seed {cfg.seed})"]
    for r in reports:
        lines.append(f"  {r.hypothesis_id:<7} {'PASS' if r.passed else 'FAIL'}  "
                     f"worst {r.worst_violation:.3e}")
    failed = [r.hypothesis_id for r in reports if not r.passed]
    lines.append(f"  result           {'FAIL: ' + ', '.join(failed) if failed else 'PASS'}")
    _write_summary(cfg, lines)
    return EXIT_HYPOTHESIS if failed else EXIT_OK


def _ic(cfg, model):
    g = cfg.grid
    return initial_profile(model, cfg.ic, cfg.amplitude, cfg.wavenumber, g.x_lo, g.x_hi)


def cmd_run(cfg):
    from .diagnostics import well_prepared_ic
    model = cfg.build_model()
    ic = well_prepared_ic(model, _ic(cfg, model))
    run = run_relaxation(model, cfg.grid, ic, cfg.time_control, cfg.eps, cfg.output_times)
    snapdir = os.path.join(cfg.output_dir, "snapshots")
    for snap in run.snapshots:
        write_snapshot_csv(snap, snapdir)
    write_series_csv(run, os.path.join(cfg.output_dir, "series.csv"))
    s = run.series
    lines = _header(cfg, "run") + [
        f"  cells            {cfg.grid.cells}",
        f"  eps              {cfg.eps:.6g}",
        f"  t_end            {cfg.t_end:.6g} ({run.steps} steps)",
        f"  snapshots        {len(run.snapshots)}",
        f"  entropy          {s['total_entropy'][0]:.10e} -> {s['total_entropy'][-1]:.10e}",
    ]
    _write_summary(cfg, lines)
    return EXIT_OK


def cmd_study(cfg):
    model = cfg.build_model()
    threads = cfg.threads or thread_count()
    try:
        rep = convergence_study(model, cfg.grid, _ic(cfg, model), cfg.time_control,
                                cfg.eps_list, cfg.floor_grid_factor, cfg.output_times,
                                threads=threads)
    except RelaxLabError as exc:
        _write_summary(cfg, _header(cfg, "study") + [f"  study failed: {exc}"])
        return EXIT_STUDY
    write_convergence_csv(rep, os.path.join(cfg.output_dir, "convergence.csv"))
    _write_summary(cfg, _header(cfg, "study") + convergence_summary(rep, cfg.slope_threshold)
                   .splitlines())
    return EXIT_OK if rep.fitted_slope >= cfg.slope_threshold else EXIT_STUDY


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "study": cmd_study}


def main(argv=None):
    """Run one subcommand; returns the process exit code."""
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"relaxlab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(text, args.override)
    except ConfigError as exc:
        print(f"relaxlab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cfg = replace(cfg, mode=args.command)
    if args.output_dir:
        cfg = replace(cfg, output_dir=args.output_dir)
    os.makedirs(cfg.output_dir, exist_ok=True)
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](cfg)
    except RelaxLabError as exc:
        print(f"relaxlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"[{args.command} finished in {time.perf_counter() - start:.1f} s, "
          f"kernels: {kernels.BACKEND}]", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
