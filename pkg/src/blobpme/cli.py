"""Command-line entry point: ``blobpme run|sweep|kernels-check|exact-check``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import BlobError, ConfigError, ZeroMass
from .harness import CONFIG_SCHEMA, load_config, load_sweep, run, run_sweep, write_sweep
from .mollifier import Mollifier
from .oracle import ExactSolution, kernel_relative_error, pde_residual, reference_kernel
from .targets import KernelMode, build_kernel_table

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2

KERNEL_CHECK_TOL = 1e-7
EXACT_CHECK_TOL = 1e-4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blobpme", description=__doc__,
                                epilog=CONFIG_SCHEMA, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "integrate one configuration and write CSVs"),
                           ("sweep", "run an N-sweep and fit the convergence order"),
                           ("kernels-check", "compare analytic kernels with quadrature")):
        sp = sub.add_parser(name, help=helptext, epilog=CONFIG_SCHEMA,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("config", help="TOML config file")
        sp.add_argument("--out", help="output directory (overrides the config)")
    sp = sub.add_parser("exact-check", help="finite-difference residual of the exact solution")
    sp.add_argument("--out", help="unused; accepted for symmetry")
    return p


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.out:
        config = replace(config, output=args.out)
    if config.output is None:
        config = replace(config, output=".")
    result = run(config)
    last = result.diagnostics[-1]
    print(f"t={last.time:.6g} kl={last.kl:.6g} energy={last.energy:.10g} "
          f"mass_in_omega={last.mass_in_omega:.10g} -> {config.output}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    sweep = load_sweep(args.config)
    out = Path(args.out or sweep.base.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    result = run_sweep(sweep, cache_dir=out)
    write_sweep(out, result)
    for n, eps, err in result.rows():
        print(f"N={n:5d} eps={eps:.6g} error={err:.6e}")
    print(f"order={result.order:.4f}")
    return EXIT_OK


def _cmd_kernels_check(args) -> int:
    config = load_config(args.config)
    moll = Mollifier(config.resolved_epsilon)
    kernels = build_kernel_table(config.target, moll)
    if kernels.mode is not KernelMode.ANALYTIC:
        print(f"kernels use {kernels.mode.value} mode; nothing to compare")
        return EXIT_OK
    grid = np.linspace(-1.5, 1.5, 15)
    worst = 0.0
    for x in grid:
        for y in grid:
            g, f = kernels.g_and_f(np.array([x]), np.array([y]))
            for which, value in (("g", g[0]), ("f", f[0])):
                ref = reference_kernel(config.target, moll, x, y, which)
                scale = reference_kernel(config.target, moll, x, y, which, absolute=True)
                worst = max(worst, kernel_relative_error(value, ref, scale))
    ok = worst <= KERNEL_CHECK_TOL
    print(f"max relative error {worst:.3e} (tolerance {KERNEL_CHECK_TOL:.0e}): "
          f"{'ok' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERICAL


def _cmd_exact_check(args) -> int:
    sol = ExactSolution()
    worst = 0.0
    for t in (0.0, 0.05, 0.1):
        r = sol.radius(t)
        x = np.linspace(-0.9 * r, 0.9 * r, 50)
        worst = max(worst, float(np.max(np.abs(pde_residual(sol, x, t)))))
    ok = worst <= EXACT_CHECK_TOL
    print(f"max PDE residual {worst:.3e} (tolerance {EXACT_CHECK_TOL:.0e}): "
          f"{'ok' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERICAL


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "kernels-check": _cmd_kernels_check,
             "exact-check": _cmd_exact_check}


def cli_main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ZeroMass) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BlobError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:  # console script
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
