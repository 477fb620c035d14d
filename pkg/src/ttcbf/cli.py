"""Command-line driver: ``simulate``, ``sweep``, ``lower-bound`` and ``validate``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import experiments as ex
from .lower_bounds import DegenerateRatesError, solve_bound_coefficients
from .simulation import HOCBF, run_simulation, verify_decay_ttcbf, verify_dominance_hocbf

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4

log = logging.getLogger("ttcbf")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_simulate(args) -> int:
    cfg = ex.load_config(args.config)
    result = run_simulation(cfg)
    ex.write_log_csv(result, args.out)
    print(ex.summary_line(result))
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = ex.load_sweep(args.config)
    for msg in spec.feasibility_warnings():
        log.warning(msg)
    rows = ex.run_sweep(spec, jobs=args.jobs)
    ex.write_sweep_csv(rows, args.out)
    print(f"{len(rows)} runs written to {args.out}")
    return EXIT_OK


def cmd_lower_bound(args) -> int:
    if len(args.lambdas) != len(args.h_init):
        raise ex.ConfigError(f"got {len(args.lambdas)} lambdas but {len(args.h_init)} initial values")
    bound = solve_bound_coefficients(args.lambdas, args.h_init, args.t0)
    if args.t_step <= 0:
        raise ex.ConfigError("--t-step must be positive")
    n = int(np.floor(args.t_end / args.t_step + 1e-9)) + 1
    times = [args.t0 + i * args.t_step for i in range(n)]
    if args.out:
        ex.write_lower_bound_csv(bound, times, args.out)
    coeffs = ", ".join(f"{c:.1f}" for c in bound.coefficients)
    print(f"c = [{coeffs}]")
    terms = " + ".join(f"{c:.4g}*exp(-{lam:g}*(t-{bound.t0:g}))" for c, lam in zip(bound.coefficients, bound.rates))
    print(f"h_lb(t) = {terms}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = ex.load_config(args.config)
    run = ex.read_log_csv(args.log, cfg)
    if cfg.approach == HOCBF:
        rep = verify_dominance_hocbf(run, cfg.lambdas, anchor=args.anchor)
        if rep.never_active:
            print("dominance: never active")
            return EXIT_VALIDATION
        print(
            f"dominance anchor={rep.anchor} step={rep.anchor_step} "
            f"min_margin={ex.format_float(rep.min_margin)} tolerance={ex.format_float(rep.tolerance)} "
            f"passed={str(rep.passed).lower()}"
        )
        ok = rep.passed
    else:
        rep = verify_decay_ttcbf(run, cfg.lambda1)
        print(
            f"decay step_violations={len(rep.step_violations)} "
            f"cumulative_violations={len(rep.cumulative_violations)} "
            f"worst_step_margin={ex.format_float(rep.worst_step_margin)} passed={str(rep.passed).lower()}"
        )
        if rep.step_violations:
            print("violating steps: " + " ".join(map(str, rep.step_violations[:20])))
        ok = rep.passed
    return EXIT_OK if ok else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ttcbf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one closed-loop simulation and write the per-step CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter grid and write one summary row per point")
    p.add_argument("--config", required=True, help="sweep spec (config keys plus lambda ranges)")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lower-bound", help="exponential-sum HOCBF lower bound from initial conditions")
    p.add_argument("--lambdas", type=_floats, required=True, help="e.g. 10,0.5")
    p.add_argument("--h-init", type=_floats, required=True, help="e.g. 95.8,-200 (use --h-init=-1,2 when it starts with '-')")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=2.0, help="length of the sampled window after t0")
    p.add_argument("--t-step", type=float, default=0.01)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lower_bound)

    p = sub.add_parser("validate", help="check a per-step log against its lower bound")
    p.add_argument("--config", required=True, help="config the log was produced with")
    p.add_argument("--log", required=True)
    p.add_argument("--anchor", choices=("start", "activation"), default="start")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateRatesError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
