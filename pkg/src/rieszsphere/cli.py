"""Command-line interface: ``rieszsphere <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .discrepancy import discrepancy_report
from .exceptions import InvalidArgumentError, ParseError, SweepError
from .experiments import SweepConfig, SweepOutputs, run_sweep, verify
from .minimize import MinimizeOptions, minimize_cached
from .sphere import cap_area, read_config, write_config
from .spectral import spectral_table
from .validation import parse_s


def _add_common(p, *names):
    if "d" in names:
        p.add_argument("--d", type=int, default=2, help="sphere dimension")
    if "s" in names:
        p.add_argument("--s", type=parse_s, default=1.0, help="Riesz exponent or 'log'")
    if "n" in names:
        p.add_argument("--n", type=int, default=100, help="number of points")
    if "seed" in names:
        p.add_argument("--seed", type=int, default=0)
    if "epsilon" in names:
        p.add_argument("--epsilon", type=float, default=0.2, help="cap radius factor, r = epsilon N^(-1/d)")
    p.add_argument("--out", default=None, help="output path")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", default=None, help="JSON file with option defaults")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rieszsphere", description="Riesz energy minimizers and their discrepancies on S^d")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("minimize", help="compute a near-minimizer and write it as SPHPTS")
    _add_common(p, "d", "s", "n", "seed")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--init", choices=("random", "spiral", "from_file"), default="random")
    p.add_argument("--init-path", default=None)
    p.add_argument("--grad-tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--stall-tol", type=float, default=1e-13)
    p.add_argument("--stall-window", type=int, default=50)

    p = sub.add_parser("discrepancy", help="Sobolev and cap discrepancy of a point file")
    _add_common(p, "s", "seed", "epsilon")
    p.add_argument("--in", dest="input", required=True, help="SPHPTS file")
    p.add_argument("--centers-budget", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("spectrum", help="table of eigenvalues, dimensions and cap multipliers")
    _add_common(p, "d", "s", "n", "epsilon")
    p.add_argument("--L", type=int, default=50, help="largest degree")
    p.add_argument("--r", type=float, default=None, help="cap radius (default epsilon N^(-1/d))")
    p.add_argument("--no-lambda", action="store_true", help="omit the cap multiplier column")

    p = sub.add_parser("sweep", help="minimize and measure over a list of N")
    _add_common(p, "d", "s", "seed", "epsilon")
    p.add_argument("--n-list", type=lambda v: [int(x) for x in v.split(",")], default=[64, 128, 256, 512, 1024])
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--centers-budget", type=int, default=1000)
    p.add_argument("--init", choices=("random", "spiral"), default="random")
    p.add_argument("--json", dest="json_path", default=None, help="write the SweepResult JSON here")

    p = sub.add_parser("verify", help="run the invariant suite")
    _add_common(p)
    p.add_argument("--level", choices=("fast", "full"), default="fast")
    p.add_argument("--corrupt", choices=("eigenvalue",), default=None, help=argparse.SUPPRESS)

    p = sub.add_parser("cap-area", help="surface measure of a cap")
    _add_common(p, "d")
    p.add_argument("--r", type=float, required=True, help="chord radius in (0, 2]")
    p.add_argument("--method", choices=("beta", "quadrature"), default="beta")
    return parser


def _apply_config_file(parser, argv):
    # --config supplies defaults; explicit flags still win
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    data = json.loads(Path(args.config).read_text())
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {k.replace("-", "_"): v for k, v in data.items() if k.replace("-", "_") in known}
    if "s" in defaults:
        defaults["s"] = parse_s(defaults["s"])
    if "N_list" in data and "n_list" in known:
        defaults["n_list"] = data["N_list"]
    sub.set_defaults(**defaults)
    args = parser.parse_args(argv)
    args._config_data = data
    return args


def _emit(payload, out=None):
    text = json.dumps(payload, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_minimize(args) -> int:
    opts = MinimizeOptions(max_iters=args.max_iters, grad_tol=args.grad_tol, stall_tol=args.stall_tol,
                           stall_window=args.stall_window, restarts=args.restarts, seed=args.seed,
                           init=args.init, init_path=args.init_path)
    res = minimize_cached(args.d, args.s, args.n, opts, args.cache_dir)
    if args.out:
        write_config(res.config, args.out)
    print(json.dumps({"energy": res.energy, "grad_inf_norm": res.grad_inf_norm, "iters": res.iters,
                      "restart_index": res.restart_index, "converged": res.converged,
                      "stop_reason": res.stop_reason, "restart_energies": res.restart_energies}))
    return 0


def cmd_discrepancy(args) -> int:
    config = read_config(args.input)
    rep = discrepancy_report(config, args.s, args.epsilon, args.centers_budget, args.seed, args.tol)
    _emit(rep.to_dict(), args.out)
    return 0


def cmd_spectrum(args) -> int:
    r = None
    if not args.no_lambda:
        r = args.r if args.r is not None else args.epsilon * args.n ** (-1.0 / args.d)
    table = spectral_table(args.d, args.s, args.L, r)
    if args.out:
        table.to_csv(args.out)
    else:
        table.to_csv("/dev/stdout")
    return 0


def cmd_sweep(args) -> int:
    data = dict(getattr(args, "_config_data", {}))
    outputs = dict(data.get("outputs", {}))
    outputs.setdefault("csv_path", args.out)
    outputs.setdefault("json_path", args.json_path)
    outputs.setdefault("cache_dir", args.cache_dir)
    if args.out:
        outputs["csv_path"] = args.out
    if args.json_path:
        outputs["json_path"] = args.json_path
    if args.cache_dir:
        outputs["cache_dir"] = args.cache_dir
    fields = dict(d=args.d, s=args.s, N_list=args.n_list, epsilon=args.epsilon, restarts=args.restarts,
                  seed=args.seed, centers_budget=args.centers_budget, init=args.init)
    extra = {k: v for k, v in data.items() if k not in fields and k not in ("outputs",)
             and k in SweepConfig.__dataclass_fields__}
    cfg = SweepConfig(**fields, **extra, outputs=SweepOutputs(**outputs))
    result = run_sweep(cfg, workers=args.workers)
    if not cfg.outputs.csv_path and not cfg.outputs.json_path:
        print(json.dumps(result.to_dict(), indent=1))
    else:
        print(json.dumps(result.to_dict()["fits"]))
    return 0


def cmd_verify(args) -> int:
    report = verify(args.level, corrupt=args.corrupt, workers=args.workers)
    _emit(report.to_dict(), args.out)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} value={c.value:.3g} threshold={c.threshold:.3g}",
              file=sys.stderr)
    return 0 if report.ok else 1


def cmd_cap_area(args) -> int:
    print(format(cap_area(args.d, args.r, method=args.method), ".17g"))
    return 0


COMMANDS = {
    "minimize": cmd_minimize,
    "discrepancy": cmd_discrepancy,
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "cap-area": cmd_cap_area,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config_file(parser, argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InvalidArgumentError, ParseError, SweepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
