"""Command-line entry point: solve, simulate, frontier, selftest."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import selftest
from .config import load_config
from .errors import ConfigError, InvalidParameterError, NumericalError, PreconditionError, UnsupportedOperationError
from .pareto import extremes, frontier_csv, trace_frontier
from .simulator import run_monte_carlo, summary_text, trials_csv
from .solver import LENGTH_REGRET, solve_p_star

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_RUNTIME_ERRORS = (NumericalError, PreconditionError, InvalidParameterError, UnsupportedOperationError)


def _header(cfg, args, **extra) -> str:
    parts = [f"config_sha256={cfg.digest}"]
    parts += [f"{k}={v}" for k, v in extra.items()]
    return " ".join(parts)


def _out_dir(cfg, args):
    d = args.out or cfg.out_dir
    if d:
        os.makedirs(d, exist_ok=True)
    return d


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _vec(v) -> str:
    return "[" + ", ".join(f"{x:.6f}" for x in v) + "]"


def cmd_solve(cfg, args) -> int:
    alloc = solve_p_star(cfg.instance, cfg.costs)
    k = cfg.instance.k
    q_full = np.zeros(k)
    q_full[alloc.suboptimal] = alloc.q_star
    lines = [
        f"# {_header(cfg, args)}",
        f"instance: {cfg.instance!r}",
        f"costs: {cfg.costs}",
        f"best_arm={alloc.best_arm}",
        f"p_star={_vec(alloc.p_star)}",
        f"q_star={_vec(q_full)}",
        f"gamma_star={alloc.equilibrium_value!r}",
        f"kappa={alloc.lai_robbins_constant!r}",
    ]
    if cfg.costs.kind == LENGTH_REGRET:
        lines.append(f"beta_c={float(alloc.p_star[alloc.best_arm])!r}")
    lines.append(f"balance_residual={alloc.balance_residual():.3e}")
    lines.append(f"exploitation_residual={alloc.exploitation_residual():.3e}")
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)
    d = _out_dir(cfg, args)
    if d:
        rows = [f"# {_header(cfg, args)}", "arm,theta,p_star,q_star"]
        for i in range(k):
            rows.append(f"{i},{float(cfg.instance.means[i])!r},{float(alloc.p_star[i])!r},{float(q_full[i])!r}")
        _write(os.path.join(d, "solve.csv"), "\n".join(rows) + "\n")
        _write(os.path.join(d, "solve.txt"), report)
    return EXIT_OK


def cmd_simulate(cfg, args) -> int:
    rc = cfg.run_config(trials=args.trials, base_seed=args.seed)
    res = run_monte_carlo(rc, threads=args.threads)
    head = _header(cfg, args, base_seed=rc.base_seed, trials=rc.trials, n=rc.n)
    table = trials_csv(res.records, head)
    summ = summary_text(res.summary, head)
    d = _out_dir(cfg, args)
    if d:
        _write(os.path.join(d, "trials.csv"), table)
        _write(os.path.join(d, "summary.txt"), summ)
    else:
        sys.stdout.write(table)
    sys.stdout.write(summ)
    return EXIT_OK


def cmd_frontier(cfg, args) -> int:
    points = trace_frontier(cfg.instance, cfg.betas)
    l_star, r_star, bai = extremes(cfg.instance)
    head = _header(cfg, args, n=cfg.n, L_star=repr(l_star), R_star=repr(r_star), beta_bai=repr(bai))
    text = frontier_csv(points, cfg.instance, n=cfg.n, header=head)
    d = _out_dir(cfg, args)
    if d:
        _write(os.path.join(d, "frontier.csv"), text)
        sys.stdout.write(f"wrote {len(points)} points to {os.path.join(d, 'frontier.csv')}\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adaptexp", description="Cost-aware adaptive experimentation toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=False, trials=False, threads=False):
        p.add_argument("--config", required=True, help="TOML experiment definition")
        p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="base seed (u64), overrides [run] base_seed")
        if trials:
            p.add_argument("--trials", type=int, default=None, help="number of trials, overrides [run] trials")
        if threads:
            p.add_argument("--threads", type=int, default=1, help="worker processes")

    common(sub.add_parser("solve", help="optimal allocation and equilibrium report"))
    common(sub.add_parser("simulate", help="Monte Carlo trials"), seed=True, trials=True, threads=True)
    common(sub.add_parser("frontier", help="length-regret frontier CSV"))
    st = sub.add_parser("selftest", help="run internal property checks")
    st.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return EXIT_OK if selftest.run(args.seed) else 1
    try:
        cfg = load_config(args.config)
        if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if getattr(args, "trials", None) is not None and args.trials < 1:
            raise ConfigError("--trials must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handler = {"solve": cmd_solve, "simulate": cmd_simulate, "frontier": cmd_frontier}[args.command]
    try:
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
