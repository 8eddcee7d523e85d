"""Command-line surface.

Emission rule: every byte written to the output is produced by explicit
%.15g formatting with fixed key/column order and \n newlines, so identical
flags give identical files on any machine and any worker count. Exit codes:
0 ok, 1 statistical/accuracy gate failed, 2 bad configuration, 3 numerical
failure.
"""

import argparse
import sys

import numpy as np

from .fbm import MarketSpec, simulate_path_pair
from .kernel import QuadratureError, TimeGrid, build_table
from .montecarlo import mc_value
from .oracle import dp_value
from .strategies import (
    STANDARD,
    InformationFlow,
    LiquidationProblem,
    delayed,
    generic_strategy,
    insider,
    martingale_repr,
)
from .valuation import general_value, normalized_value


def _fmt(x):
    x = float(x)
    if x == 0.0:
        return "0"  # avoid the "-0" rendering
    return f"{x:.15g}"


def _info_from(args):
    kind = args.info
    if kind == "standard":
        if args.delta is not None:
            raise ValueError("--delta is only valid with --info delayed|insider")
        return STANDARD
    if args.delta is None:
        raise ValueError(f"--info {kind} requires --delta")
    if kind == "delayed":
        return delayed(args.delta)
    return insider(args.delta)


def _problem_from(args, info=None):
    market = MarketSpec(s0=args.s0, mu=args.mu, sigma=args.sigma, h=args.h)
    return LiquidationProblem(
        phi0=args.phi0, lam=args.lam, horizon=args.t, market=market,
        info=_info_from(args) if info is None else info,
    )


def cmd_value(args):
    problem = _problem_from(args)
    bd = general_value(problem)
    delta = "null" if problem.info.kind == "standard" else _fmt(problem.info.delta)
    lines = [
        "{",
        f'  "inventory_term": {_fmt(bd.inventory_term)},',
        f'  "drift_term": {_fmt(bd.drift_term)},',
        f'  "tracking_term": {_fmt(bd.tracking_term)},',
        f'  "total": {_fmt(bd.total)},',
        f'  "h": {_fmt(args.h)},',
        f'  "T": {_fmt(args.t)},',
        f'  "info": "{problem.info.kind}",',
        f'  "delta": {delta}',
        "}",
    ]
    return "\n".join(lines) + "\n", 0


def cmd_sweep(args):
    if not (0.0 < args.h_min <= args.h_max < 1.0):
        raise ValueError("--h-min/--h-max must satisfy 0 < min <= max < 1")
    if args.h_step <= 0.0:
        raise ValueError("--h-step must be positive")
    hs = []
    v = args.h_min
    while v <= args.h_max + 1e-12:
        hs.append(round(v, 12))
        v += args.h_step
    rows = ["h,standard,delayed,insider"]
    for h in hs:
        std = normalized_value(h, args.t, STANDARD)
        dlv = normalized_value(h, args.t, delayed(args.delta))
        inv = normalized_value(h, args.t, insider(args.delta))
        rows.append(f"{_fmt(h)},{_fmt(std)},{_fmt(dlv)},{_fmt(inv)}")
    return "\n".join(rows) + "\n", 0


def _best_lag(lead, ref, max_lag):
    a = lead - lead.mean()
    b = ref - ref.mean()
    best, arg = -np.inf, 0
    for lag in range(-max_lag, max_lag + 1):
        if lag >= 0:
            c = float(np.dot(a[: len(a) - lag], b[lag:]))
        else:
            c = float(np.dot(a[-lag:], b[: len(b) + lag]))
        if c > best:
            best, arg = c, lag
    return arg


def cmd_path(args):
    info_d = delayed(args.delta)
    info_i = insider(args.delta)
    grid = TimeGrid(args.t, args.n)
    table = build_table(grid, args.h)
    path = simulate_path_pair(table, args.seed)
    market = MarketSpec(s0=args.s0, mu=args.mu, sigma=args.sigma, h=args.h)
    strats = {}
    for info in (STANDARD, info_d, info_i):
        problem = LiquidationProblem(args.phi0, args.lam, args.t, market, info)
        rep = martingale_repr(table, info)
        strats[info.kind] = generic_strategy(problem, rep, path, table)
    price = market.s0 + market.sigma * path.bh + market.mu * grid.nodes
    n = grid.n

    def phi_at(kind, i):
        p = strats[kind].phi
        return p[i] if i < n else p[n - 1]  # rate is held over the last cell

    rows = ["t,price,phi_standard,phi_delayed,phi_insider,"
            "pos_standard,pos_delayed,pos_insider"]
    for i in range(n + 1):
        rows.append(",".join([
            _fmt(grid.nodes[i]), _fmt(price[i]),
            _fmt(phi_at("standard", i)), _fmt(phi_at("delayed", i)),
            _fmt(phi_at("insider", i)),
            _fmt(strats["standard"].position[i]),
            _fmt(strats["delayed"].position[i]),
            _fmt(strats["insider"].position[i]),
        ]))
    max_lag = max(1, n // 4)
    lag_ins = _best_lag(strats["insider"].phi, strats["standard"].phi, max_lag)
    lag_del = _best_lag(strats["delayed"].phi, strats["standard"].phi, max_lag)
    print(
        f"lag diagnostic (steps; positive = series leads the standard one): "
        f"insider {lag_ins}, delayed {lag_del}",
        file=sys.stderr,
    )
    return "\n".join(rows) + "\n", 0


def cmd_mc(args):
    problem = _problem_from(args)
    grid = TimeGrid(args.t, args.n)
    closed = general_value(problem).total
    est = mc_value(problem, grid, args.paths, seed=args.seed)
    z = (est.mean - closed) / est.std_error if est.std_error > 0 else 0.0
    lines = [
        "{",
        f'  "closed_form": {_fmt(closed)},',
        f'  "estimate": {_fmt(est.mean)},',
        f'  "std_error": {_fmt(est.std_error)},',
        f'  "z_score": {_fmt(z)}',
        "}",
    ]
    return "\n".join(lines) + "\n", 0 if abs(z) <= 4.0 else 1


def cmd_oracle(args):
    problem = _problem_from(args)
    grid = TimeGrid(args.t, args.n)
    closed = general_value(problem).total
    dp = dp_value(problem, grid)
    if closed != 0.0:
        rel = abs(dp - closed) / abs(closed)
    else:
        rel = abs(dp - closed)
    lines = [
        "{",
        f'  "closed_form": {_fmt(closed)},',
        f'  "dp_value": {_fmt(dp)},',
        f'  "grid_n": {grid.n},',
        f'  "rel_error": {_fmt(rel)}',
        "}",
    ]
    return "\n".join(lines) + "\n", 0 if rel <= args.bound else 1


def _add_market_flags(p, h_default):
    p.add_argument("--h", type=float, default=h_default, help="Hurst parameter in (0,1)")
    p.add_argument("--phi0", type=float, default=0.0, help="initial position")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="temporary impact coefficient (> 0)")
    p.add_argument("--mu", type=float, default=0.0, help="price drift")
    p.add_argument("--sigma", type=float, default=1.0, help="price volatility (>= 0)")
    p.add_argument("--s0", type=float, default=0.0, help="initial price")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="liquifbm",
        description="Optimal liquidation under fractional Brownian prices: "
                    "closed-form values, sample strategies, Monte Carlo and a "
                    "dynamic-programming certificate.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, h_default=0.5, t_default=1.0):
        _add_market_flags(p, h_default)
        p.add_argument("--t", type=float, default=t_default, help="horizon T")
        p.add_argument("--seed", type=int, default=42, help="master seed (default 42)")
        p.add_argument("--out", default=None, help="output file (default stdout)")

    p = sub.add_parser("value", help="closed-form expected value, JSON")
    common(p)
    p.add_argument("--info", choices=("standard", "delayed", "insider"), default="standard")
    p.add_argument("--delta", type=float, default=None, help="information lag/advance")
    p.set_defaults(fn=cmd_value)

    p = sub.add_parser("sweep", help="normalized values across h, CSV")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--h-min", type=float, default=0.05)
    p.add_argument("--h-max", type=float, default=0.95)
    p.add_argument("--h-step", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("path", help="one scenario, three strategies, CSV")
    common(p, h_default=0.7, t_default=5.0)
    p.set_defaults(phi0=1.0)
    p.add_argument("--delta", type=float, default=None,
                   help="lag/advance for the delayed and insider columns (default 0.1*T)")
    p.add_argument("--n", type=int, default=200, help="grid cells")
    p.set_defaults(fn=cmd_path)

    p = sub.add_parser("mc", help="Monte Carlo estimate vs closed form, JSON")
    common(p)
    p.add_argument("--info", choices=("standard", "delayed", "insider"), default="standard")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--n", type=int, default=256, help="grid cells")
    p.add_argument("--paths", type=int, default=10000)
    p.set_defaults(fn=cmd_mc)

    p = sub.add_parser("oracle", help="dynamic-programming value vs closed form, JSON")
    common(p)
    p.add_argument("--info", choices=("standard", "delayed", "insider"), default="standard")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--n", type=int, default=16, help="grid cells (<= 64)")
    p.add_argument("--bound", type=float, default=0.05,
                   help="relative-error gate for exit status")
    p.set_defaults(fn=cmd_oracle)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "delta", None) is None and args.command == "path":
        args.delta = 0.1 * args.t
    try:
        text, status = args.fn(args)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
