"""Monte Carlo evaluation of realized P&L and the forecast identity.

Determinism contract: every path's scenario comes from its own counter-based
stream keyed by (seed, path index), results land in a preallocated slot, and
the final reduction is a single pairwise sum. Worker count therefore cannot
change any output bit; it only changes wall time. Chunk boundaries are fixed
constants for the same reason.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fbm import MarketSpec, PathPair, draw_increments, price_path
from .kernel import KernelTable, TimeGrid, build_table
from .strategies import (
    InformationFlow,
    LiquidationProblem,
    MartingaleRepr,
    generic_strategy,
    martingale_repr,
    project_price,
)
from .valuation import step1_rhs

_CHUNK = 512


def worker_count():
    env = os.environ.get("LIQUIFBM_THREADS")
    if env is not None:
        try:
            v = int(env)
        except ValueError:
            raise ValueError(f"LIQUIFBM_THREADS must be a positive integer, got {env!r}")
        if v < 1:
            raise ValueError(f"LIQUIFBM_THREADS must be a positive integer, got {env!r}")
        return v
    return os.cpu_count() or 1


def evaluate_pnl(problem: LiquidationProblem, path: PathPair, phi) -> float:
    """Realized P&L of a rate path against the true price on one scenario."""
    grid = path.grid
    n = grid.n
    rates = np.asarray(phi.phi if hasattr(phi, "phi") else phi)
    if rates.shape != (n,):
        raise ValueError(f"rate path has shape {rates.shape}, grid wants ({n},)")
    s = price_path(problem.market, path)
    d = grid.step
    return float(
        -problem.phi0 * problem.market.s0
        - d * np.dot(rates, s[:n])
        - 0.5 * problem.lam * d * np.dot(rates, rates)
    )


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_paths: int
    grid: TimeGrid
    seed: int


def _chunked(n_paths, fn):
    starts = range(0, n_paths, _CHUNK)
    workers = min(worker_count(), len(starts)) or 1
    if workers == 1:
        for c in starts:
            fn(c)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fn, starts))


def mc_value(problem: LiquidationProblem, grid: TimeGrid, n_paths: int,
             seed: int = 42, table: KernelTable | None = None) -> MCEstimate:
    """Estimate the achieved expected P&L of the info-matching strategy."""
    if n_paths < 100:
        raise ValueError(f"need at least 100 paths, got {n_paths}")
    if table is None:
        table = build_table(grid, problem.market.h)
    rep = martingale_repr(table, problem.info)
    pnls = np.empty(n_paths)

    def run(c0):
        hi = min(c0 + _CHUNK, n_paths)
        dws = draw_increments(grid, seed, np.arange(c0, hi))
        for k in range(c0, hi):
            dw = dws[k - c0]
            path = PathPair(grid=grid, dw=dw, bh=table.z_cells @ dw, seed=(seed, k))
            strat = generic_strategy(problem, rep, path, table)
            pnls[k] = evaluate_pnl(problem, path, strat)

    _chunked(n_paths, run)
    mean = float(np.sum(pnls) / n_paths)
    se = float(np.std(pnls, ddof=1) / np.sqrt(n_paths))
    return MCEstimate(mean=mean, std_error=se, n_paths=n_paths, grid=grid, seed=seed)


@dataclass(frozen=True)
class Step1Report:
    """MC check that the price and its tracking process have equal overlap."""

    lhs_mean: float      # time integral of (projected) price times N
    lhs_se: float
    rhs_mean: float      # time integral of N squared
    rhs_se: float
    closed_rhs: float
    z_lhs: float
    z_rhs: float
    z_cross: float
    n_paths: int
    seed: int


def step1_identity_check(h, horizon, info: InformationFlow, grid: TimeGrid,
                         n_paths: int, seed: int = 42) -> Step1Report:
    """Estimate E[int S N dt] and E[int N^2 dt] on the normalized market.

    N is rebuilt from the continuum per-cell weights; cells known at time 0
    belong to the initial forecast and are excluded. Under delayed information
    the price side uses the projected price, matching N's information set.
    """
    if n_paths < 100:
        raise ValueError(f"need at least 100 paths, got {n_paths}")
    if abs(horizon - grid.horizon) > 1e-12 * max(1.0, horizon):
        raise ValueError("horizon does not match the grid")
    table = build_table(grid, h)
    rep = martingale_repr(table, info)
    n = grid.n
    d = grid.step
    w_n = np.where(rep.reveal >= 1, rep.n_weights, 0.0)
    lhs = np.empty(n_paths)
    rhs = np.empty(n_paths)
    trap = np.full(n + 1, d)
    trap[0] = trap[n] = d / 2.0

    def run(c0):
        hi = min(c0 + _CHUNK, n_paths)
        dws = draw_increments(grid, seed, np.arange(c0, hi))
        for k in range(c0, hi):
            dw = dws[k - c0]
            acc = np.zeros(n + 1)
            live = rep.reveal <= n
            np.add.at(acc, rep.reveal[live], (w_n * dw)[live])
            npath = np.cumsum(acc)
            if info.kind == "delayed":
                path = PathPair(grid=grid, dw=dw, bh=table.z_cells @ dw, seed=(seed, k))
                sref = project_price(table, path, info.delta)
            else:
                sref = table.z_cells @ dw
            lhs[k] = float(np.dot(trap, sref * npath))
            rhs[k] = float(np.dot(trap, npath * npath))

    _chunked(n_paths, run)
    closed = step1_rhs(h, horizon, info)
    lm, rm = float(np.sum(lhs) / n_paths), float(np.sum(rhs) / n_paths)
    ls = float(np.std(lhs, ddof=1) / np.sqrt(n_paths))
    rs = float(np.std(rhs, ddof=1) / np.sqrt(n_paths))
    ds = float(np.std(lhs - rhs, ddof=1) / np.sqrt(n_paths))
    return Step1Report(
        lhs_mean=lm, lhs_se=ls, rhs_mean=rm, rhs_se=rs, closed_rhs=closed,
        z_lhs=(lm - closed) / ls, z_rhs=(rm - closed) / rs,
        z_cross=(lm - rm) / ds if ds > 0 else 0.0,
        n_paths=n_paths, seed=seed,
    )
