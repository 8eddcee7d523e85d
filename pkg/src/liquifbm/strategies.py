"""Optimal trading rates for the three information flows.

The optimal rate has one generic shape: a constant inventory term plus the
scaled gap between a forward-looking tracking process N and the (projected)
price. The flows differ only in when a Brownian cell becomes observable and in
the weight its increment carries in N.

Discretization note. The continuum N-weight for a cell revealed at time u is
K_info(s) / (T - u), and the continuum strategy liquidates pathwise because
integrating N against dt telescopes exactly against the price integral. On a
grid that telescoping survives only if the N-weights are built from the same
cell-averaged kernel table the price uses: each cell's weight is the average
of its observed column entries. Point evaluations of K at cell edges break the
cancellation near s = 0 badly enough that the final-step correction acquires
an O(delta^-1/2) cost, so the weights below are derived from the table, while
the continuum loadings are kept alongside for diagnostics and identity tests.
"""

from dataclasses import dataclass

import numpy as np

from .fbm import MarketSpec, PathPair, price_path
from .kernel import KernelTable, TimeGrid, k_integral


@dataclass(frozen=True)
class InformationFlow:
    """Observation regime: standard, delayed by delta, or insider by delta."""

    kind: str
    delta: float | None = None

    def __post_init__(self):
        if self.kind not in ("standard", "delayed", "insider"):
            raise ValueError(f"unknown information kind {self.kind!r}")
        if self.kind == "standard":
            if self.delta is not None:
                raise ValueError("standard information takes no lag delta")
        else:
            if self.delta is None or not self.delta > 0.0:
                raise ValueError(f"{self.kind} information needs a positive delta")


STANDARD = InformationFlow("standard")


def delayed(delta):
    return InformationFlow("delayed", float(delta))


def insider(delta):
    return InformationFlow("insider", float(delta))


@dataclass(frozen=True)
class LiquidationProblem:
    """Initial position phi0, impact scale lam, horizon, market and info flow."""

    phi0: float
    lam: float
    horizon: float
    market: MarketSpec
    info: InformationFlow

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ValueError(f"impact coefficient must be positive, got {self.lam}")
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.info.kind != "standard" and not self.info.delta <= self.horizon:
            raise ValueError(
                f"information lag {self.info.delta} exceeds the horizon {self.horizon}"
            )


def lag_steps(grid: TimeGrid, delta):
    """Information lag in whole grid cells; rejects unaligned lags."""
    ratio = delta / grid.step
    jd = int(round(ratio))
    if jd < 1 or abs(ratio - jd) > 1e-9 * max(1.0, ratio):
        raise ValueError(
            f"lag delta={delta} is not a whole number of grid steps (step={grid.step}); "
            "choose n so that delta/(T/n) is an integer"
        )
    return jd


@dataclass(frozen=True)
class MartingaleRepr:
    """Loadings of the information flow's forecast machinery on the dw cells.

    m0_coeffs   loading of the time-0 forecast of the price integral
    h_M         loading of the forecast increment assigned to cell j
    n_weights   continuum tracking weights h_M / (remaining time at reveal)
    reveal      first step index at which cell j is observable
    strat_weights  table-consistent tracking weights used by the strategies
    """

    grid: TimeGrid
    h: float
    info: InformationFlow
    m0_coeffs: np.ndarray
    h_M: np.ndarray
    n_weights: np.ndarray
    reveal: np.ndarray
    strat_weights: np.ndarray


def _observer_counts(n, reveal):
    # number of trading steps 0..n-1 that observe each cell
    return np.maximum(n - reveal, 0)


def martingale_repr(table: KernelTable, info: InformationFlow) -> MartingaleRepr:
    """Build the per-cell loadings for one information flow on one table."""
    grid = table.grid
    n = grid.n
    horizon = grid.horizon
    s = grid.nodes[:n]
    h = table.h
    m0 = np.zeros(n)
    h_m = np.zeros(n)
    n_w = np.zeros(n)

    if info.kind == "standard":
        reveal = np.arange(1, n + 1)
        h_m[:] = table.k_vals
        n_w[:] = table.k_vals / (horizon - s)
    elif info.kind == "delayed":
        jd = lag_steps(grid, info.delta)
        reveal = np.arange(1, n + 1) + jd
        # loading of the lagged forecast increment: kernel mass at least
        # delta ahead of the cell
        sup = horizon - info.delta
        live = s < sup - 1e-15
        if np.any(live):
            vals = np.array(
                [k_integral(h, si, horizon) - k_integral(h, si, horizon, upper=si + info.delta)
                 if si > 0.0 else np.nan
                 for si in s[live]]
            )
            # s = 0 keeps the same first-cell-average convention as k_vals
            if live[0]:
                vals[0] = table.k_vals[0] - _lagged_first_cell(table, info.delta)
            h_m[live] = vals
            n_w[live] = h_m[live] / (sup - s[live])
    else:
        jd = lag_steps(grid, info.delta)
        reveal = np.maximum(np.arange(1, n + 1) - jd, 0)
        h_m[:] = table.k_vals
        early = s < info.delta - 1e-15
        m0[early] = table.k_vals[early]
        n_w[early] = table.k_vals[early] / horizon
        late = ~early
        n_w[late] = table.k_vals[late] / (horizon + info.delta - s[late])

    counts = _observer_counts(n, reveal)
    observed_colsum = _masked_column_sums(table, reveal)
    with np.errstate(invalid="ignore", divide="ignore"):
        strat = np.where(counts > 0, observed_colsum / np.maximum(counts, 1), 0.0)
    return MartingaleRepr(
        grid=grid,
        h=h,
        info=info,
        m0_coeffs=m0,
        h_M=h_m,
        n_weights=n_w,
        reveal=reveal,
        strat_weights=strat,
    )


def _masked_column_sums(table: KernelTable, reveal):
    # sum over trading rows i of z_cells[i, j] restricted to observers of j;
    # rows never load future cells so the standard/insider masks coincide
    n = table.grid.n
    z = table.z_cells[:n, :]
    i_idx = np.arange(n)[:, None]
    mask = i_idx >= reveal[None, :]
    return np.where(mask, z, 0.0).sum(axis=0)


def _lagged_first_cell(table: KernelTable, delta):
    # average over the first cell of the kernel mass closer than delta ahead
    from .kernel import _first_cell_averages, _rules  # shared panel machinery

    grid = table.grid
    h = table.h
    if h == 0.5:
        # the subtracted window integral is delta for every s in the cell
        return float(delta)
    rules = _rules(h)
    # int_s^{s+delta} Z(u, s) du averaged over s in the first cell equals the
    # k_vals[0] convention applied to the trimmed horizon integral
    edges = grid.step * 0.5 ** np.arange(61)
    lo, hi = edges[1:], edges[:-1]
    s_nodes = (lo[:, None] + (hi - lo)[:, None] * (rules.x_panel + 1.0) / 2.0).ravel()
    w_nodes = ((hi - lo)[:, None] / 2.0 * rules.w_panel).ravel()
    vals = np.array([k_integral(h, si, grid.horizon, upper=si + delta) for si in s_nodes])
    total = float(vals @ w_nodes)
    alpha = -abs(h - 0.5)
    s_star = edges[-1]
    total += k_integral(h, s_star, grid.horizon, upper=s_star + delta) * s_star / (1.0 + alpha)
    return total / grid.step


@dataclass(frozen=True)
class StrategyPath:
    """Trading rates and the position they accumulate on one scenario."""

    grid: TimeGrid
    info: InformationFlow
    phi: np.ndarray        # rate at t_i, i = 0..n-1, after residual absorption
    position: np.ndarray   # inventory at t_i, i = 0..n, position[n] = 0 exactly
    residual: float        # pre-correction leftover folded into the last step


def project_price(table: KernelTable, path: PathPair, delta, market: MarketSpec | None = None):
    """Price forecast under a lag: only cells older than delta contribute.

    Returns the projected noise path when market is None, otherwise the full
    projected price s0 + mu*t + sigma*(projected noise).
    """
    if not delta > 0.0:
        raise ValueError(f"projection lag must be positive, got {delta}")
    grid = path.grid
    n = grid.n
    jd = lag_steps(grid, delta)
    z = table.z_cells
    i_idx = np.arange(n + 1)[:, None]
    mask = np.arange(n)[None, :] < np.maximum(i_idx - jd, 0)
    noise = np.where(mask, z, 0.0) @ path.dw
    if market is None:
        return noise
    return market.s0 + market.mu * grid.nodes + market.sigma * noise


def _tracking_noise(repr_: MartingaleRepr, table: KernelTable, path: PathPair):
    """q_i = N_i - (projected price noise)_i on the trading nodes."""
    grid = repr_.grid
    n = grid.n
    # reveal[j] = r means cell j first contributes at step r, so a prefix sum
    # over per-step arrivals gives the tracking path in O(n)
    acc = np.zeros(n)
    contrib = repr_.strat_weights * path.dw
    live = repr_.reveal < n
    np.add.at(acc, repr_.reveal[live], contrib[live])
    track = np.cumsum(acc)
    if repr_.info.kind == "delayed":
        price_noise = project_price(table, path, repr_.info.delta)[:n]
    else:
        price_noise = path.bh[:n]
    return track - price_noise


def generic_strategy(problem: LiquidationProblem, repr_: MartingaleRepr,
                     path: PathPair, table: KernelTable | None = None) -> StrategyPath:
    """Assemble the optimal rate path for one scenario.

    The drift piece is mu*(T/2 - t)/lam; the noise piece scales the tracking
    gap by sigma/lam. Degenerate configurations (sigma = 0, or h = 1/2 with no
    look-ahead) short-circuit the noise assembly so the martingale-price
    anchors hold bit-exactly. The liquidation leftover is absorbed into the
    final step, which only uses information available at t_{n-1}.
    """
    if path.grid != repr_.grid:
        raise ValueError("strategy and scenario grids differ")
    grid = repr_.grid
    n = grid.n
    delta = grid.step
    horizon = problem.horizon
    if abs(horizon - grid.horizon) > 1e-12 * max(1.0, horizon):
        raise ValueError("problem horizon does not match the grid")
    market = problem.market
    t = grid.nodes[:n]

    phi = np.full(n, -problem.phi0 / horizon)
    if market.mu != 0.0:
        phi = phi + market.mu * (horizon / 2.0 - t) / problem.lam

    degenerate = market.sigma == 0.0 or (
        repr_.h == 0.5 and repr_.info.kind in ("standard", "delayed")
    )
    if not degenerate:
        if table is None:
            raise ValueError("non-degenerate strategies need the kernel table")
        q = _tracking_noise(repr_, table, path)
        phi = phi + (market.sigma / problem.lam) * q

    residual = problem.phi0 + delta * float(np.sum(phi))
    pure_constant = degenerate and market.mu == 0.0
    if not pure_constant:
        phi = phi.copy()
        phi[n - 1] -= residual / delta
    increments = phi * delta
    position = np.empty(n + 1)
    position[0] = problem.phi0
    position[1:] = problem.phi0 + np.cumsum(increments)
    position[n] = 0.0
    phi.setflags(write=False)
    position.setflags(write=False)
    return StrategyPath(grid=grid, info=repr_.info, phi=phi, position=position,
                        residual=residual if not pure_constant else 0.0)


def _flow_strategy(problem, table, path, kind):
    if problem.info.kind != kind:
        raise ValueError(f"problem carries {problem.info.kind!r} information, not {kind!r}")
    repr_ = martingale_repr(table, problem.info)
    return generic_strategy(problem, repr_, path, table)


def standard_strategy(problem, table, path):
    return _flow_strategy(problem, table, path, "standard")


def delayed_strategy(problem, table, path):
    return _flow_strategy(problem, table, path, "delayed")


def insider_strategy(problem, table, path):
    return _flow_strategy(problem, table, path, "insider")
