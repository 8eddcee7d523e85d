"""Independent desk-scale certificate for the optimal strategy and value.

The discrete problem is a linear-quadratic control with Gaussian information:
maximize E[-delta*sum phi_i*S_i - (lam/2)*delta*sum phi_i^2] - phi0*s0 over
rates phi_i measurable w.r.t. the cells observable at step i, with the last
step forced to liquidate. Everything here is derived from the backward
quadratic completion of that program and never touches the forecast
representation or the closed-form integrals it is meant to check.

Working over the independent dw cells makes conditioning literal masking:
E[u'dw | cells in O] = (masked u)'dw, so the affine value-function
coefficients stay exact; no sampling enters the certificate.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fbm import PathPair, draw_increments
from .kernel import KernelTable, TimeGrid, build_table
from .montecarlo import _chunked, evaluate_pnl
from .strategies import (
    InformationFlow,
    LiquidationProblem,
    generic_strategy,
    lag_steps,
    martingale_repr,
)

_MAX_N = 64


def _reveal_steps(grid: TimeGrid, info: InformationFlow):
    # first step index observing each cell; deliberately re-derived here
    j = np.arange(grid.n)
    if info.kind == "standard":
        return j + 1
    jd = lag_steps(grid, info.delta)
    if info.kind == "delayed":
        return j + 1 + jd
    return np.maximum(j + 1 - jd, 0)


@dataclass(frozen=True)
class DPRecursion:
    """Backward value-function coefficients V_i(Q) = -a_i Q^2/2 + b_i Q + c_i.

    a is kept in exact rational arithmetic (the Riccati recursion telescopes
    to a_i = lam/((n-i)*delta), and the certificate should say so exactly);
    b_i is affine in the observable cells: b_const[i] + b_load[i] . dw.
    c_total collects E[c_0], the value of the stochastic tracking opportunity.
    """

    grid: TimeGrid
    info: InformationFlow
    lam: float
    a: tuple
    b_const: np.ndarray
    b_load: np.ndarray
    shat_const: np.ndarray
    shat_load: np.ndarray
    masks: np.ndarray
    c_total: float


def dp_solve(problem: LiquidationProblem, grid: TimeGrid,
             table: KernelTable | None = None) -> DPRecursion:
    """Run the exact backward recursion on the grid (dense algebra, n <= 64)."""
    n = grid.n
    if n > _MAX_N:
        raise ValueError(f"dense recursion is capped at n = {_MAX_N}, got {n}")
    if abs(problem.horizon - grid.horizon) > 1e-12 * max(1.0, problem.horizon):
        raise ValueError("problem horizon does not match the grid")
    market = problem.market
    if table is None:
        table = build_table(grid, market.h)
    delta = grid.step
    lam = problem.lam

    # a_i = lam * a_{i+1}/(lam + a_{i+1} delta), a_{n-1} = lam/delta, solved
    # exactly over the rationals
    dfrac = Fraction(grid.horizon) / n
    a = tuple(Fraction(problem.lam) / ((n - i) * dfrac) for i in range(n))

    reveal = _reveal_steps(grid, problem.info)
    i_idx = np.arange(n)[:, None]
    masks = i_idx >= reveal[None, :]
    # conditional price at step i: loadings on cells both observed and priced
    price_mask = np.arange(n)[None, :] < i_idx
    shat_load = np.where(masks & price_mask, market.sigma * table.z_cells[:n], 0.0)
    shat_const = market.s0 + market.mu * grid.nodes[:n]

    b_const = np.empty(n)
    b_load = np.empty((n, n))
    b_const[n - 1] = shat_const[n - 1]
    b_load[n - 1] = shat_load[n - 1]
    c_total = 0.0
    for i in range(n - 2, -1, -1):
        beta_const = b_const[i + 1]
        beta_load = np.where(masks[i], b_load[i + 1], 0.0)
        gap_const = beta_const - shat_const[i]
        gap_load = beta_load - shat_load[i]
        w = delta * (n - i - 1) / (2.0 * lam * (n - i))
        c_total += w * (gap_const ** 2 + delta * float(np.dot(gap_load, gap_load)))
        m = n - i
        b_const[i] = ((m - 1) * beta_const + shat_const[i]) / m
        b_load[i] = ((m - 1) * beta_load + shat_load[i]) / m
    for arr in (b_load, b_const, shat_load, masks):
        arr.setflags(write=False)
    return DPRecursion(grid=grid, info=problem.info, lam=lam, a=a,
                       b_const=b_const, b_load=b_load,
                       shat_const=shat_const, shat_load=shat_load,
                       masks=masks, c_total=c_total)


def dp_value(problem: LiquidationProblem, grid: TimeGrid,
             table: KernelTable | None = None) -> float:
    """E[V] of the exactly-solved discrete program (no sampling)."""
    rec = dp_solve(problem, grid, table)
    phi0 = problem.phi0
    a0 = float(rec.a[0])
    return (
        -phi0 * problem.market.s0
        - 0.5 * a0 * phi0 * phi0
        + rec.b_const[0] * phi0
        + rec.c_total
    )


def dp_rollout(rec: DPRecursion, problem: LiquidationProblem, path: PathPair):
    """Optimal rates along one scenario; the last step clears the position."""
    n = rec.grid.n
    delta = rec.grid.step
    lam = rec.lam
    phi = np.empty(n)
    q = problem.phi0
    for i in range(n - 1):
        shat = rec.shat_const[i] + float(np.dot(rec.shat_load[i], path.dw))
        beta = rec.b_const[i + 1] + float(
            np.dot(np.where(rec.masks[i], rec.b_load[i + 1], 0.0), path.dw)
        )
        a_next = float(rec.a[i + 1])
        phi[i] = (beta - shat - a_next * q) / (lam + a_next * delta)
        q += delta * phi[i]
    phi[n - 1] = -q / delta
    return phi


@dataclass(frozen=True)
class PerturbationReport:
    """CRN comparison of the strategy against k perturbed competitors."""

    base_mean: float
    deficits: np.ndarray      # base minus perturbed, expected >= 0
    deficit_ses: np.ndarray
    mean_deficit: float
    passed: bool              # every perturbation within base + 3*SE
    scale: float
    n_paths: int
    seed: int


def _validate_coeffs(coeffs, masks, grid):
    n = grid.n
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (n, n):
        raise ValueError(f"perturbation coefficients must be ({n}, {n})")
    bad = ~masks & (coeffs != 0.0)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"perturbation is not adapted: step {i} loads cell {j}, "
            "which is outside its information set"
        )
    colsums = coeffs.sum(axis=0)
    if np.any(np.abs(colsums) > 1e-9 * max(1.0, float(np.abs(coeffs).max()))):
        j = int(np.argmax(np.abs(colsums)))
        raise ValueError(
            f"perturbation does not liquidate: cell {j} column sum {colsums[j]:.3e}"
        )
    return coeffs


def _random_coeffs(masks, grid, k, seed):
    """k adapted, liquidating coefficient matrices with unit noise energy."""
    n = grid.n
    delta = grid.step
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0x70657274], dtype=np.uint64)))
    counts = masks.sum(axis=0)
    out = []
    for _ in range(k):
        g = np.where(masks, rng.standard_normal((n, n)), 0.0)
        colmean = np.where(counts > 0, g.sum(axis=0) / np.maximum(counts, 1), 0.0)
        g = np.where(masks, g - colmean[None, :], 0.0)
        norm = delta * float(np.linalg.norm(g))
        if norm > 0.0:
            g /= norm  # delta^2 * sum g^2 = 1, so E int eta^2 dt = 1
        out.append(g)
    return out


def perturbation_check(problem: LiquidationProblem, grid: TimeGrid, k: int,
                       seed: int, *, scale: float = 1.0, n_paths: int = 5000,
                       coeffs: list | None = None,
                       table: KernelTable | None = None) -> PerturbationReport:
    """MC-certify local optimality against k adapted liquidating competitors.

    Each competitor adds scale * eta to the strategy, eta_i = g[i] . dw with
    g supported on observable cells and column sums zero (so the perturbed
    strategy still liquidates pathwise). Supplied coefficient matrices are
    validated for both properties before any evaluation.
    """
    if k < 1:
        raise ValueError(f"need at least one perturbation, got {k}")
    if table is None:
        table = build_table(grid, problem.market.h)
    rep = martingale_repr(table, problem.info)
    reveal = _reveal_steps(grid, problem.info)
    masks = np.arange(grid.n)[:, None] >= reveal[None, :]
    if coeffs is not None:
        gs = [_validate_coeffs(c, masks, grid) for c in coeffs]
        if len(gs) != k:
            raise ValueError(f"got {len(gs)} coefficient matrices for k={k}")
    else:
        gs = _random_coeffs(masks, grid, k, seed)

    n = grid.n
    base = np.empty(n_paths)
    pert = np.empty((k, n_paths))

    def run(c0):
        hi = min(c0 + 512, n_paths)
        dws = draw_increments(grid, seed, np.arange(c0, hi))
        for p in range(c0, hi):
            dw = dws[p - c0]
            path = PathPair(grid=grid, dw=dw, bh=table.z_cells @ dw, seed=(seed, p))
            strat = generic_strategy(problem, rep, path, table)
            base[p] = evaluate_pnl(problem, path, strat)
            for m, g in enumerate(gs):
                phi = strat.phi + scale * (g @ dw)
                pert[m, p] = evaluate_pnl(problem, path, phi)

    _chunked(n_paths, run)
    diffs = base[None, :] - pert
    deficits = diffs.mean(axis=1)
    ses = diffs.std(axis=1, ddof=1) / np.sqrt(n_paths)
    return PerturbationReport(
        base_mean=float(np.sum(base) / n_paths),
        deficits=deficits,
        deficit_ses=ses,
        mean_deficit=float(deficits.mean()),
        passed=bool(np.all(deficits >= -3.0 * ses)),
        scale=scale,
        n_paths=n_paths,
        seed=seed,
    )
