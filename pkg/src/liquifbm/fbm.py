"""Joint (W, B^H) scenario simulation and the exact-law cross-check sampler.

The production sampler drives everything through one discretization: Brownian
cell increments dw hit the cell-averaged kernel rows of a KernelTable, so the
simulated price and any strategy built on the same table share their stochastic
integrals. The Cholesky sampler is deliberately independent code (it factors
the analytic covariance) and exists only to check the law of the first one.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .kernel import KernelTable, TimeGrid


@dataclass(frozen=True)
class MarketSpec:
    """Price model S_t = s0 + sigma * B^H_t + mu * t.

    sigma = 0 is allowed and means a deterministic price ramp; several
    closed-form anchors live in that corner.
    """

    s0: float = 0.0
    mu: float = 0.0
    sigma: float = 1.0
    h: float = 0.5

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if not 0.0 < self.h < 1.0:
            raise ValueError(f"hurst parameter must be in (0, 1), got {self.h}")


@dataclass(frozen=True)
class PathPair:
    """One scenario: Brownian cell increments and the fBm they generate."""

    grid: TimeGrid
    dw: np.ndarray      # shape (n,), increment over cell j, variance delta
    bh: np.ndarray      # shape (n+1,), bh[i] = sum_{j<i} z_cells[i,j] dw[j]
    seed: tuple         # (master_seed, path_index)


def analytic_cov(h, t, u):
    """cov(B^H_t, B^H_u) = (t^{2H} + u^{2H} - |t-u|^{2H}) / 2."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    out = 0.5 * (t ** (2.0 * h) + u ** (2.0 * h) - np.abs(t - u) ** (2.0 * h))
    return float(out) if np.ndim(out) == 0 else out


def _seed_pair(seed):
    if isinstance(seed, tuple):
        master, idx = seed
    else:
        master, idx = int(seed), 0
    return int(master), int(idx)


def _stream(master, idx):
    # one counter-based stream per (master seed, path index): reproducible
    # under any worker layout
    return np.random.Generator(np.random.Philox(key=np.array([master, idx], dtype=np.uint64)))


def draw_increments(grid, master_seed, path_indices, out=None):
    """Brownian cell increments for the given path indices, variance delta.

    Each path owns its Philox stream keyed by (master_seed, index), so a batch
    sliced across workers reproduces the serial result bit for bit.
    """
    scale = np.sqrt(grid.step)
    path_indices = np.asarray(path_indices, dtype=np.int64)
    if out is None:
        out = np.empty((path_indices.size, grid.n))
    for row, idx in enumerate(path_indices):
        out[row] = _stream(master_seed, int(idx)).standard_normal(grid.n) * scale
    return out


def simulate_path_pair(table: KernelTable, seed) -> PathPair:
    """Simulate one joint scenario on the table's grid.

    dw feeds the construction identity bh[i] = sum_{j<i} z_cells[i,j] dw[j];
    determinism is per (table, seed).
    """
    master, idx = _seed_pair(seed)
    dw = draw_increments(table.grid, master, [idx])[0]
    bh = table.z_cells @ dw
    dw.setflags(write=False)
    bh.setflags(write=False)
    return PathPair(grid=table.grid, dw=dw, bh=bh, seed=(master, idx))


def price_path(market: MarketSpec, path: PathPair):
    """Assemble S at the grid nodes from a scenario."""
    return market.s0 + market.sigma * path.bh + market.mu * path.grid.nodes


def cholesky_sample(h, grid: TimeGrid, seed):
    """Exact-law fBm values at the grid nodes via the analytic covariance.

    Returns an (n+1,) array with the zero at t_0. Independent of the Volterra
    machinery on purpose: it is the distributional oracle for it.
    """
    t = grid.nodes[1:]
    cov = analytic_cov(h, t[:, None], t[None, :])
    try:
        chol = scipy.linalg.cholesky(cov, lower=True)
    except scipy.linalg.LinAlgError as exc:
        # scipy's message carries the offending leading minor order
        raise scipy.linalg.LinAlgError(
            f"fBm covariance factorization failed at h={h}, n={grid.n}: {exc}"
        ) from exc
    master, idx = _seed_pair(seed)
    z = _stream(master, idx).standard_normal(grid.n)
    out = np.empty(grid.n + 1)
    out[0] = 0.0
    out[1:] = chol @ z
    return out


def write_path_csv(path: PathPair, stream):
    """Dump one scenario as CSV with header t,w,bh."""
    w = np.concatenate(([0.0], np.cumsum(path.dw)))
    stream.write("t,w,bh\n")
    for t, wv, bv in zip(path.grid.nodes, w, path.bh):
        stream.write(f"{t:.15g},{wv:.15g},{bv:.15g}\n")
