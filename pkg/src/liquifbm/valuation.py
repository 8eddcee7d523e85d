"""Closed-form expected values for the three information flows.

The normalized value (unit volatility and impact, zero drift and initial
position) is half the difference between the full price-variance integral and
the tracking-variance integral of the flow. The factor one half is forced by
the value's representation as (1/(2*lam)) times a squared-distance
expectation; Monte Carlo agreement confirms the convention.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .kernel import QuadratureError, k_integral, z_kernel
from .strategies import InformationFlow, LiquidationProblem

_QUAD_LIMIT = 200


def _quad(f, lo, hi, what):
    val, err = integrate.quad(f, lo, hi, limit=_QUAD_LIMIT, epsabs=1e-11, epsrel=1e-11)
    if not np.isfinite(val) or err > max(1e-9, 1e-7 * abs(val)):
        raise QuadratureError(
            f"value integral {what} on [{lo}, {hi}] did not converge (err={err:.2e})"
        )
    return val


def _full_variance(h, horizon):
    # E int_0^T S^2 dt for the unit-volatility price
    return horizon ** (2.0 * h + 1.0) / (2.0 * h + 1.0)


def _lagged_k(h, s, horizon, delta):
    # kernel mass at least delta ahead of s
    return k_integral(h, s, horizon) - k_integral(h, s, horizon, upper=s + delta)


def _z_squared_tail(h, s, lo, hi):
    # int_lo^hi Z(t, s)^2 dt with lo > s, so the integrand is smooth
    if hi <= lo:
        return 0.0
    edges = np.linspace(lo, hi, 5)
    x, w = np.polynomial.legendre.leggauss(32)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        t = (a + b) / 2.0 + (b - a) / 2.0 * x
        total += (b - a) / 2.0 * float(z_kernel(h, t, s) ** 2 @ w)
    return total


def step1_rhs(h, horizon, info: InformationFlow):
    """E of the time integral of N squared, i.e. the subtracted term.

    Standard:  int_0^T K(s)^2/(T-s) ds
    Delayed:   int_0^{T-d} Kd(s)^2/(T-d-s) ds
    Insider:   int_d^T K(s)^2/(T+d-s) ds   (the m0 share lives separately)
    """
    if info.kind == "standard":
        if h == 0.5:
            return horizon * horizon / 2.0
        f = lambda s: k_integral(h, s, horizon) ** 2 / (horizon - s)
        return _quad(f, 0.0, horizon, f"standard tracking term at h={h}")
    if info.kind == "delayed":
        d = info.delta
        sup = horizon - d
        if sup <= 0.0:
            return 0.0
        if h == 0.5:
            return sup * sup / 2.0
        f = lambda s: _lagged_k(h, s, horizon, d) ** 2 / (sup - s)
        return _quad(f, 0.0, sup, f"delayed tracking term at h={h}, delta={d}")
    d = info.delta
    if h == 0.5:
        # K = T - s; int_d^T (T-s)^2/(T+d-s) ds by substitution
        u0, u1 = d, horizon  # u = T + d - s runs over [d, T] reversed
        return (
            (u1 * u1 - u0 * u0) / 2.0 - 2.0 * d * (u1 - u0) + d * d * np.log(u1 / u0)
        )
    f = lambda s: k_integral(h, s, horizon) ** 2 / (horizon + d - s)
    return _quad(f, d, horizon, f"insider tracking term at h={h}, delta={d}")


def normalized_value(h, horizon, info: InformationFlow):
    """Expected liquidation gain at phi0 = 0, mu = 0, sigma = lam = 1."""
    if info.kind != "standard" and not info.delta <= horizon:
        raise ValueError(f"lag {info.delta} exceeds horizon {horizon}")
    if info.kind == "standard":
        return 0.5 * (_full_variance(h, horizon) - step1_rhs(h, horizon, info))
    if info.kind == "delayed":
        d = info.delta
        sup = horizon - d
        if sup <= 0.0:
            return 0.0
        if h == 0.5:
            projected = sup * sup / 2.0
        else:
            projected = _quad(
                lambda s: _z_squared_tail(h, s, s + d, horizon),
                0.0, sup, f"delayed projected variance at h={h}, delta={d}",
            )
        return 0.5 * (projected - step1_rhs(h, horizon, info))
    d = info.delta
    if h == 0.5:
        head = (horizon - 0.0) ** 3 / 3.0 - (horizon - d) ** 3 / 3.0  # int_0^d (T-s)^2 ds
    else:
        head = _quad(
            lambda s: k_integral(h, s, horizon) ** 2,
            0.0, d, f"insider head term at h={h}, delta={d}",
        )
    return 0.5 * (
        _full_variance(h, horizon) - head / horizon - step1_rhs(h, horizon, info)
    )


@dataclass(frozen=True)
class ValueBreakdown:
    """Expected value split into inventory, drift, and tracking pieces."""

    inventory_term: float
    drift_term: float
    tracking_term: float
    total: float


def general_value(problem: LiquidationProblem) -> ValueBreakdown:
    """Expected value at general (phi0, lam, mu, sigma, s0).

    The reduction to the normalized case: the time-0 forecast of the price
    integral is s0*T + mu*T^2/2 for every flow, the deterministic drift
    residual mu*(t - T/2) contributes mu^2 T^3/(24*lam) on its own, and the
    stochastic residual scales by sigma^2/lam.
    """
    phi0, lam, horizon = problem.phi0, problem.lam, problem.horizon
    market = problem.market
    inventory = -phi0 * phi0 * lam / (2.0 * horizon)
    drift = phi0 * market.mu * horizon / 2.0
    tracking = market.mu ** 2 * horizon ** 3 / (24.0 * lam)
    if market.sigma != 0.0:
        tracking += (market.sigma ** 2 / lam) * normalized_value(
            market.h, horizon, problem.info
        )
    return ValueBreakdown(
        inventory_term=inventory,
        drift_term=drift,
        tracking_term=tracking,
        total=inventory + drift + tracking,
    )
