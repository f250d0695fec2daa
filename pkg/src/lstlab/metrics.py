"""Benchmark portfolio values, loss-versus-holding/staking and required fee returns.

All values are in units of the underlying token. Required returns are
fractions: ``rr = benchmark / V_LP - 1`` is the fee return an LP needs to
match the benchmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cfmm import ClmmPosition, clmm_holdings, cpmm_holdings
from .errors import DomainError


@dataclass(frozen=True)
class BenchmarkValues:
    v_lp: float
    v_hold: float
    v_lst: float
    at_time: float | None = None

    @property
    def lvh(self) -> float:
        return self.v_hold - self.v_lp

    @property
    def lvs(self) -> float:
        return self.v_lst - self.v_lp


@dataclass(frozen=True)
class RequiredReturns:
    rr_lvh: float
    rr_lvs: float


def benchmark_values(x0: float, y0: float, x_t: float, y_t: float, p0: float, p_t: float,
                     at_time: float | None = None) -> BenchmarkValues:
    """Value the LP position, the held initial tokens and the fully staked portfolio.

    ``x`` is the LST amount, ``y`` the underlying amount, ``p`` the LST price.
    """
    if not p0 > 0 or not p_t > 0:
        raise DomainError("prices must be > 0")
    return BenchmarkValues(
        v_lp=x_t * p_t + y_t,
        v_hold=x0 * p_t + y0,
        v_lst=(x0 + y0 / p0) * p_t,
        at_time=at_time,
    )


def required_returns(values: BenchmarkValues) -> RequiredReturns:
    if not values.v_lp > 0:
        raise DomainError("LP value must be > 0")
    return RequiredReturns(values.v_hold / values.v_lp - 1.0,
                           values.v_lst / values.v_lp - 1.0)


# --------------------------------------------------------------------------
# Constant product closed forms under GBM

def _half_sqrt_exponent(r: float, sigma: float, t: float, brownian: float) -> float:
    # log of sqrt(P(t)/P(0))
    return (r / 2.0 - sigma * sigma / 4.0) * t + sigma / 2.0 * brownian


def _cosh_m1(a: float) -> float:
    # cosh(a) - 1 without cancellation for small a
    h = math.sinh(a / 2.0)
    return 2.0 * h * h


def cpmm_rr_lvs_closed(r: float, sigma: float, t: float, brownian: float) -> float:
    """Path-wise CPMM loss-versus-staking return given the Brownian value ``B(t)``."""
    if t < 0:
        raise DomainError("t must be >= 0")
    return math.expm1(_half_sqrt_exponent(r, sigma, t, brownian))


def cpmm_rr_lvh_closed(r: float, sigma: float, t: float, brownian: float) -> float:
    """Path-wise CPMM loss-versus-holding return, ``cosh`` of the half log-return minus one."""
    if t < 0:
        raise DomainError("t must be >= 0")
    return _cosh_m1(_half_sqrt_exponent(r, sigma, t, brownian))


def cpmm_expected_rr(r: float, sigma: float, t: float) -> RequiredReturns:
    """Expectations of the CPMM required returns over ``B(t) ~ N(0, t)``."""
    if t < 0:
        raise DomainError("t must be >= 0")
    s2 = sigma * sigma
    up = (r / 2.0 - s2 / 8.0) * t
    down = (-r / 2.0 + 3.0 * s2 / 8.0) * t
    # (e^up + e^down)/2 - 1 = e^m cosh(h) - 1 with m, h the midpoint and half-gap
    m, h = (up + down) / 2.0, (up - down) / 2.0
    lvh = math.expm1(m) * math.cosh(h) + _cosh_m1(h)
    return RequiredReturns(lvh, math.expm1(up))


def cpmm_required_returns_from_path(liquidity: float, p0: float, p_t: float) -> RequiredReturns:
    """Required returns of a full-range position valued from its holdings.

    Plain arithmetic throughout, so extended-precision numbers (``mpmath.mpf``)
    pass through unchanged.
    """
    x0, y0 = cpmm_holdings(liquidity, p0)
    x_t, y_t = cpmm_holdings(liquidity, p_t)
    return required_returns(benchmark_values(x0, y0, x_t, y_t, p0, p_t))


# --------------------------------------------------------------------------
# Concentrated liquidity on the ideal path

@dataclass(frozen=True)
class ClmmSymmetricValues:
    v_lp: float
    v_lst: float
    v_hold_adjusted: float


def clmm_symmetric_range(p0: float, r: float, horizon: float, d: float) -> tuple[float, float]:
    """Range ``[P0 e^-d, P0 e^(rT+d)]`` centred on the expected log-price move."""
    if d < 0:
        raise DomainError("d must be >= 0")
    return p0 * math.exp(-d), p0 * math.exp(r * horizon + d)


def clmm_symmetric_values(liquidity: float, p0: float, r: float, horizon: float,
                          d: float) -> ClmmSymmetricValues:
    """Terminal values for a range centred on the ideal price path.

    ``v_hold_adjusted`` holds a 50/50 split of the initial position value rather
    than the position's own initial tokens; it is not the plain HOLD benchmark.
    """
    if d < 0:
        raise DomainError("d must be >= 0")
    if not horizon > 0:
        raise DomainError("horizon must be > 0")
    half = r * horizon / 2.0
    scale = liquidity * math.sqrt(p0)
    # 2 - e^(-rT/2 - d/2) - e^(-d/2), summed from positive pieces
    width = -math.expm1(-half - d / 2.0) - math.expm1(-d / 2.0)
    # 2e^(rT/2) - e^(rT/2 - d/2) - e^(-d/2)
    lp = -math.exp(half) * math.expm1(-d / 2.0) + math.exp(-d / 2.0) * math.expm1(half + d / 2.0)
    v_lp = scale * lp
    v_lst = scale * width * math.exp(2.0 * half)
    v_hold = scale * 0.5 * width * (1.0 + math.exp(2.0 * half))
    return ClmmSymmetricValues(v_lp, v_lst, v_hold)


def clmm_values_from_holdings(liquidity: float, p0: float, r: float, horizon: float,
                              d: float, p_t: float | None = None) -> BenchmarkValues:
    """Generic valuation of the symmetric position; works when the price leaves the range.

    ``p_t`` defaults to the ideal terminal price ``P0 e^(rT)``.
    """
    lower, upper = clmm_symmetric_range(p0, r, horizon, d)
    if d == 0 and r * horizon == 0:
        raise DomainError("zero-width range")
    pos = ClmmPosition(liquidity, lower, upper)
    if p_t is None:
        p_t = p0 * math.exp(r * horizon)
    x0, y0 = clmm_holdings(pos, p0)
    x_t, y_t = clmm_holdings(pos, p_t)
    return benchmark_values(x0, y0, x_t, y_t, p0, p_t, at_time=horizon)


def clmm_required_returns(r: float, horizon: float) -> RequiredReturns:
    """Width-independent required returns of a symmetric range on the ideal path."""
    if horizon < 0:
        raise DomainError("horizon must be >= 0")
    half = r * horizon / 2.0
    return RequiredReturns(_cosh_m1(half), math.expm1(half))


# --------------------------------------------------------------------------
# Rebase LSTs

def rebase_required_returns(r: float, t: float) -> RequiredReturns:
    """Rebase-LST pool at a constant peg: no LVH, and LVS from half the pool earning rewards.

    Returns the ratio minus one, ``(e^rt - 1) / (e^rt + 1)``.
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    g = math.expm1(r * t)
    return RequiredReturns(0.0, g / (g + 2.0))


# --------------------------------------------------------------------------
# Fee returns

def fee_return(volume: float, fee_rate: float, liquidity_in_pool: float) -> float:
    """Fee return ``volume * fee / liquidity``; pass in-range liquidity for concentrated pools."""
    if not liquidity_in_pool > 0:
        raise DomainError("liquidity in pool must be > 0")
    return volume * fee_rate / liquidity_in_pool


def required_volume(required_return: float, fee_rate: float, liquidity_in_pool: float) -> float:
    """Trading volume whose fees deliver ``required_return``."""
    if not fee_rate > 0:
        raise DomainError("fee rate must be > 0")
    if not liquidity_in_pool > 0:
        raise DomainError("liquidity in pool must be > 0")
    return required_return * liquidity_in_pool / fee_rate
