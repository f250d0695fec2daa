"""Monte Carlo checks of the CPMM expectations and arbitrage-driven LP simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .cfmm import (
    ClmmPosition,
    FamilyKind,
    FeeMode,
    PoolState,
    clmm_holdings,
    clmm_virtual_reserves,
    spot_price,
    swap,
)
from .errors import DomainError, InsufficientLiquidityError
from .metrics import cpmm_expected_rr, cpmm_rr_lvh_closed, cpmm_rr_lvs_closed
from .price import PricePath, path_rng

BLOCK_SIZE = 8192
ALIGN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    closed_form: float
    z_score: float

    def as_dict(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "n_paths": self.n_paths,
                "closed_form": self.closed_form, "z_score": self.z_score}


def _terminal_brownian(t: float, n_paths: int, seed: int) -> np.ndarray:
    # fixed-size blocks with their own substreams: the draw for path k never
    # depends on how the work is split
    blocks = []
    for b, start in enumerate(range(0, n_paths, BLOCK_SIZE)):
        size = min(BLOCK_SIZE, n_paths - start)
        blocks.append(path_rng(seed, b).standard_normal(size))
    return np.concatenate(blocks) * math.sqrt(t)


def _estimate(samples: np.ndarray, closed_form: float) -> McEstimate:
    n = len(samples)
    # shift by the first sample so a constant sample reproduces itself exactly
    ref = float(samples[0])
    dev = samples - ref
    mean = ref + math.fsum(dev) / n
    centred = samples - mean
    var = math.fsum(centred * centred) / (n - 1)
    se = math.sqrt(var / n)
    if se > 0:
        z = (mean - closed_form) / se
    else:
        z = 0.0 if mean == closed_form else math.copysign(math.inf, mean - closed_form)
    return McEstimate(mean, se, n, closed_form, z)


def estimate_expected_rr(r: float, sigma: float, t: float, n_paths: int, seed: int,
                         family: FamilyKind = FamilyKind.CONSTANT_PRODUCT
                         ) -> tuple[McEstimate, McEstimate]:
    """Sample ``B(t)`` and compare mean path-wise required returns with their expectations.

    Returns ``(lvh, lvs)`` estimates.
    """
    if family is not FamilyKind.CONSTANT_PRODUCT:
        raise DomainError("expectations are only available for constant product pools")
    if n_paths < 2:
        raise DomainError("need at least two paths")
    if t < 0:
        raise DomainError("t must be >= 0")
    b = _terminal_brownian(t, n_paths, seed)
    lvh = np.array([cpmm_rr_lvh_closed(r, sigma, t, v) for v in b.tolist()])
    lvs = np.array([cpmm_rr_lvs_closed(r, sigma, t, v) for v in b.tolist()])
    expected = cpmm_expected_rr(r, sigma, t)
    return _estimate(lvh, expected.rr_lvh), _estimate(lvs, expected.rr_lvs)


# --------------------------------------------------------------------------
# Arbitrage alignment

@dataclass(frozen=True)
class Alignment:
    state: PoolState
    profit: float
    fees: float


def _trade_value(quote, in_index: int, price: float) -> float:
    """Arbitrageur profit in token 1 at the external price."""
    if in_index == 1:
        return quote.amount_out * price - quote.amount_in
    return quote.amount_out - quote.amount_in * price


def _fee_value(fee: float, in_index: int, price: float) -> float:
    return fee * price if in_index == 0 else fee


def _closed_form_alignment(state: PoolState, target: float, price: float) -> Alignment:
    kind = state.family.kind
    x, y = state.reserves
    if kind is FamilyKind.CONSTANT_PRODUCT:
        k = x * y
        new = (math.sqrt(k / target), math.sqrt(k * target))
    else:
        fam = state.family
        L = clmm_virtual_reserves(state)[2]
        new = clmm_holdings(ClmmPosition(L, fam.lower_price, fam.upper_price), target)
    # arbitrageur receives what leaves the pool
    profit = (x - new[0]) * price + (y - new[1])
    return Alignment(replace(state, reserves=new), profit, 0.0)


def _bisect_alignment(state: PoolState, target: float, price: float) -> Alignment:
    spot = spot_price(state)
    in_index = 1 if spot < target else 0
    out_index = 1 - in_index

    def overshoots(amount):
        try:
            q = swap(state, in_index, out_index, amount)
        except InsufficientLiquidityError:
            return True, None
        s = q.spot_price_after
        return (s >= target if in_index == 1 else s <= target), q

    lo, hi = 0.0, state.reserves[in_index] * 1e-6 or 1e-12
    best = None
    for _ in range(200):
        over, q = overshoots(hi)
        if over:
            break
        lo, best = hi, q
        hi *= 2.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        over, q = overshoots(mid)
        if over:
            hi = mid
        else:
            lo, best = mid, q
        if best is not None and abs(best.spot_price_after / target - 1.0) <= ALIGN_TOLERANCE:
            break
    if best is None:
        return Alignment(state, 0.0, 0.0)
    return Alignment(best.new_state, _trade_value(best, in_index, price),
                     _fee_value(best.fee_paid, in_index, price))


def align_to_price(state: PoolState, price: float) -> Alignment:
    """Trade the pool toward an external price.

    Without fees the spot price is moved onto ``price``. With fee rate ``f`` the
    pool is only traded back to the edge of the band ``[P(1-f), P/(1-f)]``;
    inside it no trade makes money. Concentrated pools stop at their range edge.
    """
    f = state.fee_rate
    spot = spot_price(state)
    lo_band, hi_band = price * (1.0 - f), price / (1.0 - f)
    if lo_band <= spot <= hi_band:
        return Alignment(state, 0.0, 0.0)
    target = lo_band if spot < lo_band else hi_band
    kind = state.family.kind
    if kind is FamilyKind.CONCENTRATED_LIQUIDITY:
        fam = state.family
        target = min(max(target, fam.lower_price), fam.upper_price)
        if target == spot:
            return Alignment(state, 0.0, 0.0)
    if f == 0 and kind in (FamilyKind.CONSTANT_PRODUCT, FamilyKind.CONCENTRATED_LIQUIDITY):
        return _closed_form_alignment(state, target, price)
    return _bisect_alignment(state, target, price)


@dataclass(frozen=True)
class LpSimulation:
    """Per-step wealth of the LP and its benchmarks along one price path.

    Series are normalized by the initial LP value. ``lp`` is the pool value
    owned by the LP; ``lp_plus_fees`` adds fees accrued outside the pool.
    """

    times: np.ndarray
    lp: np.ndarray
    lp_plus_fees: np.ndarray
    hold: np.ndarray
    lst: np.ndarray
    staker: np.ndarray
    reserves: np.ndarray
    spot: np.ndarray
    arbitrage_profit: np.ndarray


def simulate_lp_path(pool0: PoolState, path: PricePath, staking_rate: float | None = None,
                     price_tolerance: float = 1e-9) -> LpSimulation:
    """Replay a price path against a pool kept in line by a fee-aware arbitrageur.

    The LP owns the whole pool. ``staker`` compounds ``staking_rate`` when given,
    otherwise it equals the LST benchmark.
    """
    p0 = float(path.prices[0])
    if abs(spot_price(pool0) / p0 - 1.0) > price_tolerance:
        raise DomainError("pool spot price must match the path at t=0")
    n = len(path)
    reserves = np.empty((n, 2))
    spot = np.empty(n)
    lp = np.empty(n)
    lp_fees = np.empty(n)
    profit = np.empty(n)
    state = pool0
    x0, y0 = pool0.reserves
    accrued = 0.0
    cumulative = 0.0
    separate = pool0.fee_mode is FeeMode.FEES_ACCRUED_SEPARATELY
    for i, price in enumerate(path.prices):
        price = float(price)
        if i > 0:
            step = align_to_price(state, price)
            state = step.state
            cumulative += step.profit
            if separate:
                accrued += step.fees
        reserves[i] = state.reserves
        spot[i] = spot_price(state)
        lp[i] = state.reserves[0] * price + state.reserves[1]
        lp_fees[i] = lp[i] + accrued
        profit[i] = cumulative
    v0 = lp[0]
    hold = (x0 * path.prices + y0) / v0
    lst = (x0 + y0 / p0) * path.prices / v0
    if staking_rate is None:
        staker = lst.copy()
    else:
        staker = np.exp(staking_rate * path.times)
    return LpSimulation(path.times, lp / v0, lp_fees / v0, hold, lst, staker,
                        reserves, spot, profit)
