"""Wealth series of LP, HOLD, LST and staker portfolios, and the Curve LP-token replay."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DomainError, IngestionError
from ..price import rebase_schedule
from .ingest import CurveSnapshot, format_ranges, missing_days


@dataclass(frozen=True)
class WealthSeries:
    """Daily portfolio values in underlying-token units, all starting from 1.

    ``lp`` includes trading fees, ``lp_plus_rewards`` adds incentive rewards.
    ``staker`` compounds the reference staking rate and is ``None`` when no
    rate series was supplied.
    """

    dates: list[dt.date]
    lp: np.ndarray
    lp_plus_rewards: np.ndarray
    hold: np.ndarray
    lst: np.ndarray
    staker: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.dates)
        series = [self.lp, self.lp_plus_rewards, self.hold, self.lst]
        if self.staker is not None:
            series.append(self.staker)
        if any(len(s) != n for s in series):
            raise DomainError("wealth series differ in length")

    def __len__(self):
        return len(self.dates)

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"lp": self.lp, "lp_plus_rewards": self.lp_plus_rewards,
                "hold": self.hold, "lst": self.lst}
        if self.staker is not None:
            cols["staker"] = self.staker
        return cols


def compounded_rates(rates: Sequence[float]) -> np.ndarray:
    """Wealth from re-staking daily at annualized ``rates``; day ``i`` earns ``rates[i]``."""
    return rebase_schedule(rates).compounded()


def curve_lp_wealth(snapshots: Sequence[CurveSnapshot], staking_rates: Sequence[float] | None = None,
                    rebase: bool = False) -> WealthSeries:
    """Replay daily Curve pool snapshots for 1 unit of initial capital.

    The LP-token value already contains trading fees; ``lp_plus_rewards`` adds
    cumulative per-token rewards from day 1 on. HOLD keeps the pool composition
    of day 0 and LST converts everything to the LST on day 0. For rebase LSTs
    the LST balances of HOLD and LST grow by the daily staking-rate multiplier,
    which needs ``staking_rates``.
    """
    if not snapshots:
        raise DomainError("no snapshots")
    dates = [s.date for s in snapshots]
    if any(b <= a for a, b in zip(dates, dates[1:])):
        raise IngestionError("snapshots must be sorted by date without duplicates")
    gaps = missing_days(dates)
    if gaps:
        raise IngestionError(f"missing days: {format_ranges(gaps)}")
    if staking_rates is not None and len(staking_rates) != len(snapshots):
        raise DomainError("staking rates must align with the snapshots")
    if rebase and staking_rates is None:
        raise DomainError("rebase pools need a staking rate series")

    r0 = np.array([s.reserves[0] for s in snapshots])
    r1 = np.array([s.reserves[1] for s in snapshots])
    supply = np.array([s.lp_token_supply for s in snapshots])
    price = np.array([s.lst_price for s in snapshots])
    reward = np.array([s.crv_reward_value for s in snapshots])

    token_value = (r0 * price + r1) / supply
    tokens = 1.0 / token_value[0]
    lp = token_value * tokens
    lp[0] = 1.0
    cum_reward = np.concatenate([[0.0], np.cumsum(reward[1:])])
    lp_plus = lp + tokens * cum_reward

    growth = compounded_rates(staking_rates) if staking_rates is not None else None
    lst_units = np.full(len(snapshots), 1.0 / price[0])
    if rebase:
        lst_units = lst_units * growth
    lst = lst_units * price
    hold_lst = tokens * r0[0] / supply[0]
    hold_eth = tokens * r1[0] / supply[0]
    hold_units = np.full(len(snapshots), hold_lst)
    if rebase:
        hold_units = hold_units * growth
    hold = hold_units * price + hold_eth
    lst[0] = hold[0] = 1.0
    return WealthSeries(dates, lp, lp_plus, hold, lst, growth)
