"""File-driven historical replay of LP, HOLD, LST and staker wealth."""

from .classify import Label, MaClassification, moving_average_classification, window_returns
from .ingest import (
    BacktestBundle,
    CurveSnapshot,
    Schema,
    SwapEvent,
    ingest,
    ingest_directory,
)
from .uniswap import (
    ClmmBacktestConfig,
    ClmmBacktestResult,
    Rebalance,
    accrue_fee,
    clmm_backtest,
)
from .wealth import WealthSeries, compounded_rates, curve_lp_wealth

__all__ = [
    "BacktestBundle", "ClmmBacktestConfig", "ClmmBacktestResult", "CurveSnapshot", "Label",
    "MaClassification", "Rebalance", "Schema", "SwapEvent", "WealthSeries", "accrue_fee",
    "clmm_backtest", "compounded_rates", "curve_lp_wealth", "ingest", "ingest_directory",
    "moving_average_classification", "window_returns",
]
