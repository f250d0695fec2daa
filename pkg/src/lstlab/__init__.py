"""Liquid staking token liquidity on AMMs: swap math, LP loss metrics,
Monte Carlo checks and historical backtests."""

__version__ = "0.1.0"
