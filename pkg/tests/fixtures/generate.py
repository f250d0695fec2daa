"""Regenerate the synthetic backtest fixtures (run from this directory).

curve_pool/    40 days of a reward-LST pool tracking an LST price that grows
               at 3.5%/yr, constant-product reserves, small CRV rewards
uniswap_pool/  75 days (three month resets) of swaps around a drifting price
"""

import csv
import datetime as dt
import math
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
START = dt.date(2024, 1, 1)


def write(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else repr(v) for v in row])


def curve_pool(days=40, liquidity=1000.0, rate=0.035):
    dates = [START + dt.timedelta(days=i) for i in range(days)]
    rows, rates, rewards = [], [], []
    for i, d in enumerate(dates):
        p = 1.05 * math.exp(rate * i / 365)
        # fees grow the invariant by 1bp a day
        L = liquidity * (1.0001 ** i)
        rows.append([d.isoformat(), L / math.sqrt(p), L * math.sqrt(p), liquidity, p,
                     0.0 if i == 0 else 2e-6])
        rates.append([d.isoformat(), rate + 0.001 * math.sin(i / 5)])
        if i % 10 == 5:
            rewards.append([d.isoformat(), 3e-6])
    out = HERE / "curve_pool"
    write(out / "curve_daily.csv",
          ["date", "reserve_0", "reserve_1", "lp_token_supply", "lst_price",
           "crv_reward_per_lp_token"], rows)
    write(out / "staking_rates.csv", ["date", "annualized_rate"], rates)
    write(out / "rewards.csv", ["date", "crv_reward_per_lp_token"], rewards)


def uniswap_pool(days=75, rate=0.04):
    rng = np.random.default_rng(7)
    dates = [START + dt.timedelta(days=i) for i in range(days)]
    prices, events = [], []
    base = int(dt.datetime(2024, 1, 1, tzinfo=dt.timezone.utc).timestamp())
    for i, d in enumerate(dates):
        p = 1.1 * math.exp(rate * i / 365 + 0.002 * math.sin(i / 3))
        prices.append([d.isoformat(), p])
        for k in range(3):
            ts = base + i * 86400 + 3600 * (4 + 6 * k)
            amount = float(np.round(rng.uniform(1, 50), 6))
            pool_price = float(np.round(p * (1 + rng.normal(0, 0.0015)), 9))
            if k % 2 == 0:
                events.append([str(ts), amount, 0.0, 0.0, amount * pool_price * 0.9995,
                               5e5, pool_price])
            else:
                events.append([str(ts), 0.0, amount, amount / pool_price * 0.9995, 0.0,
                               5e5, pool_price])
    out = HERE / "uniswap_pool"
    write(out / "lst_prices.csv", ["date", "lst_price"], prices)
    write(out / "staking_rates.csv", ["date", "annualized_rate"],
          [[d.isoformat(), rate] for d in dates])
    write(out / "uniswap_events.csv",
          ["timestamp_unix", "amount0_in", "amount1_in", "amount0_out", "amount1_out",
           "active_liquidity", "pool_price"], events)


if __name__ == "__main__":
    curve_pool()
    uniswap_pool()
