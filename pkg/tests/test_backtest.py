import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lstlab.backtest import (
    ClmmBacktestConfig,
    CurveSnapshot,
    Label,
    Schema,
    SwapEvent,
    WealthSeries,
    accrue_fee,
    clmm_backtest,
    compounded_rates,
    curve_lp_wealth,
    ingest,
    ingest_directory,
    moving_average_classification,
    window_returns,
)
from lstlab.backtest.classify import label
from lstlab.backtest.ingest import date_ranges, format_ranges, missing_days
from lstlab.errors import DomainError, IngestionError

DAY = dt.timedelta(days=1)
START = dt.date(2024, 1, 1)


def days(n, start=START):
    return [start + i * DAY for i in range(n)]


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


# ---- ingestion ----------------------------------------------------------------

def test_fixture_bundle_counts(fixtures):
    b = ingest_directory(fixtures / "curve_pool")
    assert len(b.curve_daily) == 40
    assert len(b.staking_rates) == 40
    assert b.summary()["curve_daily"] == {"rows": 40, "first": "2024-01-01", "last": "2024-02-09"}
    # the reward file overrides the inline per-day column
    assert b.curve_daily[5].crv_reward_value == 3e-6
    assert b.curve_daily[6].crv_reward_value == 2e-6
    assert b.warnings == []
    u = ingest_directory(fixtures / "uniswap_pool")
    assert len(u.uniswap_events) == 225
    assert len(u.lst_prices) == 75
    assert u.curve_daily is None


def test_empty_file_rejected(tmp_path):
    p = write(tmp_path / "staking_rates.csv", "")
    with pytest.raises(IngestionError, match="empty"):
        ingest({Schema.STAKING_RATES: p})


def test_header_and_value_errors_name_location(tmp_path):
    p = write(tmp_path / "r.csv", "date,rate\n2024-01-01,0.04\n")
    with pytest.raises(IngestionError, match="line 1"):
        ingest({"staking_rates": p})
    p = write(tmp_path / "r.csv", "date,annualized_rate\n2024-01-01,0.04\n2024-01-02,1,000\n")
    with pytest.raises(IngestionError, match="line 3"):
        ingest({"staking_rates": p})
    p = write(tmp_path / "r.csv", "date,annualized_rate\n2024-01-01,0.04\n2024-01-02,4%\n")
    with pytest.raises(IngestionError) as err:
        ingest({"staking_rates": p})
    assert err.value.line == 3 and err.value.column == "annualized_rate"
    p = write(tmp_path / "l.csv", "date,lst_price\n2024-01-01,-1\n")
    with pytest.raises(IngestionError, match="> 0"):
        ingest({"lst_prices": p})
    p = write(tmp_path / "l.csv", "date,lst_price\n2024-13-01,1\n")
    with pytest.raises(IngestionError, match="date"):
        ingest({"lst_prices": p})


def test_out_of_order_sorted_or_strict(tmp_path):
    p = write(tmp_path / "r.csv",
              "date,annualized_rate\n2024-01-02,0.05\n2024-01-01,0.04\n2024-01-03,0.03\n")
    b = ingest({"staking_rates": p})
    assert list(b.staking_rates) == days(3)
    assert len(b.warnings) == 1
    with pytest.raises(IngestionError, match="out of order"):
        ingest({"staking_rates": p}, strict=True)


def test_gaps_and_duplicates_rejected(tmp_path):
    p = write(tmp_path / "r.csv", "date,annualized_rate\n2024-01-01,0.04\n2024-01-04,0.04\n")
    with pytest.raises(IngestionError, match="2024-01-02..2024-01-03"):
        ingest({"staking_rates": p})
    p = write(tmp_path / "r.csv", "date,annualized_rate\n2024-01-01,0.04\n2024-01-01,0.05\n")
    with pytest.raises(IngestionError, match="duplicate"):
        ingest({"staking_rates": p})


def test_rates_must_cover_pool_days(tmp_path, fixtures):
    rates = write(tmp_path / "r.csv", "date,annualized_rate\n2024-01-01,0.04\n")
    with pytest.raises(IngestionError, match="staking rates missing"):
        ingest({"curve_daily": fixtures / "curve_pool" / "curve_daily.csv", "staking_rates": rates})


def test_missing_directory():
    with pytest.raises(IngestionError):
        ingest_directory("/nonexistent/input")


def test_date_range_helpers():
    ds = [START, START + DAY, START + 5 * DAY]
    assert date_ranges(ds) == [(START, START + DAY), (START + 5 * DAY, START + 5 * DAY)]
    assert missing_days(ds) == [START + k * DAY for k in range(2, 5)]
    assert format_ranges(missing_days(ds)) == "2024-01-03..2024-01-05"


# ---- Curve wealth ----------------------------------------------------------------

def snapshots(n, price=lambda i: 1.0, reward=0.0, L=1000.0):
    out = []
    for i, d in enumerate(days(n)):
        p = price(i)
        out.append(CurveSnapshot(d, (L / math.sqrt(p), L * math.sqrt(p)), L, p, reward))
    return out


def test_flat_pool_is_flat():
    w = curve_lp_wealth(snapshots(10))
    for s in w.columns().values():
        assert np.all(s == 1)


def test_growing_price_round_trip():
    w = curve_lp_wealth(snapshots(10, price=lambda i: math.exp(1e-4 * i)))
    assert w.lst[9] == pytest.approx(math.exp(9e-4), rel=1e-13)
    # the CPMM LVS closed form at sigma = 0 with r t = 9e-4
    assert w.lst[9] / w.lp[9] - 1 == pytest.approx(math.expm1(4.5e-4), rel=1e-10)


def test_reward_overlay_is_additive():
    c = 2e-5
    w = curve_lp_wealth(snapshots(15, reward=c))
    tokens = 1.0 / (2000.0 / 1000.0)
    np.testing.assert_allclose(w.lp_plus_rewards - w.lp, tokens * c * np.arange(15), rtol=0,
                               atol=1e-15)
    zero = curve_lp_wealth(snapshots(15))
    np.testing.assert_array_equal(zero.lp_plus_rewards, zero.lp)


def test_rebase_adjusts_hold_and_lst():
    rates = [0.04] * 30
    w = curve_lp_wealth(snapshots(30), rates, rebase=True)
    growth = compounded_rates(rates)
    np.testing.assert_allclose(w.lst, growth, rtol=1e-14)
    np.testing.assert_allclose(w.hold, 0.5 + 0.5 * growth, rtol=1e-14)
    np.testing.assert_array_equal(w.staker, growth)
    with pytest.raises(DomainError):
        curve_lp_wealth(snapshots(30), rebase=True)


def test_series_start_at_one(fixtures):
    b = ingest_directory(fixtures / "curve_pool")
    w = curve_lp_wealth(b.curve_daily, b.rates_for([s.date for s in b.curve_daily]))
    for s in w.columns().values():
        assert s[0] == 1


def test_gap_in_snapshots_rejected():
    s = snapshots(5)
    with pytest.raises(IngestionError, match="missing days"):
        curve_lp_wealth(s[:2] + s[3:])


def test_staker_independent_of_pool(fixtures):
    b = ingest_directory(fixtures / "curve_pool")
    dates = [s.date for s in b.curve_daily]
    rates = b.rates_for(dates)
    w1 = curve_lp_wealth(b.curve_daily, rates)
    w2 = curve_lp_wealth(snapshots(40, price=lambda i: 1 + 0.01 * i), rates)
    np.testing.assert_array_equal(w1.staker, w2.staker)


# ---- Uniswap monthly reset -------------------------------------------------------

def event(day, amount0=0.0, amount1=0.0, active=1000.0, price=1.0, hour=12):
    ts = int(dt.datetime.combine(day, dt.time(hour), dt.timezone.utc).timestamp())
    return SwapEvent(ts, amount0, amount1, 0.0, 0.0, active, price)


def test_reset_bounds_exact():
    ds = days(100)
    prices = [1.0 + 0.001 * i for i in range(100)]
    res = clmm_backtest([], ds, prices, ClmmBacktestConfig(0.0005))
    assert [r.date.day for r in res.rebalances] == [1, 1, 1, 1]
    for r in res.rebalances:
        assert r.lower_price == r.open_price * 0.9975
        assert r.upper_price == r.open_price * 1.0075
    # month opens at the previous day's close
    i = ds.index(dt.date(2024, 2, 1))
    assert res.rebalances[1].open_price == prices[i - 1]


def test_sole_lp_fee_accrual():
    day = START
    cfg = ClmmBacktestConfig(0.003)
    res = clmm_backtest([], [day], [1.0], cfg)
    L = res.rebalances[0].liquidity
    f0, f1 = accrue_fee(event(day, amount0=7.0, active=L), L, 0.003, 0.9975, 1.0075)
    assert f0 == 0.003 * 7.0 and f1 == 0
    assert accrue_fee(event(day, amount1=5.0, active=L, price=2.0), L, 0.003, 0.9975, 1.0075) \
        == (0, 0)
    full = clmm_backtest([event(day, amount0=7.0, active=L)], [day], [1.0], cfg)
    assert full.fees_token0 == pytest.approx(0.021, rel=1e-15)


def test_no_events_matches_position_value():
    r = 0.04
    ds = days(20)
    prices = [math.exp(r * i / 365) for i in range(20)]
    res = clmm_backtest([], ds, prices, ClmmBacktestConfig(0.0005))
    pos = res.rebalances[0]
    assert res.fees_token0 == res.fees_token1 == 0
    # one position all month; value it independently with the range formula
    sa, sb = math.sqrt(pos.lower_price), math.sqrt(pos.upper_price)
    vals = []
    for p in prices:
        sp = math.sqrt(min(max(p, pos.lower_price), pos.upper_price))
        vals.append(pos.liquidity * ((1 / sp - 1 / sb) * p + (sp - sa)))
    np.testing.assert_allclose(res.wealth.lp, np.array(vals) / vals[0], rtol=1e-12)


def test_fixture_backtest_runs(fixtures):
    b = ingest_directory(fixtures / "uniswap_pool")
    ds = sorted(b.lst_prices)
    res = clmm_backtest(b.uniswap_events, ds, [b.lst_prices[d] for d in ds],
                        ClmmBacktestConfig(0.0005), b.rates_for(ds))
    assert len(res.rebalances) == 3
    assert res.fees_token0 > 0 and res.fees_token1 > 0
    assert res.wealth.lp[0] == res.wealth.hold[0] == 1


def test_gas_cost_reduces_wealth():
    ds = days(70)
    prices = [1.0] * 70
    free = clmm_backtest([], ds, prices, ClmmBacktestConfig(0.0005))
    paid = clmm_backtest([], ds, prices, ClmmBacktestConfig(0.0005, gas_cost=0.001))
    assert paid.wealth.lp[-1] == pytest.approx(free.wealth.lp[-1] - 0.002, rel=1e-12)


def test_recenter_on_exit():
    ds = days(20)
    prices = [1.0] * 5 + [1.05] * 15
    held = clmm_backtest([], ds, prices, ClmmBacktestConfig(0.0005))
    moved = clmm_backtest([], ds, prices, ClmmBacktestConfig(0.0005, recenter_on_exit=True))
    assert len(held.rebalances) == 1
    assert len(moved.rebalances) == 2
    assert moved.rebalances[1].open_price == 1.05


# ---- classification -----------------------------------------------------------------

def series(lp, hold, lst, n=40):
    g = np.arange(n)
    return WealthSeries(days(n), np.exp(lp * g), np.exp(lp * g), np.exp(hold * g), np.exp(lst * g))


def test_ties_are_green():
    c = moving_average_classification(series(1e-4, 1e-4, 1e-4), 7)
    assert set(c.labels) == {Label.GREEN}


def test_yellow_and_flip_to_green():
    c = moving_average_classification(series(2e-4, 1e-4, 3e-4), 7)
    assert set(c.labels) == {Label.YELLOW}
    c = moving_average_classification(series(3e-4, 1e-4, 2e-4), 30)
    assert set(c.labels) == {Label.GREEN}
    c = moving_average_classification(series(0.0, 1e-4, 3e-4), 30)
    assert set(c.labels) == {Label.RED}


def test_window_returns_are_geometric():
    v = np.array([1.0, 1.1, 1.21, 1.331])
    np.testing.assert_allclose(window_returns(v, 2), [0.21, 0.21], rtol=1e-14)


def test_window_validation():
    with pytest.raises(DomainError):
        moving_average_classification(series(0, 0, 0), 14)
    with pytest.raises(DomainError):
        moving_average_classification(series(0, 0, 0, n=5), 7)


@settings(max_examples=50)
@given(st.lists(st.floats(-0.01, 0.01), min_size=3, max_size=3), st.integers(0, 31))
def test_label_depends_only_on_own_window(rates, k):
    n = 40
    s = series(*rates, n=n)
    c = moving_average_classification(s, 7)
    # perturb a day outside the window that closes at day 39
    lp = s.lp.copy()
    lp[k] *= 1.5
    s2 = WealthSeries(s.dates, lp, lp, s.hold, s.lst)
    c2 = moving_average_classification(s2, 7)
    assert c2.labels[-1] == c.labels[-1]
    r = [window_returns(x, 7)[-1] for x in (s.lp, s.hold, s.lst)]
    assert c.labels[-1] == label(*r)
