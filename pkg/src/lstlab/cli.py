"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input or usage error.
Every CSV starts with a ``# config:`` comment holding the resolved options.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .backtest import (
    ClmmBacktestConfig,
    clmm_backtest,
    curve_lp_wealth,
    ingest_directory,
    moving_average_classification,
)
from .backtest.classify import WINDOWS
from .cfmm import (
    CounterAsset,
    CurveFamily,
    FamilyKind,
    FeeMode,
    LstKind,
    PoolState,
    clmm_holdings,
    ClmmPosition,
    cpmm_holdings,
    swap,
    suitability,
)
from .errors import DomainError, IngestionError, InsufficientLiquidityError, SolverError
from .metrics import clmm_required_returns, cpmm_expected_rr, rebase_required_returns
from .montecarlo import estimate_expected_rr, simulate_lp_path
from .price import GbmParams, daily_grid, ideal_path, sample_gbm

EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2
Z_LIMIT = 4.0
FAMILIES = ("cpmm", "clmm", "rebase")


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Round-trip-safe number formatting (17 significant digits)."""
    if isinstance(x, (bool, str)) or x is None:
        return "" if x is None else str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(fmt(v)) if math.isfinite(v) else fmt(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_json_ready(obj), indent=2, sort_keys=True) + "\n"


def write_csv(header: list[str], rows, config: dict) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_json_ready(config), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, output: str | None):
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected a nonempty list of finite numbers, got {text!r}")
    return values


def _config(args, *skip) -> dict:
    return {k: v for k, v in sorted(vars(args).items())
            if k not in ("func",) + skip and v is not None}


# --------------------------------------------------------------------------

def cmd_required_returns(args) -> int:
    families = [f.strip() for f in args.families.split(",")]
    bad = [f for f in families if f not in FAMILIES]
    if bad:
        raise UsageError(f"unknown families: {', '.join(bad)}")
    if args.horizon < 0:
        raise UsageError("--horizon must be >= 0")
    header = ["staking_rate"]
    for f in families:
        header += [f"{f}_rr_lvh", f"{f}_rr_lvs"]
    rows = []
    for r in args.staking_rate:
        row = [r]
        for f in families:
            if f == "cpmm":
                rr = cpmm_expected_rr(r, args.sigma, args.horizon)
            elif f == "clmm":
                rr = clmm_required_returns(r, args.horizon)
            else:
                rr = rebase_required_returns(r, args.horizon)
            row += [rr.rr_lvh, rr.rr_lvs]
        rows.append(row)
    _emit(write_csv(header, rows, _config(args)), args.output)
    return EXIT_OK


def cmd_mc_verify(args) -> int:
    if args.paths < 2:
        raise UsageError("--paths must be >= 2")
    if args.horizon < 0 or args.sigma < 0:
        raise UsageError("--horizon and --sigma must be >= 0")
    lvh, lvs = estimate_expected_rr(args.staking_rate, args.sigma, args.horizon,
                                    args.paths, args.seed)
    passed = abs(lvh.z_score) <= Z_LIMIT and abs(lvs.z_score) <= Z_LIMIT
    report = {"config": _config(args, "output"), "z_limit": Z_LIMIT,
              "rr_lvh": lvh.as_dict(), "rr_lvs": lvs.as_dict(), "pass": passed}
    _emit(dump_json(report), args.output)
    return EXIT_OK if passed else EXIT_VERIFY


def _family(args) -> CurveFamily:
    kind = args.family
    if kind == "cpmm":
        return CurveFamily.constant_product()
    if kind == "clmm":
        if args.lower_price is None or args.upper_price is None:
            raise UsageError("clmm needs --lower-price and --upper-price")
        return CurveFamily.concentrated(args.lower_price, args.upper_price)
    if args.amplification is None:
        raise UsageError(f"{kind} needs --amplification")
    if kind == "stableswap":
        return CurveFamily.stableswap(args.amplification)
    if args.gamma is None:
        raise UsageError("cryptoswap needs --gamma")
    return CurveFamily.cryptoswap(args.amplification, args.gamma)


def cmd_swap_quote(args) -> int:
    family = _family(args)
    pool = PoolState(tuple(args.reserves), family, args.fee_rate, FeeMode(args.fee_mode))
    quote = swap(pool, args.in_index, args.out_index, args.amount_in)
    _emit(dump_json({"config": _config(args, "output"), "quote": quote.as_dict()}), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    family = _family(args)
    if args.days < 1:
        raise UsageError("--days must be >= 1")
    params = GbmParams(args.initial_price, args.staking_rate, args.sigma)
    times = daily_grid(args.days)
    path = ideal_path(params, times) if args.sigma == 0 else sample_gbm(params, times, args.seed)
    p0 = args.initial_price
    if family.kind is FamilyKind.CONCENTRATED_LIQUIDITY:
        reserves = clmm_holdings(ClmmPosition(args.liquidity, family.lower_price,
                                              family.upper_price), p0)
    elif family.kind is FamilyKind.CONSTANT_PRODUCT:
        reserves = cpmm_holdings(args.liquidity, p0)
    else:
        if p0 != 1:
            raise UsageError("Curve pools start balanced; use --initial-price 1")
        reserves = (args.liquidity, args.liquidity)
    pool = PoolState(reserves, family, args.fee_rate, FeeMode(args.fee_mode))
    sim = simulate_lp_path(pool, path, staking_rate=args.staking_rate)
    header = ["t", "price", "lp", "lp_plus_fees", "hold", "lst", "staker",
              "reserve_0", "reserve_1", "spot_price", "arbitrage_profit"]
    rows = zip(sim.times, path.prices, sim.lp, sim.lp_plus_fees, sim.hold, sim.lst, sim.staker,
               sim.reserves[:, 0], sim.reserves[:, 1], sim.spot, sim.arbitrage_profit)
    _emit(write_csv(header, rows, _config(args)), args.output)
    return EXIT_OK


def cmd_suitability(args) -> int:
    entries = suitability(LstKind(args.lst_kind), CounterAsset(args.counter))
    out = sorted(({"family": e.family.value, "rebalancing_required": e.rebalancing_required}
                  for e in entries), key=lambda e: e["family"])
    _emit(dump_json({"lst_kind": args.lst_kind, "counter": args.counter, "amms": out}),
          args.output)
    return EXIT_OK


def _wealth_csv(series, config) -> str:
    cols = series.columns()
    header = ["date"] + list(cols)
    rows = ([d.isoformat()] + [cols[c][i] for c in cols] for i, d in enumerate(series.dates))
    return write_csv(header, rows, config)


def _classification_csv(cl, config) -> str:
    rows = ((d.isoformat(), lab.value, h, s)
            for d, lab, h, s in zip(cl.dates, cl.labels, cl.lp_minus_hold, cl.lp_minus_lst))
    return write_csv(["date", "label", "lp_minus_hold", "lp_minus_lst"], rows,
                     dict(config, window=cl.window))


def _wealth_json(series) -> dict:
    out = {"dates": [d.isoformat() for d in series.dates]}
    out.update({k: v.tolist() for k, v in series.columns().items()})
    return out


def cmd_backtest(args) -> int:
    bundle = ingest_directory(args.input, strict=args.strict)
    # the output directory is where these files live, not part of the run
    config = _config(args, "output")
    if args.pool_kind in ("curve-rebase", "curve-reward"):
        if bundle.curve_daily is None:
            raise IngestionError("curve backtests need curve_daily.csv", args.input)
        dates = [s.date for s in bundle.curve_daily]
        series = curve_lp_wealth(bundle.curve_daily, bundle.rates_for(dates),
                                 rebase=args.pool_kind == "curve-rebase")
        extra = {}
    else:
        if bundle.lst_prices is None:
            raise IngestionError("uniswap backtests need lst_prices.csv", args.input)
        if args.fee_rate is None:
            raise UsageError("uniswap backtests need --fee-rate")
        dates = sorted(bundle.lst_prices)
        result = clmm_backtest(bundle.uniswap_events or [], dates,
                               [bundle.lst_prices[d] for d in dates],
                               ClmmBacktestConfig(args.fee_rate, gas_cost=args.gas_cost,
                                                  recenter_on_exit=args.recenter_on_exit),
                               bundle.rates_for(dates))
        series = result.wealth
        extra = {
            "rebalances": [{"date": r.date.isoformat(), "open_price": r.open_price,
                            "lower_price": r.lower_price, "upper_price": r.upper_price,
                            "liquidity": r.liquidity, "wealth": r.wealth}
                           for r in result.rebalances],
            "fees_token0": result.fees_token0, "fees_token1": result.fees_token1,
            "skipped_events": result.skipped_events,
            "out_of_range_events": result.out_of_range_events,
        }
    windows = [args.window] if args.window else [w for w in WINDOWS if len(series) >= w]
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "wealth.csv").write_text(_wealth_csv(series, config), encoding="utf-8")
    report = {"config": config, "ingest": bundle.summary(), "warnings": bundle.warnings,
              "wealth": _wealth_json(series), "classification": {}}
    report.update(extra)
    for w in windows:
        cl = moving_average_classification(series, w)
        (out / f"classification_{w}d.csv").write_text(_classification_csv(cl, config),
                                                       encoding="utf-8")
        report["classification"][str(w)] = {
            "dates": [d.isoformat() for d in cl.dates],
            "labels": [lab.value for lab in cl.labels],
        }
    (out / "report.json").write_text(dump_json(report), encoding="utf-8")
    return EXIT_OK


# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _add_family_args(p, required=True):
    p.add_argument("--family", required=required,
                   choices=["cpmm", "clmm", "stableswap", "cryptoswap"])
    p.add_argument("--amplification", type=float, help="A for Curve families")
    p.add_argument("--gamma", type=float, help="gamma for cryptoswap")
    p.add_argument("--lower-price", type=float, help="clmm range lower bound")
    p.add_argument("--upper-price", type=float, help="clmm range upper bound")
    p.add_argument("--fee-rate", type=float, default=0.0)
    p.add_argument("--fee-mode", choices=[m.value for m in FeeMode],
                   default=FeeMode.FEES_TO_POOL.value)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lstlab", description=__doc__.splitlines()[0],
                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("required-returns", help="tabulate required fee returns over staking rates",
                       allow_abbrev=False)
    p.add_argument("--staking-rate", type=_float_list, required=True,
                   help="comma-separated annualized rates, e.g. 0,0.02,0.04")
    p.add_argument("--horizon", type=float, default=1.0, help="years")
    p.add_argument("--sigma", type=float, default=0.0, help="volatility for the CPMM expectation")
    p.add_argument("--families", default=",".join(FAMILIES))
    p.add_argument("--output")
    p.set_defaults(func=cmd_required_returns)

    p = sub.add_parser("mc-verify", help="Monte Carlo check of the CPMM expectations",
                       allow_abbrev=False)
    p.add_argument("--staking-rate", type=float, default=0.04)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--output")
    p.set_defaults(func=cmd_mc_verify)

    p = sub.add_parser("simulate", help="arbitrage-aligned LP simulation along a price path",
                       allow_abbrev=False)
    _add_family_args(p)
    p.add_argument("--staking-rate", type=float, default=0.04)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--days", type=int, default=365)
    p.add_argument("--initial-price", type=float, default=1.0)
    p.add_argument("--liquidity", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("backtest", help="replay historical pool data from CSV files",
                       allow_abbrev=False)
    p.add_argument("--input", required=True, help="directory with the input CSV files")
    p.add_argument("--output", required=True, help="directory for results")
    p.add_argument("--pool-kind", required=True,
                   choices=["curve-rebase", "curve-reward", "uniswap"])
    p.add_argument("--window", type=int, choices=WINDOWS,
                   help="only this moving-average window (default: both)")
    p.add_argument("--fee-rate", type=float, help="uniswap pool fee rate")
    p.add_argument("--gas-cost", type=float, default=0.0, help="flat cost per rebalance")
    p.add_argument("--recenter-on-exit", action="store_true")
    p.add_argument("--strict", action="store_true", help="reject out-of-order rows")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("swap-quote", help="quote an exact-input swap", allow_abbrev=False)
    _add_family_args(p)
    p.add_argument("--reserves", type=_float_list, required=True)
    p.add_argument("--in-index", type=int, default=0)
    p.add_argument("--out-index", type=int, default=1)
    p.add_argument("--amount-in", type=float, required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_swap_quote)

    p = sub.add_parser("suitability", help="AMM families suited to an LST pair",
                       allow_abbrev=False)
    p.add_argument("--lst-kind", required=True, choices=[k.value for k in LstKind])
    p.add_argument("--counter", required=True, choices=[c.value for c in CounterAsset])
    p.add_argument("--output")
    p.set_defaults(func=cmd_suitability)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, IngestionError, InsufficientLiquidityError,
            SolverError) as exc:
        print(f"lstlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
