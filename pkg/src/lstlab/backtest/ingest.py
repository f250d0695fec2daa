"""CSV ingestion and validation for historical backtests.

Supported schemas (UTF-8, header row required, plain decimals):

``curve_daily``
    date,reserve_0,reserve_1,lp_token_supply,lst_price,crv_reward_per_lp_token
``uniswap_events``
    timestamp_unix,amount0_in,amount1_in,amount0_out,amount1_out,active_liquidity,pool_price
``staking_rates``
    date,annualized_rate
``rewards``
    date,crv_reward_per_lp_token
``lst_prices``
    date,lst_price

Token 0 is the LST, token 1 the underlying; ``pool_price`` and ``lst_price``
are token 1 per token 0.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import IngestionError

log = logging.getLogger(__name__)

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
ONE_DAY = dt.timedelta(days=1)


class Schema(enum.Enum):
    CURVE_DAILY = "curve_daily"
    UNISWAP_EVENTS = "uniswap_events"
    STAKING_RATES = "staking_rates"
    REWARDS = "rewards"
    LST_PRICES = "lst_prices"

    @property
    def filename(self) -> str:
        return f"{self.value}.csv"


# column -> (kind, constraint); kinds: date, int, dec; constraints: any, >=0, >0
_COLUMNS: dict[Schema, list[tuple[str, str, str]]] = {
    Schema.CURVE_DAILY: [
        ("date", "date", "any"),
        ("reserve_0", "dec", ">0"),
        ("reserve_1", "dec", ">0"),
        ("lp_token_supply", "dec", ">0"),
        ("lst_price", "dec", ">0"),
        ("crv_reward_per_lp_token", "dec", ">=0"),
    ],
    Schema.UNISWAP_EVENTS: [
        ("timestamp_unix", "int", ">=0"),
        ("amount0_in", "dec", ">=0"),
        ("amount1_in", "dec", ">=0"),
        ("amount0_out", "dec", ">=0"),
        ("amount1_out", "dec", ">=0"),
        ("active_liquidity", "dec", ">=0"),
        ("pool_price", "dec", ">0"),
    ],
    Schema.STAKING_RATES: [("date", "date", "any"), ("annualized_rate", "dec", "any")],
    Schema.REWARDS: [("date", "date", "any"), ("crv_reward_per_lp_token", "dec", ">=0")],
    Schema.LST_PRICES: [("date", "date", "any"), ("lst_price", "dec", ">0")],
}


@dataclass(frozen=True)
class CurveSnapshot:
    date: dt.date
    reserves: tuple[float, float]
    lp_token_supply: float
    lst_price: float
    crv_reward_value: float = 0.0


@dataclass(frozen=True)
class SwapEvent:
    timestamp: int
    amount0_in: float
    amount1_in: float
    amount0_out: float
    amount1_out: float
    active_liquidity: float
    pool_price: float

    @property
    def date(self) -> dt.date:
        return dt.datetime.fromtimestamp(self.timestamp, dt.timezone.utc).date()


@dataclass
class BacktestBundle:
    curve_daily: list[CurveSnapshot] | None = None
    uniswap_events: list[SwapEvent] | None = None
    staking_rates: dict[dt.date, float] | None = None
    lst_prices: dict[dt.date, float] | None = None
    warnings: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        """Row counts and date coverage per loaded series."""
        out = {}
        if self.curve_daily is not None:
            out["curve_daily"] = _coverage([s.date for s in self.curve_daily])
        if self.uniswap_events is not None:
            out["uniswap_events"] = _coverage([e.date for e in self.uniswap_events])
        if self.staking_rates is not None:
            out["staking_rates"] = _coverage(list(self.staking_rates))
        if self.lst_prices is not None:
            out["lst_prices"] = _coverage(list(self.lst_prices))
        return out

    def rates_for(self, dates: Iterable[dt.date]) -> list[float] | None:
        if self.staking_rates is None:
            return None
        return [self.staking_rates[d] for d in dates]


def _coverage(dates: list[dt.date]) -> dict:
    if not dates:
        return {"rows": 0, "first": None, "last": None}
    return {"rows": len(dates), "first": min(dates).isoformat(), "last": max(dates).isoformat()}


def date_ranges(dates: Iterable[dt.date]) -> list[tuple[dt.date, dt.date]]:
    """Collapse dates into inclusive runs of consecutive days."""
    runs: list[tuple[dt.date, dt.date]] = []
    for d in sorted(set(dates)):
        if runs and d - runs[-1][1] == ONE_DAY:
            runs[-1] = (runs[-1][0], d)
        else:
            runs.append((d, d))
    return runs


def format_ranges(dates: Iterable[dt.date]) -> str:
    parts = []
    for a, b in date_ranges(dates):
        parts.append(a.isoformat() if a == b else f"{a.isoformat()}..{b.isoformat()}")
    return ", ".join(parts)


def missing_days(dates: Iterable[dt.date]) -> list[dt.date]:
    ds = sorted(set(dates))
    out = []
    for a, b in zip(ds, ds[1:]):
        d = a + ONE_DAY
        while d < b:
            out.append(d)
            d += ONE_DAY
    return out


def _parse(value: str, kind: str, constraint: str, path, lineno, column):
    text = value.strip()
    if kind == "date":
        try:
            return dt.date.fromisoformat(text)
        except ValueError:
            raise IngestionError(f"invalid ISO-8601 date {value!r}", path, lineno, column) from None
    if kind == "int":
        if not re.fullmatch(r"[+-]?\d+", text):
            raise IngestionError(f"invalid integer {value!r}", path, lineno, column)
        number = int(text)
    else:
        if not _DECIMAL.match(text):
            raise IngestionError(f"invalid decimal {value!r}", path, lineno, column)
        number = float(text)
    if constraint == ">0" and not number > 0:
        raise IngestionError(f"value must be > 0, got {value!r}", path, lineno, column)
    if constraint == ">=0" and not number >= 0:
        raise IngestionError(f"value must be >= 0, got {value!r}", path, lineno, column)
    return number


def read_rows(path: str | Path, schema: Schema) -> list[tuple[int, list]]:
    """Parse and type-check one CSV; returns ``(line number, values)`` pairs."""
    path = Path(path)
    columns = _COLUMNS[schema]
    expected = [c[0] for c in columns]
    try:
        fh = path.open(newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise IngestionError(f"cannot open file ({exc.strerror})", str(path)) from None
    rows = []
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader, None)
            if header is None:
                raise IngestionError("file is empty, header row required", str(path), 1)
            header = [h.strip() for h in header]
            if header != expected:
                raise IngestionError(f"expected header {','.join(expected)}, got {','.join(header)}",
                                     str(path), 1)
            for row in reader:
                lineno = reader.line_num
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(columns):
                    raise IngestionError(f"expected {len(columns)} fields, got {len(row)}",
                                         str(path), lineno)
                rows.append((lineno, [_parse(v, kind, cons, str(path), lineno, name)
                                      for v, (name, kind, cons) in zip(row, columns)]))
        except UnicodeDecodeError:
            raise IngestionError("file is not valid UTF-8", str(path)) from None
    if not rows:
        raise IngestionError("file has no data rows", str(path), 2)
    return rows


def _order(rows, key, path, strict: bool, warnings: list[str], unique: bool = True):
    keys = [key(r) for _, r in rows]
    if any(b < a for a, b in zip(keys, keys[1:])):
        if strict:
            first = next(i for i, (a, b) in enumerate(zip(keys, keys[1:])) if b < a)
            raise IngestionError("rows are out of order", str(path), rows[first + 1][0])
        msg = f"{path}: rows out of order, sorted"
        log.warning(msg)
        warnings.append(msg)
        rows = sorted(rows, key=lambda lr: key(lr[1]))
    if unique:
        seen = set()
        for lineno, r in rows:
            if key(r) in seen:
                raise IngestionError(f"duplicate date {key(r).isoformat()}", str(path), lineno)
            seen.add(key(r))
    return rows


def _daily(rows, path, strict, warnings) -> list[tuple[int, list]]:
    rows = _order(rows, lambda r: r[0], path, strict, warnings)
    gaps = missing_days(r[0] for _, r in rows)
    if gaps:
        raise IngestionError(f"missing days: {format_ranges(gaps)}", str(path))
    return rows


def ingest(paths: Mapping[Schema | str, str | Path], strict: bool = False) -> BacktestBundle:
    """Load, validate and align a set of backtest inputs.

    ``paths`` maps schemas (or their names) to files. Out-of-order rows are
    sorted with a warning, or rejected when ``strict``.
    """
    files = {Schema(k): Path(v) for k, v in paths.items()}
    bundle = BacktestBundle()
    w = bundle.warnings

    if Schema.STAKING_RATES in files:
        p = files[Schema.STAKING_RATES]
        rows = _daily(read_rows(p, Schema.STAKING_RATES), p, strict, w)
        bundle.staking_rates = {r[0]: r[1] for _, r in rows}

    rewards = None
    if Schema.REWARDS in files:
        p = files[Schema.REWARDS]
        rows = _order(read_rows(p, Schema.REWARDS), lambda r: r[0], p, strict, w)
        rewards = {r[0]: r[1] for _, r in rows}

    if Schema.CURVE_DAILY in files:
        p = files[Schema.CURVE_DAILY]
        rows = _daily(read_rows(p, Schema.CURVE_DAILY), p, strict, w)
        dates = [r[0] for _, r in rows]
        if rewards is not None:
            extra = set(rewards) - set(dates)
            if extra:
                raise IngestionError(f"reward dates outside the pool series: {format_ranges(extra)}",
                                     str(files[Schema.REWARDS]))
        bundle.curve_daily = [
            CurveSnapshot(r[0], (r[1], r[2]), r[3], r[4],
                          rewards.get(r[0], r[5]) if rewards is not None else r[5])
            for _, r in rows
        ]
        _check_rates_cover(bundle, dates, files)
    elif rewards is not None:
        raise IngestionError("reward series given without a curve_daily file",
                             str(files[Schema.REWARDS]))

    if Schema.LST_PRICES in files:
        p = files[Schema.LST_PRICES]
        rows = _daily(read_rows(p, Schema.LST_PRICES), p, strict, w)
        bundle.lst_prices = {r[0]: r[1] for _, r in rows}
        _check_rates_cover(bundle, list(bundle.lst_prices), files)

    if Schema.UNISWAP_EVENTS in files:
        p = files[Schema.UNISWAP_EVENTS]
        rows = _order(read_rows(p, Schema.UNISWAP_EVENTS), lambda r: r[0], p, strict, w,
                      unique=False)
        bundle.uniswap_events = [SwapEvent(*r) for _, r in rows]
        if bundle.lst_prices is not None and bundle.uniswap_events:
            outside = {e.date for e in bundle.uniswap_events} - set(bundle.lst_prices)
            if outside:
                raise IngestionError(f"events on days without an LST price: {format_ranges(outside)}",
                                     str(p))
    return bundle


def _check_rates_cover(bundle: BacktestBundle, dates, files):
    if bundle.staking_rates is None:
        return
    missing = set(dates) - set(bundle.staking_rates)
    if missing:
        raise IngestionError(f"staking rates missing for {format_ranges(missing)}",
                             str(files[Schema.STAKING_RATES]))


def ingest_directory(directory: str | Path, strict: bool = False) -> BacktestBundle:
    """Ingest whichever conventionally named files exist in ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestionError("input directory does not exist", str(directory))
    found = {s: directory / s.filename for s in Schema if (directory / s.filename).exists()}
    if not found:
        raise IngestionError("no recognised input files "
                             f"({', '.join(s.filename for s in Schema)})", str(directory))
    return ingest(found, strict=strict)
