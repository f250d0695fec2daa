"""Moving-window comparison of LP returns against HOLD and LST."""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .wealth import WealthSeries

WINDOWS = (7, 30)


class Label(enum.Enum):
    GREEN = "green"    # LP kept up with HOLD and LST
    YELLOW = "yellow"  # LP kept up with HOLD only
    RED = "red"


@dataclass(frozen=True)
class MaClassification:
    window: int
    dates: list[dt.date]
    labels: list[Label]
    lp_minus_hold: np.ndarray
    lp_minus_lst: np.ndarray


def window_returns(values: np.ndarray, window: int) -> np.ndarray:
    """Geometric return over each trailing window: ``v[i] / v[i - window] - 1``."""
    values = np.asarray(values, dtype=float)
    return values[window:] / values[:-window] - 1.0


def label(lp_return: float, hold_return: float, lst_return: float) -> Label:
    """Ties count as no loss."""
    if lp_return >= hold_return:
        return Label.GREEN if lp_return >= lst_return else Label.YELLOW
    return Label.RED


def moving_average_classification(series: WealthSeries, window: int,
                                  include_rewards: bool = False) -> MaClassification:
    """Label every day that closes a full trailing window.

    Windows overlap (one per day). Returns are geometric over the window, and
    the stored differences are LP return minus HOLD/LST return.
    """
    if window not in WINDOWS:
        raise DomainError(f"window must be one of {WINDOWS}")
    if len(series) < window:
        raise DomainError("series is shorter than the window")
    lp = series.lp_plus_rewards if include_rewards else series.lp
    r_lp = window_returns(lp, window)
    r_hold = window_returns(series.hold, window)
    r_lst = window_returns(series.lst, window)
    labels = [label(a, b, c) for a, b, c in zip(r_lp, r_hold, r_lst)]
    return MaClassification(window, list(series.dates[window:]), labels,
                            r_lp - r_hold, r_lp - r_lst)
