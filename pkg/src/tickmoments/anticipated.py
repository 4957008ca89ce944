"""Anticipated returns ``p(t_i) / p(t_i - tau)`` weighted by past trade values."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, MissingPastPrice
from .kernel import (
    TradeTick,
    as_series,
    csum,
    direct_volatility,
    ratio_moments,
    disagrees,
)
from .price_stats import CHECK_RTOL, MAX_ORDER


@dataclass(frozen=True)
class ShiftedTradePair:
    current_value: float
    original_value: float
    anticipated_return: float
    shift: float
    time: float = 0.0

    def __post_init__(self):
        if not self.original_value > 0:
            raise DomainError(f"original value must be positive, got {self.original_value!r}")


@dataclass(frozen=True)
class ReturnStats:
    mean: float
    second_moment: float
    volatility: float
    current_value_volatility: float
    past_value_volatility: float
    current_past_cov: float
    count: int = 0


def last_price_lookup(ticks: Sequence[TradeTick]) -> Callable[[float], float]:
    """Price of the latest trade at or before a given time."""
    times = [t.time for t in ticks]
    prices = [t.price for t in ticks]

    def lookup(when: float) -> float:
        i = bisect.bisect_right(times, when) - 1
        if i < 0:
            raise MissingPastPrice(when)
        return prices[i]

    return lookup


def build_shifted_pairs(
    ticks: Iterable[TradeTick],
    shift: float,
    price_lookup: Callable[[float], float] | None = None,
) -> list[ShiftedTradePair]:
    """Pair each tick with the price ``shift`` time units earlier.

    ``price_lookup`` defaults to last-observation lookup over ``ticks``.
    """
    ticks = list(ticks)
    if shift < 0:
        raise DomainError(f"shift must be non-negative, got {shift!r}")
    if price_lookup is None:
        price_lookup = last_price_lookup(ticks)
    pairs = []
    for t in ticks:
        past = price_lookup(t.time - shift)
        if past is None or not past > 0:
            raise MissingPastPrice(t.time - shift)
        pairs.append(
            ShiftedTradePair(
                current_value=t.value,
                original_value=past * t.volume,
                anticipated_return=t.price / past,
                shift=shift,
                time=t.time,
            )
        )
    return pairs


def _arrays(pairs):
    pairs = list(pairs)
    if not pairs:
        raise DomainError("empty pairs")
    c = np.array([p.current_value for p in pairs], dtype=float)
    co = np.array([p.original_value for p in pairs], dtype=float)
    r = np.array([p.anticipated_return for p in pairs], dtype=float)
    return c, co, r


def weight_fn_original_value(pairs, m: int = 1) -> np.ndarray:
    if int(m) != m or not 1 <= m <= MAX_ORDER:
        raise DomainError(f"m must be an integer in [1, {MAX_ORDER}], got {m!r}")
    _, co, _ = _arrays(pairs)
    com = co ** m
    total = csum(com)
    if total == 0:
        raise DomainError("zero total original value")
    return com / total


def mean_return(pairs) -> float:
    """Portfolio return: total current value over total original value."""
    c, co, _ = _arrays(pairs)
    total = csum(co)
    if total == 0:
        raise DomainError("zero total original value")
    return csum(c) / total


def return_second_moment(pairs) -> float:
    return return_stats(pairs).second_moment


def return_volatility(pairs) -> float:
    return return_stats(pairs).volatility


def return_stats(pairs) -> ReturnStats:
    c, co, r = _arrays(pairs)
    return return_stats_from_values(c, co, r)


def return_stats_from_values(current, original, returns=None) -> ReturnStats:
    """Anticipated-return statistics from current and original value columns."""
    c = as_series(current, "current values")
    co = as_series(original, "original values")
    rm = ratio_moments(c, co)
    r = c / co if returns is None else as_series(returns, "returns")
    direct = direct_volatility(r, co, rm.mean)
    if disagrees(rm.volatility, direct, rm.second_moment, CHECK_RTOL):
        raise AssertionError(f"decomposed volatility {rm.volatility!r} != direct {direct!r}")
    return ReturnStats(
        mean=rm.mean,
        second_moment=rm.second_moment,
        volatility=rm.volatility,
        current_value_volatility=rm.value_volatility,
        past_value_volatility=rm.base_volatility,
        current_past_cov=rm.cov,
        count=rm.count,
    )
