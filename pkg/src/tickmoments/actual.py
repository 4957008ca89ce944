"""Actual (realised) return statistics at three aggregation levels.

* a single sale, over the purchase lots that back it;
* one investor over a trading day, over that investor's sales;
* the market over a trading day, over the investors who sold.

Every level reuses the same value/base decomposition: the unit's return is
its current value over its original value, weighted by original value.  The
inputs of each level are the *average* current and original values of the
level below (per-leg averages of a sale, per-sale averages of an investor).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .kernel import as_series, csum, direct_volatility, disagrees, ratio_moments, relative_delta
from .ledger import SaleDecomposition
from .price_stats import CHECK_RTOL

# M * C(t_i;1) must reproduce the sale's current value to this relative tolerance
VALUE_IDENTITY_RTOL = 1e-12


@dataclass(frozen=True)
class _LevelStats:
    mean: float
    second_moment: float
    volatility: float
    current_value_volatility: float
    original_value_volatility: float
    cov: float
    current_value_mean: float
    original_value_mean: float
    direct_volatility: float


@dataclass(frozen=True)
class SaleReturnStats(_LevelStats):
    leg_count: int = 1


@dataclass(frozen=True)
class InvestorDayStats(_LevelStats):
    sale_count: int = 1


@dataclass(frozen=True)
class CrossInvestorStats(_LevelStats):
    investor_count: int = 1


def _level(values, bases, ratios, cls, **extra):
    c = as_series(values, "current values")
    co = as_series(bases, "original values")
    if c.size != co.size:
        raise DomainError(f"length mismatch: {c.size} vs {co.size}")
    if csum(co) == 0:
        raise DomainError("zero total original value")
    rm = ratio_moments(c, co)
    r = c / co if ratios is None else as_series(ratios, "returns")
    direct = direct_volatility(r, co, rm.mean)
    if disagrees(rm.volatility, direct, rm.second_moment, CHECK_RTOL):
        raise AssertionError(
            f"{cls.__name__}: decomposed volatility {rm.volatility!r} != direct {direct!r}"
        )
    return cls(
        mean=rm.mean,
        second_moment=rm.second_moment,
        volatility=rm.volatility,
        current_value_volatility=rm.value_volatility,
        original_value_volatility=rm.base_volatility,
        cov=rm.cov,
        current_value_mean=rm.value_mean,
        original_value_mean=rm.base_mean,
        direct_volatility=direct,
        **extra,
    )


def per_sale_value_averages(decomp: SaleDecomposition) -> tuple[float, float]:
    """Per-leg average current and original value of a sale."""
    if not decomp.legs:
        raise DomainError("sale has no legs")
    m = len(decomp.legs)
    c = decomp.current_values
    total_c = csum(c)
    c1 = total_c / m
    co1 = csum(decomp.original_values) / m
    expected = decomp.sale_price * decomp.sale_volume
    if abs(m * c1 - total_c) > VALUE_IDENTITY_RTOL * abs(total_c):
        raise AssertionError(f"M*C(t;1)={m * c1!r} != C={total_c!r}")
    if abs(total_c - expected) > 1e-9 * abs(expected):
        raise AssertionError(f"leg current values {total_c!r} != sale value {expected!r}")
    return c1, co1


def sale_return_stats(decomp: SaleDecomposition) -> SaleReturnStats:
    """Market-based return moments of one sale over its matched lots."""
    if not decomp.legs:
        raise DomainError("sale has no legs")
    return _level(
        decomp.current_values,
        decomp.original_values,
        decomp.returns,
        SaleReturnStats,
        leg_count=len(decomp.legs),
    )


def sale_stats_from_legs(current, original, returns=None) -> SaleReturnStats:
    c = as_series(current, "current values")
    return _level(c, original, returns, SaleReturnStats, leg_count=int(c.size))


def investor_day_stats(sales: Sequence[SaleReturnStats]) -> InvestorDayStats:
    """Return moments of one investor's sales within a trading day.

    Weights are the sales' average original values, normalised over the
    investor's sales.
    """
    sales = list(sales)
    if not sales:
        raise DomainError("no sales")
    return _level(
        [s.current_value_mean for s in sales],
        [s.original_value_mean for s in sales],
        [s.mean for s in sales],
        InvestorDayStats,
        sale_count=len(sales),
    )


def cross_investor_stats(investors: Sequence[InvestorDayStats]) -> CrossInvestorStats:
    """Return moments across investors active in a trading day.

    Investors without sales never appear here: they carry no original value.
    """
    investors = list(investors)
    if not investors:
        raise DomainError("no investors")
    return _level(
        [q.current_value_mean for q in investors],
        [q.original_value_mean for q in investors],
        [q.mean for q in investors],
        CrossInvestorStats,
        investor_count=len(investors),
    )


def level_oracle_delta(stats: _LevelStats) -> float:
    return float(relative_delta(stats.volatility, stats.direct_volatility, stats.second_moment))


def stats_as_arrays(stats: Sequence[_LevelStats]) -> dict[str, np.ndarray]:
    """Column view of a list of stats, keyed by field name."""
    if not stats:
        return {}
    names = stats[0].__dataclass_fields__.keys()
    return {n: np.array([getattr(s, n) for s in stats]) for n in names}
