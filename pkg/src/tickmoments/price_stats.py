"""Volume-weighted price moments of a trading-day window."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernel import (
    TradingDayWindow,
    as_series,
    csum,
    direct_volatility,
    ratio_moments,
    disagrees,
)

MAX_ORDER = 4
# decomposed vs direct agreement checked on every evaluation
CHECK_RTOL = 1e-9


@dataclass(frozen=True)
class PriceStats:
    mean: float
    second_moment: float
    volatility: float
    value_volatility: float
    volume_volatility: float
    value_volume_cov: float
    count: int = 0


def _arrays(window):
    """Accept a window or a ``(prices, volumes)`` pair."""
    if isinstance(window, TradingDayWindow):
        if not window.full:
            raise DomainError("partial window is not eligible for statistics")
        return window.prices, window.volumes
    prices, volumes = window
    p = as_series(prices, "prices")
    u = as_series(volumes, "volumes")
    if p.size != u.size:
        raise DomainError(f"length mismatch: {p.size} prices vs {u.size} volumes")
    return p, u


def _check_order(name, k):
    if int(k) != k or not 1 <= k <= MAX_ORDER:
        raise DomainError(f"{name} must be an integer in [1, {MAX_ORDER}], got {k!r}")


def weight_fn_volume(window, m: int = 1) -> np.ndarray:
    """Volume weights ``U_i^m / sum_j U_j^m``."""
    _check_order("m", m)
    _, u = _arrays(window)
    if np.any(u <= 0):
        raise DomainError("volumes must be positive")
    um = u ** m
    total = csum(um)
    if total == 0:
        raise DomainError("zero total volume")
    return um / total


def weighted_price_moment(window, n: int = 1, m: int = 1) -> float:
    """Generalised VWAP: ``sum(p_i^n * w_i(m))``."""
    _check_order("n", n)
    p, _ = _arrays(window)
    w = weight_fn_volume(window, m)
    return csum(p ** n * w)


def _moments(window):
    p, u = _arrays(window)
    if np.any(u <= 0) or np.any(p <= 0):
        raise DomainError("prices and volumes must be positive")
    rm = ratio_moments(p * u, u)
    return p, u, rm


def vwap(window) -> float:
    """``sum(C) / sum(U)``."""
    _, _, rm = _moments(window)
    return rm.mean


def price_second_moment(window) -> float:
    return _moments(window)[2].second_moment


def price_volatility(window) -> float:
    """Decomposed price volatility, checked against the direct weighted form."""
    p, u, rm = _moments(window)
    _assert_agrees(rm.volatility, direct_volatility(p, u, rm.mean), rm.second_moment)
    return rm.volatility


def _assert_agrees(decomposed, direct, scale):
    if disagrees(decomposed, direct, scale, CHECK_RTOL):
        raise AssertionError(
            f"decomposed volatility {decomposed!r} disagrees with direct form {direct!r}"
        )


def price_stats(window) -> PriceStats:
    p, u, rm = _moments(window)
    _assert_agrees(rm.volatility, direct_volatility(p, u, rm.mean), rm.second_moment)
    return PriceStats(
        mean=rm.mean,
        second_moment=rm.second_moment,
        volatility=rm.volatility,
        value_volatility=rm.value_volatility,
        volume_volatility=rm.base_volatility,
        value_volume_cov=rm.cov,
        count=rm.count,
    )
