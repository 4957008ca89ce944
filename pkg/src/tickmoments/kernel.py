"""Core tick types, trading-day windows and frequency-based moment estimators.

Every statistic in the package is built from plain frequency moments of
trade values and volumes.  Sums go through compensated summation: ``csum``
(``math.fsum``, exactly rounded) for single series, and ``grouped_sum``
(vectorised Neumaier) when many small groups are reduced at once.

The same algebra covers prices and all return levels.  Each trade, sale
leg, sale or investor contributes a *value* ``c`` and a *base* ``b`` whose
ratio ``x = c / b`` is the quantity of interest (price = value / volume,
return = current value / original value).  ``ratio_moments`` returns the
market-based mean ``sum(c) / sum(b)``, the decomposed second moment and
volatility, and the frequency moments that feed the decomposition.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, DomainError

#: Negative volatilities within this (scale-relative) band are rounding noise.
NEGATIVE_TOLERANCE = 1e-12


class Side(str, enum.Enum):
    BUY = "B"
    SELL = "S"

    @classmethod
    def parse(cls, value: "Side | str") -> "Side":
        if isinstance(value, Side):
            return value
        text = str(value).strip().upper()
        if text in ("B", "BUY"):
            return cls.BUY
        if text in ("S", "SELL"):
            return cls.SELL
        raise DomainError(f"unknown side {value!r}")


@dataclass(frozen=True)
class TradeTick:
    """One market trade.  ``value`` always equals ``price * volume``."""

    time: float
    investor_id: str
    side: Side
    price: float
    volume: float
    value: float = field(init=False)

    def __post_init__(self):
        if not (self.price > 0 and math.isfinite(self.price)):
            raise DomainError(f"price must be positive, got {self.price!r}")
        if not (self.volume > 0 and math.isfinite(self.volume)):
            raise DomainError(f"volume must be positive, got {self.volume!r}")
        object.__setattr__(self, "side", Side.parse(self.side))
        object.__setattr__(self, "value", self.price * self.volume)

    @classmethod
    def from_trade(cls, time, investor_id, side, price, volume, adjust=1.0):
        """Build a tick, applying a multiplicative price adjustment."""
        if not adjust > 0:
            raise DomainError(f"adjust must be positive, got {adjust!r}")
        return cls(time, str(investor_id), Side.parse(side), float(price) * adjust, float(volume))


@dataclass(frozen=True)
class TradingDayWindow:
    """``tick_count`` consecutive ticks; ``index`` 0 is the most recent window."""

    index: int
    anchor_time: float
    tick_count: int
    ticks: tuple[TradeTick, ...]
    full: bool = True

    def __post_init__(self):
        if len(self.ticks) != self.tick_count and self.full:
            raise DomainError("full window must hold exactly tick_count ticks")
        times = [t.time for t in self.ticks]
        if any(b < a for a, b in zip(times, times[1:])):
            raise DomainError("window ticks must be time-ordered")

    @property
    def prices(self) -> np.ndarray:
        return np.array([t.price for t in self.ticks], dtype=float)

    @property
    def volumes(self) -> np.ndarray:
        return np.array([t.volume for t in self.ticks], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([t.value for t in self.ticks], dtype=float)

    @property
    def times(self) -> np.ndarray:
        return np.array([t.time for t in self.ticks], dtype=float)


@dataclass(frozen=True)
class MomentSet:
    count: int
    raw_moments: dict[int, float]
    variance: float


def as_series(series: Any, name: str = "series") -> np.ndarray:
    arr = np.asarray(series, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError(f"empty {name}")
    return arr


def csum(values: Any) -> float:
    """Exactly rounded sum of a 1-d sequence."""
    if isinstance(values, np.ndarray):
        values = values.ravel().tolist()
    return math.fsum(values)


def clamp_volatility(value: float, scale: float = 1.0) -> float:
    """Snap tiny negative rounding noise to zero; reject real negatives.

    The tolerance is ``NEGATIVE_TOLERANCE * max(1, |scale|)`` where ``scale``
    is the magnitude of the second moment the variance was derived from.
    """
    if value >= 0:
        return value
    tol = NEGATIVE_TOLERANCE * max(1.0, abs(scale))
    if value >= -tol:
        return 0.0
    raise DomainError(f"negative volatility {value!r} beyond tolerance {tol!r}")


def clamp_volatility_array(values: np.ndarray, scale: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    tol = NEGATIVE_TOLERANCE * np.maximum(1.0, np.abs(scale))
    bad = values < -tol
    if np.any(bad):
        first = values[bad][0]
        raise DomainError(f"negative volatility {first!r} beyond tolerance")
    return np.where(values < 0, 0.0, values)


def raw_moment(series: Sequence[float], n: int) -> float:
    """``(1/N) * sum(x**n)``."""
    if int(n) != n or n < 1:
        raise DomainError(f"moment order must be a positive integer, got {n!r}")
    x = as_series(series)
    if n == 1:
        return csum(x) / x.size
    return csum(x ** int(n)) / x.size


def variance(series: Sequence[float]) -> float:
    """Frequency variance ``E[x^2] - E[x]^2`` (clamped at zero)."""
    x = as_series(series)
    m1 = raw_moment(x, 1)
    m2 = raw_moment(x, 2)
    return clamp_volatility(m2 - m1 * m1, m2)


def covariance(xs: Sequence[float], ys: Sequence[float]) -> float:
    """``E[xy] - E[x]E[y]``, the covariance of two series."""
    x = as_series(xs, "xs")
    y = as_series(ys, "ys")
    if x.size != y.size:
        raise DomainError(f"length mismatch: {x.size} vs {y.size}")
    return csum(x * y) / x.size - (csum(x) / x.size) * (csum(y) / y.size)


def moment_set(series: Sequence[float], max_order: int = 2) -> MomentSet:
    x = as_series(series)
    if max_order < 2:
        raise DomainError("max_order must be at least 2")
    raw = {n: raw_moment(x, n) for n in range(1, max_order + 1)}
    var = clamp_volatility(raw[2] - raw[1] ** 2, raw[2])
    return MomentSet(count=int(x.size), raw_moments=raw, variance=var)


# --------------------------------------------------------------------- windows


def window_bounds(n_ticks: int, tick_count: int) -> list[tuple[int, int, int, bool]]:
    """``(start, stop, index, full)`` slices, oldest first.

    Full windows are laid out backwards from the last tick; the remainder of
    fewer than ``tick_count`` ticks, if any, is the oldest slice and carries
    index ``-1``.
    """
    if int(tick_count) != tick_count or tick_count < 1:
        raise ConfigError(f"window size must be a positive integer, got {tick_count!r}")
    n_full, rem = divmod(int(n_ticks), int(tick_count))
    out = []
    if rem:
        out.append((0, rem, -1, False))
    for j in range(n_full):
        start = rem + j * tick_count
        out.append((start, start + tick_count, n_full - 1 - j, True))
    return out


def partition_windows(ticks: Sequence[TradeTick], tick_count: int) -> list[TradingDayWindow]:
    """Split ticks into trading-day windows of exactly ``tick_count`` ticks.

    The result is in chronological order; a partial window (``full=False``)
    may lead the list and must not be used for statistics.
    """
    ticks = tuple(ticks)
    times = [t.time for t in ticks]
    if any(b < a for a, b in zip(times, times[1:])):
        raise DomainError("ticks must be time-ordered")
    windows = []
    for start, stop, index, full in window_bounds(len(ticks), tick_count):
        chunk = ticks[start:stop]
        windows.append(
            TradingDayWindow(
                index=index,
                anchor_time=chunk[-1].time,
                tick_count=len(chunk) if not full else tick_count,
                ticks=chunk,
                full=full,
            )
        )
    return windows


# ------------------------------------------------------------- grouped sums


def _group_ranks(groups: np.ndarray):
    order = np.argsort(groups, kind="stable")
    g = groups[order]
    first = np.searchsorted(g, g, side="left")
    rank = np.arange(g.size) - first
    return order, g, rank


def grouped_sum(values: np.ndarray, groups: np.ndarray, n_groups: int) -> np.ndarray:
    """Compensated per-group sums.

    ``values`` is ``(n,)`` or ``(k, n)``; ``groups`` holds integer labels in
    ``[0, n_groups)``.  Returns ``(n_groups,)`` or ``(k, n_groups)``.
    Elements are visited in their original order within each group.
    """
    vals = np.asarray(values, dtype=float)
    squeeze = vals.ndim == 1
    vals = np.atleast_2d(vals)
    groups = np.asarray(groups, dtype=np.int64)
    k, n = vals.shape
    total = np.zeros((k, n_groups))
    if n == 0:
        return total[0] if squeeze else total
    order, g, rank = _group_ranks(groups)
    max_rank = int(rank.max()) + 1
    if max_rank * 3 > n_groups * k:
        # few, long groups: exact fsum per group is cheaper than a long rank loop
        bounds = np.searchsorted(g, np.arange(n_groups + 1))
        sorted_vals = vals[:, order]
        for j in range(n_groups):
            lo, hi = bounds[j], bounds[j + 1]
            if hi > lo:
                for row in range(k):
                    total[row, j] = math.fsum(sorted_vals[row, lo:hi].tolist())
        return total[0] if squeeze else total
    comp = np.zeros((k, n_groups))
    if max_rank * n_groups <= 4 * n:
        # groups of similar length: pad to a dense (rank, group) block so each
        # pass reads a contiguous slice
        block = np.zeros((k, max_rank, n_groups))
        block[:, rank, g] = vals[:, order]
        for r in range(max_rank):
            v = block[:, r, :]
            t = total + v
            comp += np.where(np.abs(total) >= np.abs(v), (total - t) + v, (v - t) + total)
            total = t
        total += comp
        return total[0] if squeeze else total
    by_rank = np.argsort(rank, kind="stable")
    counts = np.bincount(rank, minlength=max_rank)
    edges = np.concatenate(([0], np.cumsum(counts)))
    for r in range(max_rank):
        sel = by_rank[edges[r]:edges[r + 1]]
        idx = order[sel]
        grp = g[sel]
        s = total[:, grp]
        v = vals[:, idx]
        t = s + v
        comp[:, grp] += np.where(np.abs(s) >= np.abs(v), (s - t) + v, (v - t) + s)
        total[:, grp] = t
    total += comp
    return total[0] if squeeze else total


# ------------------------------------------------------------ ratio moments


@dataclass(frozen=True)
class RatioMoments:
    """Market-based moments of ``x = value / base`` weighted by ``base``.

    ``value_moments``/``base_moments`` are the frequency means ``E[c]``,
    ``E[c^2]`` and ``E[b]``, ``E[b^2]``.
    """

    count: int
    mean: float
    second_moment: float
    volatility: float
    value_volatility: float
    base_volatility: float
    cov: float
    value_mean: float
    value_second: float
    base_mean: float
    base_second: float


def _decompose(sum_c, sum_b, c1, c2, b1, b2, cb):
    """Decomposed second moment / volatility from frequency moments.

    Works elementwise on floats or arrays.  Returns unclamped results.
    """
    mean = sum_c / sum_b
    value_var = c2 - c1 * c1
    base_var = b2 - b1 * b1
    cov = cb - c1 * b1
    second = (c2 + 2.0 * mean * mean * base_var - 2.0 * mean * cov) / b2
    vol = (value_var + mean * mean * base_var - 2.0 * mean * cov) / b2
    return mean, second, vol, value_var, base_var, cov


def _shifted_decompose(m0, sum_b, b1, b2, sum_d, d2, db):
    """Decomposition evaluated on values re-centred by a provisional ratio.

    ``d = c - m0 * b``.  The decomposition is exact for any shift ``m0``
    (the ratio moves by ``m0``, the volatility is unchanged), and with ``d``
    close to zero its variance and covariance terms no longer cancel
    catastrophically.  Returns unclamped ``(mean, second_moment, volatility)``.
    """
    n = sum_b / b1
    mean_d, _, vol, _, _, _ = _decompose(sum_d, sum_b, sum_d / n, d2, b1, b2, db)
    mean = m0 + mean_d
    return mean, vol + mean * mean, vol


def ratio_moments(values: Sequence[float], bases: Sequence[float]) -> RatioMoments:
    """Decomposed market-based moments for one aggregation unit."""
    c = as_series(values, "values")
    b = as_series(bases, "bases")
    if c.size != b.size:
        raise DomainError(f"length mismatch: {c.size} vs {b.size}")
    n = c.size
    sum_c = csum(c)
    sum_b = csum(b)
    if sum_b == 0:
        raise DomainError("zero total base (volume or original value)")
    b2 = csum(b * b) / n
    if b2 == 0:
        raise DomainError("zero second moment of base")
    c2 = csum(c * c) / n
    _, _, _, value_var, base_var, cov = _decompose(sum_c, sum_b, sum_c / n, c2, sum_b / n, b2, csum(c * b) / n)
    m0 = sum_c / sum_b
    d = c - m0 * b
    mean, second, vol = _shifted_decompose(m0, sum_b, sum_b / n, b2, csum(d), csum(d * d) / n, csum(d * b) / n)
    return RatioMoments(
        count=n,
        mean=mean,
        second_moment=second,
        volatility=clamp_volatility(vol, second),
        value_volatility=clamp_volatility(value_var, c2),
        base_volatility=clamp_volatility(base_var, b2),
        cov=cov,
        value_mean=sum_c / n,
        value_second=c2,
        base_mean=sum_b / n,
        base_second=b2,
    )


def weighted_average(x: Sequence[float], bases: Sequence[float], n: int = 1, m: int = 1) -> float:
    """``sum(x**n * b**m) / sum(b**m)`` (direct weighted form)."""
    xs = as_series(x, "x")
    bs = as_series(bases, "bases")
    if xs.size != bs.size:
        raise DomainError(f"length mismatch: {xs.size} vs {bs.size}")
    w = bs ** m
    den = csum(w)
    if den == 0:
        raise DomainError("zero weight total")
    return csum(xs ** n * w) / den


def direct_volatility(x: Sequence[float], bases: Sequence[float], center: float) -> float:
    """``sum((x - center)^2 * b^2) / sum(b^2)``: the brute-force volatility."""
    xs = as_series(x, "x")
    bs = as_series(bases, "bases")
    w = bs * bs
    den = csum(w)
    if den == 0:
        raise DomainError("zero weight total")
    d = xs - center
    return csum(d * d * w) / den


@dataclass
class GroupedRatioMoments:
    """Column arrays of ``RatioMoments`` fields, one entry per group."""

    count: np.ndarray
    mean: np.ndarray
    second_moment: np.ndarray
    volatility: np.ndarray
    value_volatility: np.ndarray
    base_volatility: np.ndarray
    cov: np.ndarray
    value_mean: np.ndarray
    value_second: np.ndarray
    base_mean: np.ndarray
    base_second: np.ndarray
    raw_volatility: np.ndarray | None = None
    direct_mean: np.ndarray | None = None
    direct_volatility: np.ndarray | None = None


def grouped_ratio_moments(
    values: np.ndarray,
    bases: np.ndarray,
    groups: np.ndarray,
    n_groups: int,
    ratios: np.ndarray | None = None,
    direct: bool = False,
) -> GroupedRatioMoments:
    """Vectorised ``ratio_moments`` over many groups at once.

    Groups with no members produce NaN.  With ``direct=True`` the direct
    weighted forms are also evaluated (mean with ``b`` weights, volatility
    with ``b^2`` weights) from ``ratios`` (default ``values / bases``).
    """
    c = np.asarray(values, dtype=float)
    b = np.asarray(bases, dtype=float)
    groups = np.asarray(groups, dtype=np.int64)
    counts = np.bincount(groups, minlength=n_groups).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        # provisional ratio; any shift close to the mean keeps d = c - m0*b small
        m0 = np.bincount(groups, c, n_groups) / np.bincount(groups, b, n_groups)
        m0 = np.where(np.isfinite(m0), m0, 0.0)
        d = c - m0[groups] * b
        sums = grouped_sum(np.vstack([b, b * b, d, d * d, d * b]), groups, n_groups)
        sum_b, b1, b2 = sums[0], sums[0] / counts, sums[1] / counts
        if np.any((counts > 0) & ((sum_b == 0) | (b2 == 0))):
            raise DomainError("zero total base in a group")
        sum_d, d2, db = sums[2], sums[3] / counts, sums[4] / counts
        sum_c = sum_d + m0 * sum_b
        c1 = sum_c / counts
        c2 = d2 + 2.0 * m0 * db + m0 * m0 * b2
        cb = db + m0 * b2
        _, _, _, value_var, base_var, cov = _decompose(sum_c, sum_b, c1, c2, b1, b2, cb)
        mean, second, vol = _shifted_decompose(m0, sum_b, b1, b2, sum_d, d2, db)
    live = counts > 0
    out = GroupedRatioMoments(
        count=counts.astype(np.int64),
        mean=mean,
        second_moment=second,
        volatility=np.where(live, vol, np.nan),
        value_volatility=np.where(live, value_var, np.nan),
        base_volatility=np.where(live, base_var, np.nan),
        cov=cov,
        value_mean=c1,
        value_second=c2,
        base_mean=b1,
        base_second=b2,
        raw_volatility=np.where(live, vol, np.nan),
    )
    for name, scale in (("volatility", second), ("value_volatility", c2), ("base_volatility", b2)):
        arr = getattr(out, name)
        arr[live] = clamp_volatility_array(arr[live], scale[live])
    if direct:
        x = c / b if ratios is None else np.asarray(ratios, dtype=float)
        w2 = b * b
        s1 = grouped_sum(np.vstack([x * b, b]), groups, n_groups)
        with np.errstate(divide="ignore", invalid="ignore"):
            dmean = s1[0] / s1[1]
            d = x - dmean[groups]
            s2 = grouped_sum(np.vstack([d * d * w2, w2]), groups, n_groups)
            out.direct_mean = dmean
            out.direct_volatility = s2[0] / s2[1]
    return out


def relative_delta(a, b, scale=None):
    """``|a - b| / max(|a|, |b|)``; zero when both are zero.

    With ``scale`` (the unit's second moment), differences no larger than
    ``NEGATIVE_TOLERANCE * |scale|`` report as zero.  A volatility is a
    difference of two near-equal terms of that size, so a discrepancy below
    the floor is rounding in the inputs rather than a disagreement.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = np.abs(a - b)
    den = np.maximum(np.abs(a), np.abs(b))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(den > 0, diff / den, 0.0)
    if scale is not None:
        floor = NEGATIVE_TOLERANCE * np.abs(np.asarray(scale, dtype=float))
        rel = np.where(diff <= floor, 0.0, rel)
    return rel if rel.ndim else float(rel)


def disagrees(a, b, scale, rtol):
    """True where the floored relative delta of ``a`` and ``b`` exceeds ``rtol``."""
    out = relative_delta(a, b, scale) > rtol
    return out if np.ndim(out) else bool(out)
