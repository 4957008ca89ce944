"""Window-by-window statistics over an event log.

For every full trading-day window the pipeline emits, in this order:

1. ``price`` - volume-weighted price moments;
2. ``anticipated`` - shifted-price returns for the configured shift;
3. ``actual_sale`` - one row per sale, over the lots that back it;
4. ``actual_investor`` - one row per investor that sold in the window;
5. ``actual_market`` - one row across those investors.

All five families are evaluated with grouped (vectorised) sums so the whole
log is processed in a handful of array passes.  The lot ledger is replayed
over the full log, including any leading partial window, so purchases made
before the first full window still back later sales.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, fields
from typing import Iterator, Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError, TickMomentsError
from .events import EventLog
from .kernel import grouped_ratio_moments, relative_delta, window_bounds
from .ledger import MatchedEvents, MatchPolicy, match_events

logger = logging.getLogger(__name__)

ORACLE_RTOL = 1e-9

FAMILIES = ("price", "anticipated", "actual_sale", "actual_investor", "actual_market")

STAT_COLUMNS = (
    "count",
    "mean",
    "second_moment",
    "volatility",
    "value_volatility",
    "volume_volatility",
    "value_volume_cov",
    "current_value_volatility",
    "past_value_volatility",
    "current_past_cov",
    "original_value_volatility",
    "cov",
)
ID_COLUMNS = ("window", "anchor_time", "family", "investor_id", "sale_time")
ORACLE_COLUMNS = ("oracle_delta_abs", "oracle_delta_rel")
TAIL_COLUMNS = ("status", "message")

# which generic moment feeds which named column, per family
_FIELD_MAP = {
    "price": {
        "value_volatility": "value_volatility",
        "volume_volatility": "base_volatility",
        "value_volume_cov": "cov",
    },
    "anticipated": {
        "current_value_volatility": "value_volatility",
        "past_value_volatility": "base_volatility",
        "current_past_cov": "cov",
    },
}
for _fam in ("actual_sale", "actual_investor", "actual_market"):
    _FIELD_MAP[_fam] = {
        "current_value_volatility": "value_volatility",
        "original_value_volatility": "base_volatility",
        "cov": "cov",
    }


def report_columns(oracle: bool) -> list[str]:
    cols = list(ID_COLUMNS) + list(STAT_COLUMNS)
    if oracle:
        cols += list(ORACLE_COLUMNS)
    return cols + list(TAIL_COLUMNS)


@dataclass(frozen=True)
class Shift:
    """Return shift: ``ticks`` back along the tape or a ``time`` duration."""

    amount: float
    kind: str = "ticks"

    def __post_init__(self):
        if self.kind not in ("ticks", "time"):
            raise ConfigError(f"unknown shift kind {self.kind!r}")
        if not self.amount >= 0 or not math.isfinite(self.amount):
            raise ConfigError(f"shift must be a non-negative number, got {self.amount!r}")
        if self.kind == "ticks" and self.amount != int(self.amount):
            raise ConfigError("tick shift must be an integer")

    @classmethod
    def parse(cls, text) -> "Shift":
        """``"5t"``/``"5ticks"`` is a tick shift, a bare number a time duration."""
        if isinstance(text, Shift):
            return text
        s = str(text).strip().lower()
        m = re.fullmatch(r"(\d+)\s*(t|ticks?)", s)
        if m:
            return cls(int(m.group(1)), "ticks")
        try:
            return cls(float(s), "time")
        except ValueError:
            raise ConfigError(f"cannot parse tau {text!r}; use a duration or '<n>t'") from None

    def __str__(self):
        return f"{int(self.amount)}t" if self.kind == "ticks" else repr(self.amount)


@dataclass(frozen=True)
class PipelineOptions:
    window_size: int = 100
    tau: Shift | str | None = None
    policy: MatchPolicy | str = MatchPolicy.FIFO
    oracle: bool = False

    def __post_init__(self):
        if int(self.window_size) != self.window_size or self.window_size < 1:
            raise ConfigError(f"window size must be a positive integer, got {self.window_size!r}")
        tau = Shift(self.window_size, "ticks") if self.tau is None else Shift.parse(self.tau)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "policy", MatchPolicy.parse(self.policy))


@dataclass(frozen=True)
class ReportRow:
    window: int
    anchor_time: float
    family: str
    investor_id: str | None = None
    sale_time: float | None = None
    count: int | None = None
    mean: float | None = None
    second_moment: float | None = None
    volatility: float | None = None
    value_volatility: float | None = None
    volume_volatility: float | None = None
    value_volume_cov: float | None = None
    current_value_volatility: float | None = None
    past_value_volatility: float | None = None
    current_past_cov: float | None = None
    original_value_volatility: float | None = None
    cov: float | None = None
    status: str = "ok"
    message: str | None = None
    oracle_delta_abs: float | None = None
    oracle_delta_rel: float | None = None


_ROW_FIELDS = [f.name for f in fields(ReportRow)]


def _clean(value):
    if value is None or value is pd.NA:
        return None
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, str) and value == "":
        return None
    return value


class Report(Sequence):
    """Ordered report rows backed by a DataFrame."""

    def __init__(self, frame: pd.DataFrame, oracle: bool, skipped: list | None = None):
        self.frame = frame
        self.oracle = oracle
        self.skipped = skipped or []

    def __len__(self):
        return len(self.frame)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        rec = self.frame.iloc[i].to_dict()
        return ReportRow(**{k: _clean(v) for k, v in rec.items() if k in _ROW_FIELDS})

    def __iter__(self) -> Iterator[ReportRow]:
        cols = [c for c in self.frame.columns if c in _ROW_FIELDS]
        for tup in self.frame[cols].itertuples(index=False, name=None):
            yield ReportRow(**{k: _clean(v) for k, v in zip(cols, tup)})

    @property
    def oracle_failures(self) -> pd.DataFrame:
        return self.frame[self.frame["status"] == "oracle_fail"]

    @property
    def errors(self) -> pd.DataFrame:
        return self.frame[self.frame["status"] == "error"]

    def family(self, name: str) -> pd.DataFrame:
        return self.frame[self.frame["family"] == name]

    def max_oracle_delta(self) -> float:
        if not self.oracle or len(self.frame) == 0:
            return 0.0
        return float(np.nanmax(np.append(self.frame["oracle_delta_rel"].to_numpy(dtype=float), 0.0)))


# ------------------------------------------------------------------ helpers


def _family_frame(family, gm, keep, window, anchor, oracle, investor=None, sale_time=None):
    """Rows for groups selected by boolean/int index ``keep``."""
    data = {
        "window": window,
        "anchor_time": anchor,
        "family": family,
        "investor_id": investor if investor is not None else "",
        "sale_time": sale_time if sale_time is not None else np.nan,
        "count": gm.count[keep],
        "mean": gm.mean[keep],
        "second_moment": gm.second_moment[keep],
        "volatility": gm.volatility[keep],
    }
    for col, src in _FIELD_MAP[family].items():
        data[col] = getattr(gm, src)[keep]
    n = len(data["mean"])
    frame = pd.DataFrame(data, index=range(n))
    if oracle:
        dvol = gm.direct_volatility[keep]
        dmean = gm.direct_mean[keep]
        second = gm.second_moment[keep]
        vol = gm.volatility[keep]
        frame["oracle_delta_abs"] = np.maximum(np.abs(vol - dvol), np.abs(gm.mean[keep] - dmean))
        rel = np.maximum(relative_delta(vol, dvol, second), relative_delta(gm.mean[keep], dmean, second))
        fail = rel > ORACLE_RTOL
        frame["oracle_delta_rel"] = rel
        frame["status"] = np.where(fail, "oracle_fail", "ok")
        frame["message"] = np.where(fail, "decomposed and direct forms disagree", "")
    else:
        frame["status"] = "ok"
        frame["message"] = ""
    return frame


def _error_frame(family, window, anchor, message, investor="", sale_time=np.nan):
    return pd.DataFrame(
        {
            "window": np.atleast_1d(window),
            "anchor_time": np.atleast_1d(anchor),
            "family": family,
            "investor_id": investor,
            "sale_time": sale_time,
            "status": "error",
            "message": message,
        }
    )


def _replay(log: EventLog, policy: MatchPolicy) -> MatchedEvents:
    return match_events(
        log.investor_id.tolist(),
        log.is_buy.tolist(),
        log.time.tolist(),
        log.adjusted_price.tolist(),
        log.volume.tolist(),
        policy,
    )


def _past_prices(log: EventLog, shift: Shift) -> np.ndarray:
    """Past price per tick, NaN where none exists."""
    n = len(log)
    if shift.kind == "ticks":
        idx = np.arange(n) - int(shift.amount)
    else:
        idx = np.searchsorted(log.time, log.time - shift.amount, side="right") - 1
    past = np.full(n, np.nan)
    ok = idx >= 0
    past[ok] = log.adjusted_price[idx[ok]]
    return past


# ------------------------------------------------------------------ pipeline


def run_pipeline(log: EventLog, options: PipelineOptions | None = None, **kwargs) -> Report:
    """Compute every statistic family for every full window of ``log``."""
    if options is None:
        options = PipelineOptions(**kwargs)
    elif kwargs:
        raise TypeError("pass either options or keyword options, not both")
    oracle = options.oracle
    n = len(log)
    bounds = [b for b in window_bounds(n, options.window_size) if b[3]]
    n_win = len(bounds)
    slot = np.full(n, -1, dtype=np.int64)
    for j, (start, stop, _, _) in enumerate(bounds):
        slot[start:stop] = j
    win_index = np.array([b[2] for b in bounds], dtype=np.int64)
    win_anchor = np.array([log.time[b[1] - 1] for b in bounds], dtype=float)
    frames = []

    price = log.adjusted_price
    volume = log.volume
    value = price * volume
    in_full = slot >= 0

    # price moments
    if n_win:
        gm = grouped_ratio_moments(value[in_full], volume[in_full], slot[in_full], n_win, price[in_full], oracle)
        frames.append(_tag(_family_frame("price", gm, slice(None), win_index, win_anchor, oracle), np.arange(n_win), 0))

    # anticipated returns
    if n_win:
        past = _past_prices(log, options.tau)
        missing = in_full & np.isnan(past)
        bad_slots = np.unique(slot[missing])
        good = in_full & ~np.isin(slot, bad_slots)
        if good.any():
            gm = grouped_ratio_moments(
                value[good], past[good] * volume[good], slot[good], n_win, price[good] / past[good], oracle
            )
            ok_slots = np.setdiff1d(np.arange(n_win), bad_slots)
            frames.append(
                _tag(
                    _family_frame("anticipated", gm, ok_slots, win_index[ok_slots], win_anchor[ok_slots], oracle),
                    ok_slots,
                    1,
                )
            )
        for j in bad_slots.tolist():
            first = int(np.flatnonzero(missing & (slot == j))[0])
            msg = f"MissingPastPrice: no past price for the tick at t={float(log.time[first])!r} (tau={options.tau})"
            frames.append(_tag(_error_frame("anticipated", win_index[j], win_anchor[j], msg), [j], 1))

    # actual returns
    rep = _replay(log, options.policy)
    skipped = [(float(log.time[k]), inv, reason) for k, inv, reason in rep.skipped]
    for k, inv, reason in rep.skipped:
        if slot[k] >= 0:
            j = slot[k]
            frames.append(
                _tag(
                    _error_frame("actual_sale", win_index[j], win_anchor[j], reason, inv, float(log.time[k])),
                    [j],
                    2,
                    float(log.time[k]),
                )
            )
    market_slots = np.zeros(0, dtype=np.int64)
    if n_win and rep.sale_event:
        actual, market_slots = _actual_frames(log, rep, slot, win_index, win_anchor, n_win, oracle)
        frames.extend(actual)
    quiet = np.setdiff1d(np.arange(n_win), market_slots)
    if quiet.size:
        # windows without sales still get a market row, flagged empty
        empty = _error_frame("actual_market", win_index[quiet], win_anchor[quiet], "no sales in window")
        empty["status"] = "empty"
        empty["count"] = 0
        frames.append(_tag(empty, quiet, 4))

    cols = report_columns(oracle)
    if frames:
        frame = pd.concat(frames, ignore_index=True)
        frame = frame.sort_values(["_slot", "_fam", "_sub", "_seq"], kind="stable").reset_index(drop=True)
    else:
        frame = pd.DataFrame(columns=cols + ["_slot"])
    frame = frame.reindex(columns=cols)
    frame["investor_id"] = frame["investor_id"].fillna("").astype(str)
    frame["message"] = frame["message"].fillna("").astype(str)
    frame["window"] = frame["window"].astype(np.int64)
    frame["count"] = frame["count"].astype("Int64")
    for s in skipped:
        logger.warning("skipped sale at t=%r for %s: %s", *s)
    return Report(frame, oracle, skipped)


def _tag(frame, slots, fam, sub=0.0, seq=None):
    frame["_slot"] = np.asarray(slots) if np.ndim(slots) else slots
    frame["_fam"] = fam
    frame["_sub"] = sub
    frame["_seq"] = np.arange(len(frame)) if seq is None else seq
    return frame


def _actual_frames(log, rep, slot, win_index, win_anchor, n_win, oracle):
    sale_event = np.asarray(rep.sale_event, dtype=np.int64)
    n_sales = sale_event.size
    leg_sale = np.asarray(rep.leg_sale, dtype=np.int64)
    leg_price = np.asarray(rep.leg_price, dtype=float)
    leg_volume = np.asarray(rep.leg_volume, dtype=float)
    sale_price = log.adjusted_price[sale_event]
    sp = sale_price[leg_sale]
    current = sp * leg_volume
    original = leg_price * leg_volume
    sale_slot = slot[sale_event]
    keep_legs = sale_slot[leg_sale] >= 0
    # level 1: only sales inside full windows
    s1 = grouped_ratio_moments(
        current[keep_legs], original[keep_legs], leg_sale[keep_legs], n_sales, sp[keep_legs] / leg_price[keep_legs], oracle
    )
    sales = np.flatnonzero(sale_slot >= 0)
    if sales.size == 0:
        return [], np.zeros(0, dtype=np.int64)
    frames = []
    investors = log.investor_id[sale_event[sales]]
    f1 = _family_frame(
        "actual_sale",
        s1,
        sales,
        win_index[sale_slot[sales]],
        win_anchor[sale_slot[sales]],
        oracle,
        investor=investors,
        sale_time=log.time[sale_event[sales]],
    )
    frames.append(_tag(f1, sale_slot[sales], 2, log.time[sale_event[sales]], np.arange(sales.size)))

    # level 2: (investor, window) units
    inv_codes, inv_names = pd.factorize(investors, sort=True)
    unit_key = sale_slot[sales].astype(np.int64) * (len(inv_names) + 1) + inv_codes
    unit_codes, unit_keys = pd.factorize(unit_key, sort=True)
    n_units = len(unit_keys)
    s2 = grouped_ratio_moments(
        s1.value_mean[sales], s1.base_mean[sales], unit_codes, n_units, s1.mean[sales], oracle
    )
    unit_slot = (unit_keys // (len(inv_names) + 1)).astype(np.int64)
    unit_inv = np.asarray(inv_names, dtype=object)[unit_keys % (len(inv_names) + 1)]
    f2 = _family_frame(
        "actual_investor",
        s2,
        slice(None),
        win_index[unit_slot],
        win_anchor[unit_slot],
        oracle,
        investor=unit_inv,
    )
    frames.append(_tag(f2, unit_slot, 3))

    # level 3: one row per window with at least one selling investor
    s3 = grouped_ratio_moments(s2.value_mean, s2.base_mean, unit_slot, n_win, s2.mean, oracle)
    live = np.flatnonzero(s3.count > 0)
    f3 = _family_frame("actual_market", s3, live, win_index[live], win_anchor[live], oracle)
    frames.append(_tag(f3, live, 4))
    return frames, live


# ------------------------------------------------------------------ tau sweep


def tau_sweep(log: EventLog, window_size: int, taus: Sequence) -> pd.DataFrame:
    """Anticipated mean and volatility per window for each shift in ``taus``."""
    out = []
    for tau in taus:
        rep = run_anticipated(log, window_size, Shift.parse(tau))
        rep.insert(2, "tau", str(Shift.parse(tau)))
        out.append(rep)
    if not out:
        return pd.DataFrame(columns=["window", "anchor_time", "tau", "count", "mean", "second_moment", "volatility"])
    return pd.concat(out, ignore_index=True)


def run_anticipated(log: EventLog, window_size: int, shift: Shift) -> pd.DataFrame:
    bounds = [b for b in window_bounds(len(log), window_size) if b[3]]
    rows = []
    past = _past_prices(log, shift)
    price = log.adjusted_price
    for start, stop, index, _ in bounds:
        p = past[start:stop]
        if np.isnan(p).any():
            continue
        v = log.volume[start:stop]
        gm = grouped_ratio_moments(price[start:stop] * v, p * v, np.zeros(stop - start, dtype=np.int64), 1)
        rows.append(
            {
                "window": index,
                "anchor_time": float(log.time[stop - 1]),
                "count": stop - start,
                "mean": float(gm.mean[0]),
                "second_moment": float(gm.second_moment[0]),
                "volatility": float(gm.volatility[0]),
            }
        )
    return pd.DataFrame(rows, columns=["window", "anchor_time", "count", "mean", "second_moment", "volatility"])


__all__ = [
    "FAMILIES",
    "ORACLE_RTOL",
    "PipelineOptions",
    "Report",
    "ReportRow",
    "Shift",
    "report_columns",
    "run_pipeline",
    "tau_sweep",
    "TickMomentsError",
]
