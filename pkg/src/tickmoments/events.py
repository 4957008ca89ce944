"""Event records, the columnar event log and the event CSV format.

Wire format (header required, ``adjust`` optional)::

    time,investor_id,side,price,volume[,adjust]

``time`` is an integer/decimal or an RFC-3339 timestamp (converted to epoch
seconds).  ``side`` is ``B`` or ``S``.  ``price``, ``volume`` and ``adjust``
must be positive.  Rows must be in non-decreasing time order.
"""
from __future__ import annotations

import io
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import ConfigError, OrderingError, ParseError
from .kernel import Side, TradeTick

HEADER = ("time", "investor_id", "side", "price", "volume")


@dataclass(frozen=True)
class EventRecord:
    time: float
    investor_id: str
    side: str
    price: float
    volume: float
    adjust: float = 1.0

    @property
    def adjusted_price(self) -> float:
        return self.price * self.adjust

    def to_tick(self) -> TradeTick:
        return TradeTick.from_trade(self.time, self.investor_id, self.side, self.price, self.volume, self.adjust)


class EventLog(Sequence):
    """Columnar, immutable sequence of ``EventRecord``."""

    def __init__(self, time, investor_id, side, price, volume, adjust=None):
        self.time = np.asarray(time, dtype=float)
        self.investor_id = np.asarray(investor_id, dtype=object)
        side = np.asarray(side)
        if side.dtype == bool:
            self.is_buy = side
        else:
            self.is_buy = np.array([Side.parse(s) is Side.BUY for s in side], dtype=bool)
        self.price = np.asarray(price, dtype=float)
        self.volume = np.asarray(volume, dtype=float)
        n = self.time.size
        self.adjust = np.ones(n) if adjust is None else np.asarray(adjust, dtype=float)
        for name in ("investor_id", "is_buy", "price", "volume", "adjust"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"column {name} has wrong length")

    @classmethod
    def from_records(cls, records) -> "EventLog":
        records = list(records)
        return cls(
            [r.time for r in records],
            [str(r.investor_id) for r in records],
            np.array([Side.parse(r.side) is Side.BUY for r in records], dtype=bool),
            [r.price for r in records],
            [r.volume for r in records],
            [getattr(r, "adjust", 1.0) for r in records],
        )

    def __len__(self):
        return self.time.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return EventLog(
                self.time[i], self.investor_id[i], self.is_buy[i], self.price[i], self.volume[i], self.adjust[i]
            )
        return EventRecord(
            float(self.time[i]),
            str(self.investor_id[i]),
            "B" if self.is_buy[i] else "S",
            float(self.price[i]),
            float(self.volume[i]),
            float(self.adjust[i]),
        )

    def __eq__(self, other):
        if not isinstance(other, EventLog):
            return NotImplemented
        return (
            len(self) == len(other)
            and np.array_equal(self.time, other.time)
            and np.array_equal(self.investor_id, other.investor_id)
            and np.array_equal(self.is_buy, other.is_buy)
            and np.array_equal(self.price, other.price)
            and np.array_equal(self.volume, other.volume)
            and np.array_equal(self.adjust, other.adjust)
        )

    __hash__ = None

    @property
    def adjusted_price(self) -> np.ndarray:
        return self.price * self.adjust

    @property
    def value(self) -> np.ndarray:
        return self.adjusted_price * self.volume

    def ticks(self) -> list[TradeTick]:
        return [r.to_tick() for r in self]

    def to_csv_text(self) -> str:
        cols = list(HEADER)
        with_adjust = bool(np.any(self.adjust != 1.0))
        if with_adjust:
            cols.append("adjust")
        out = [",".join(cols)]
        times = [_fmt_time(t) for t in self.time.tolist()]
        sides = np.where(self.is_buy, "B", "S").tolist()
        prices = [repr(x) for x in self.price.tolist()]
        vols = [repr(x) for x in self.volume.tolist()]
        if with_adjust:
            adj = [repr(x) for x in self.adjust.tolist()]
            rows = zip(times, self.investor_id.tolist(), sides, prices, vols, adj)
        else:
            rows = zip(times, self.investor_id.tolist(), sides, prices, vols)
        out.extend(",".join(r) for r in rows)
        return "\n".join(out) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text())


def _fmt_time(t: float) -> str:
    if t.is_integer() and abs(t) < 2**53:
        return str(int(t))
    return repr(t)


def _first_bad(mask: np.ndarray) -> int:
    return int(np.flatnonzero(mask)[0])


def _to_float(raw: pd.Series) -> np.ndarray:
    """Correctly rounded decimal parse; NaN where the text is not a finite number."""

    def one(text):
        try:
            return float(text)
        except ValueError:
            return math.nan

    values = np.fromiter((one(x) for x in raw.tolist()), dtype=float, count=len(raw))
    values[~np.isfinite(values)] = np.nan
    return values


def _parse_positive(frame, column, required=True):
    raw = frame[column]
    values = _to_float(raw)
    bad = np.isnan(values)
    if bad.any():
        i = _first_bad(bad)
        reason = "missing value" if raw.iloc[i] == "" else f"not a number: {raw.iloc[i]!r}"
        raise ParseError(i + 2, column, reason)
    bad = values <= 0
    if bad.any():
        raise ParseError(_first_bad(bad) + 2, column, f"{column} must be positive")
    return values


def _parse_time(raw: pd.Series) -> np.ndarray:
    """Numeric times pass through; other cells are parsed as RFC-3339 timestamps."""
    values = _to_float(raw)
    text_rows = np.isnan(values)
    if not text_rows.any():
        return values
    text = raw[text_rows].str.replace("Z", "+00:00", regex=False)
    stamps = pd.to_datetime(text, errors="coerce", utc=True, format="ISO8601")
    bad = np.zeros(len(raw), dtype=bool)
    bad[text_rows] = stamps.isna().to_numpy()
    if bad.any():
        i = _first_bad(bad)
        raise ParseError(i + 2, "time", f"not an integer or RFC-3339 timestamp: {raw.iloc[i]!r}")
    values[text_rows] = (stamps - pd.Timestamp(0, tz="UTC")).dt.total_seconds().to_numpy(dtype=float)
    return values


def ingest(source, format: str = "csv") -> EventLog:
    """Read and validate an event CSV into an ``EventLog``.

    ``source`` is a path or a text buffer.  Raises ``ParseError`` with a
    1-based file line number (the header is line 1) and ``OrderingError``
    when time goes backwards.
    """
    if format != "csv":
        raise ConfigError(f"unsupported input format {format!r}")
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as exc:
        msg = str(exc)
        line = None
        if " in line " in msg:
            try:
                line = int(msg.split(" in line ")[1].split(",")[0])
            except ValueError:
                pass
        raise ParseError(line, None, msg) from None
    except pd.errors.EmptyDataError:
        raise ParseError(1, None, "empty file") from None
    cols = [c.strip() for c in frame.columns]
    frame.columns = cols
    if tuple(cols[:5]) != HEADER or len(cols) > 6 or (len(cols) == 6 and cols[5] != "adjust"):
        raise ParseError(1, None, f"header must be {','.join(HEADER)}[,adjust], got {','.join(cols)}")
    if frame.isna().any().any():
        row, col = np.argwhere(frame.isna().to_numpy())[0]
        raise ParseError(int(row) + 2, cols[col], "missing field")
    times = _parse_time(frame["time"])
    inv = frame["investor_id"]
    empty = (inv == "").to_numpy()
    if empty.any():
        raise ParseError(_first_bad(empty) + 2, "investor_id", "empty investor id")
    side = frame["side"].str.upper()
    bad = ~side.isin(["B", "S"]).to_numpy()
    if bad.any():
        i = _first_bad(bad)
        raise ParseError(i + 2, "side", f"side must be B or S, got {frame['side'].iloc[i]!r}")
    price = _parse_positive(frame, "price")
    volume = _parse_positive(frame, "volume")
    adjust = _parse_positive(frame, "adjust") if "adjust" in frame else None
    back = np.diff(times) < 0
    if back.any():
        i = _first_bad(back) + 1
        raise OrderingError(f"time {times[i]!r} precedes previous {times[i - 1]!r}", line=i + 2)
    return EventLog(times, inv.to_numpy(dtype=object), (side == "B").to_numpy(), price, volume, adjust)


def read_events_text(text: str) -> EventLog:
    return ingest(io.StringIO(text))

