"""Report emission (CSV / JSON) and re-parsing.

Floats are written in the shortest decimal form that parses back to the same
double (never more than 17 significant digits), so a round trip is exact.
Empty cells mean "not applicable" for that family.  JSON is an
array of objects with the same field names; missing values are ``null``.
"""
from __future__ import annotations

import json
import numpy as np
import pandas as pd
import polars as pl

from .errors import ConfigError, TickMomentsError
from .pipeline import ORACLE_COLUMNS, Report, ReportRow, _ROW_FIELDS, report_columns

FORMATS = ("csv", "json")


class ReportIOError(TickMomentsError, OSError):
    pass


def _as_frame(rows) -> pd.DataFrame:
    if isinstance(rows, Report):
        return rows.frame
    rows = list(rows)
    oracle = any(r.oracle_delta_rel is not None for r in rows)
    cols = report_columns(oracle)
    frame = pd.DataFrame([{c: getattr(r, c) for c in cols} for r in rows], columns=cols)
    for c in cols:
        if c in _STRING_COLS:
            frame[c] = frame[c].fillna("").astype(str)
        elif c in _INT_COLS:
            frame[c] = frame[c].astype("Int64")
        else:
            frame[c] = frame[c].astype(float)
    return frame


_STRING_COLS = ("family", "investor_id", "status", "message")
_INT_COLS = ("window", "count")


def _to_polars(frame: pd.DataFrame) -> pl.DataFrame:
    series = []
    for c in frame.columns:
        col = frame[c]
        if c in _STRING_COLS:
            values = [None if v == "" else v for v in col.astype(str).tolist()]
            series.append(pl.Series(c, values, dtype=pl.Utf8))
        elif c in _INT_COLS:
            arr = col.astype("Float64").to_numpy(dtype=float, na_value=np.nan)
            series.append(pl.Series(c, arr).fill_nan(None).cast(pl.Int64))
        else:
            arr = col.to_numpy(dtype=float, na_value=np.nan)
            series.append(pl.Series(c, arr, dtype=pl.Float64).fill_nan(None))
    return pl.DataFrame(series)


def render(rows, format: str = "csv") -> str:
    """Serialise report rows; floats use the shortest exact decimal form."""
    if format not in FORMATS:
        raise ConfigError(f"unknown output format {format!r}; expected csv or json")
    frame = _to_polars(_as_frame(rows))
    if format == "csv":
        return frame.write_csv(null_value="", line_terminator="\n")
    return frame.write_json() + "\n"


def emit(rows, format: str = "csv", path=None) -> str:
    """Write ``rows`` to ``path`` (or return the text when ``path`` is None)."""
    text = render(rows, format)
    if path is None:
        return text
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
    return text


def read_report(path, format: str = "csv") -> list[ReportRow]:
    """Parse an emitted report back into rows."""
    if format not in FORMATS:
        raise ConfigError(f"unknown report format {format!r}")
    try:
        if format == "json":
            with open(path) as fh:
                records = json.load(fh)
        else:
            with open(path) as fh:
                header = fh.readline().strip().split(",")
            overrides = {
                c: (pl.Utf8 if c in _STRING_COLS else pl.Int64 if c in _INT_COLS else pl.Float64)
                for c in header
            }
            records = pl.read_csv(path, schema_overrides=overrides).iter_rows(named=True)
    except OSError as exc:
        raise ReportIOError(f"cannot read report {path}: {exc.strerror or exc}") from exc
    rows = []
    for rec in records:
        clean = {k: (None if v == "" else v) for k, v in rec.items() if k in _ROW_FIELDS}
        rows.append(ReportRow(**clean))
    return rows


__all__ = ["FORMATS", "ORACLE_COLUMNS", "ReportIOError", "emit", "read_report", "render"]
