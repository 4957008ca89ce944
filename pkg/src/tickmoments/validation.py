"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.utils.validation import check_array

from .errors import DomainError
from .events import HEADER, EventLog


def check_tick_array(X, n_columns: int, positive_from: int = 0) -> np.ndarray:
    """2-d float array with ``n_columns`` columns; columns from ``positive_from`` on must be > 0."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if X.shape[1] != n_columns:
        raise DomainError(f"expected {n_columns} columns, got {X.shape[1]}")
    if np.any(X[:, positive_from:] <= 0):
        raise DomainError("prices and volumes must be positive")
    return X


def check_event_log(X) -> EventLog:
    """Coerce an ``EventLog``, DataFrame or record list to an ``EventLog``."""
    if isinstance(X, EventLog):
        return X
    if isinstance(X, pd.DataFrame):
        missing = [c for c in HEADER if c not in X.columns]
        if missing:
            raise DomainError(f"event frame lacks columns {missing}")
        side = X["side"].astype(str).str.upper().to_numpy()
        if not np.isin(side, ["B", "S"]).all():
            raise DomainError("side must be B or S")
        log = EventLog(
            X["time"].to_numpy(dtype=float),
            X["investor_id"].astype(str).to_numpy(dtype=object),
            side == "B",
            X["price"].to_numpy(dtype=float),
            X["volume"].to_numpy(dtype=float),
            X["adjust"].to_numpy(dtype=float) if "adjust" in X else None,
        )
    else:
        log = EventLog.from_records(X)
    if np.any(log.price <= 0) or np.any(log.volume <= 0) or np.any(log.adjust <= 0):
        raise DomainError("price, volume and adjust must be positive")
    if np.any(np.diff(log.time) < 0):
        raise DomainError("events must be time-ordered")
    return log
