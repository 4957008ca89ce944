"""scikit-learn style wrappers.

The transformers are stateless apart from input bookkeeping: ``fit`` checks
the input and records ``n_features_in_``; ``transform`` maps a tick table to
one row of statistics per full trading-day window (oldest first), so they
drop into ``Pipeline``/``FunctionTransformer`` style workflows.
"""
from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .kernel import grouped_ratio_moments, window_bounds
from .pipeline import PipelineOptions, Shift, run_pipeline
from .validation import check_event_log, check_tick_array


def _window_groups(n, window_size):
    bounds = [b for b in window_bounds(n, window_size) if b[3]]
    groups = np.full(n, -1, dtype=np.int64)
    for j, (start, stop, _, _) in enumerate(bounds):
        groups[start:stop] = j
    return groups, len(bounds)


class PriceMoments(TransformerMixin, BaseEstimator):
    """VWAP, second moment and volatility of price per window.

    ``X`` has columns ``(price, volume)``.
    """

    feature_names = (
        "mean",
        "second_moment",
        "volatility",
        "value_volatility",
        "volume_volatility",
        "value_volume_cov",
    )

    def __init__(self, window_size=100):
        self.window_size = window_size

    def fit(self, X, y=None):
        check_tick_array(X, 2)
        window_bounds(1, self.window_size)
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_tick_array(X, 2)
        groups, n_win = _window_groups(len(X), self.window_size)
        keep = groups >= 0
        p, u = X[keep, 0], X[keep, 1]
        if n_win == 0:
            return np.empty((0, len(self.feature_names)))
        gm = grouped_ratio_moments(p * u, u, groups[keep], n_win)
        return np.column_stack(
            [gm.mean, gm.second_moment, gm.volatility, gm.value_volatility, gm.base_volatility, gm.cov]
        )

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.feature_names, dtype=object)


class AnticipatedReturnMoments(TransformerMixin, BaseEstimator):
    """Shifted-price return moments per window.

    ``X`` has columns ``(time, price, volume)``.  ``shift`` is ``"<n>t"`` for a
    tick shift or a number for a time shift.  Windows where some tick has
    no past price yield a row of NaN.
    """

    feature_names = (
        "mean",
        "second_moment",
        "volatility",
        "current_value_volatility",
        "past_value_volatility",
        "current_past_cov",
    )

    def __init__(self, window_size=100, shift="1t"):
        self.window_size = window_size
        self.shift = shift

    def fit(self, X, y=None):
        check_tick_array(X, 3, positive_from=1)
        Shift.parse(self.shift)
        window_bounds(1, self.window_size)
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_tick_array(X, 3, positive_from=1)
        shift = Shift.parse(self.shift)
        t, p, u = X[:, 0], X[:, 1], X[:, 2]
        n = len(X)
        if shift.kind == "ticks":
            idx = np.arange(n) - int(shift.amount)
        else:
            idx = np.searchsorted(t, t - shift.amount, side="right") - 1
        past = np.where(idx >= 0, p[np.maximum(idx, 0)], np.nan)
        groups, n_win = _window_groups(n, self.window_size)
        out = np.full((n_win, len(self.feature_names)), np.nan)
        bad = np.unique(groups[(groups >= 0) & np.isnan(past)])
        keep = (groups >= 0) & ~np.isin(groups, bad)
        if keep.any():
            gm = grouped_ratio_moments(p[keep] * u[keep], past[keep] * u[keep], groups[keep], n_win)
            cols = np.column_stack(
                [gm.mean, gm.second_moment, gm.volatility, gm.value_volatility, gm.base_volatility, gm.cov]
            )
            live = gm.count > 0
            out[live] = cols[live]
        return out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.feature_names, dtype=object)


class MarketReturnAnalyzer(TransformerMixin, BaseEstimator):
    """Full report (price, anticipated and actual returns) for an event table.

    ``X`` is an ``EventLog``, a DataFrame with columns
    ``time, investor_id, side, price, volume[, adjust]`` or a list of records.
    ``fit`` stores the report in ``report_``; ``transform`` returns the report
    frame for new events.
    """

    def __init__(self, window_size=100, tau=None, policy="fifo", oracle=False):
        self.window_size = window_size
        self.tau = tau
        self.policy = policy
        self.oracle = oracle

    def _options(self):
        return PipelineOptions(self.window_size, self.tau, self.policy, self.oracle)

    def fit(self, X, y=None):
        log = check_event_log(X)
        self.report_ = run_pipeline(log, self._options())
        self.n_features_in_ = 5
        return self

    def transform(self, X) -> pd.DataFrame:
        check_is_fitted(self, "report_")
        return run_pipeline(check_event_log(X), self._options()).frame

    def fit_transform(self, X, y=None, **fit_params) -> pd.DataFrame:
        return self.fit(X).report_.frame
