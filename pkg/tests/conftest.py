"""Shared fixtures and exact (Fraction) oracles.

The oracles here never touch the package's decomposition code: they
evaluate the direct weighted definitions in rational arithmetic, so any
agreement with the library is an independent check.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")


def exact_ratio_stats(values, bases):
    """Market-based mean and direct volatility of ``x = c / b`` with weights ``b**2``.

    Returns ``(mean, second_moment, volatility)`` as Fractions.
    """
    c = [Fraction(v) for v in values]
    b = [Fraction(v) for v in bases]
    mean = sum(c) / sum(b)
    x = [ci / bi for ci, bi in zip(c, b)]
    b2 = sum(bi * bi for bi in b)
    vol = sum((xi - mean) ** 2 * bi * bi for xi, bi in zip(x, b)) / b2
    return mean, vol + mean * mean, vol


def rel_err(got, want):
    got, want = float(got), float(want)
    if want == 0:
        return abs(got)
    return abs(got - want) / abs(want)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)
