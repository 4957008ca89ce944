from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tickmoments.actual import (
    InvestorDayStats,
    SaleReturnStats,
    cross_investor_stats,
    investor_day_stats,
    level_oracle_delta,
    per_sale_value_averages,
    sale_return_stats,
    sale_stats_from_legs,
    stats_as_arrays,
)
from tickmoments.anticipated import return_stats_from_values
from tickmoments.errors import DomainError
from tickmoments.ledger import LotLedger

from conftest import exact_ratio_stats, rel_err


def example_sale():
    led = LotLedger()
    led.record_purchase("a", 0, 10.0, 2.0)
    led.record_purchase("a", 1, 8.0, 3.0)
    return led.record_sale("a", 2, 12.0, 5.0)


def unit(g, co, cls=SaleReturnStats, **extra):
    """A lower-level stats record with the given mean and average original value."""
    return cls(
        mean=g,
        second_moment=g * g,
        volatility=0.0,
        current_value_volatility=0.0,
        original_value_volatility=0.0,
        cov=0.0,
        current_value_mean=g * co,
        original_value_mean=co,
        direct_volatility=0.0,
        **extra,
    )


class TestSaleLevel:
    def test_example_mean(self):
        s = sale_return_stats(example_sale())
        assert s.mean == pytest.approx(60 / 44, rel=1e-15)
        assert s.leg_count == 2

    def test_example_volatility(self):
        want = (400 * Fraction(72, 440) ** 2 + 576 * Fraction(6, 44) ** 2) / 976
        s = sale_return_stats(example_sale())
        assert rel_err(s.volatility, want) < 1e-12
        assert s.volatility == pytest.approx(0.021948, abs=5e-7)

    def test_single_leg(self):
        s = sale_stats_from_legs([13.0], [10.0])
        assert s.mean == pytest.approx(1.3) and s.volatility == 0.0 and s.leg_count == 1

    def test_zero_original(self):
        with pytest.raises(DomainError):
            sale_stats_from_legs([1.0, 2.0], [0.0, 0.0])

    def test_oracle_delta(self):
        assert level_oracle_delta(sale_return_stats(example_sale())) < 1e-12


class TestPerSaleAverages:
    def test_example(self):
        c1, co1 = per_sale_value_averages(example_sale())
        assert (c1, co1) == (30.0, 22.0)
        assert 2 * c1 == 60.0

    def test_single_leg(self):
        led = LotLedger().record_purchase("a", 0, 10.0, 3.0)
        d = led.record_sale("a", 1, 11.0, 3.0)
        assert per_sale_value_averages(d) == pytest.approx((33.0, 30.0))


class TestInvestorDay:
    def test_one_sale(self):
        s = investor_day_stats([unit(1.2, 5.0)])
        assert s.mean == pytest.approx(1.2) and s.volatility == 0.0 and s.sale_count == 1

    def test_two_sales(self):
        s = investor_day_stats([unit(1.1, 10.0), unit(1.3, 30.0)])
        assert s.mean == pytest.approx(1.25, rel=1e-15)
        want = (Fraction("0.15") ** 2 * 100 + Fraction("0.05") ** 2 * 900) / 1000
        assert want == Fraction("0.0045")
        assert rel_err(s.volatility, want) < 1e-12

    def test_empty(self):
        with pytest.raises(DomainError):
            investor_day_stats([])


class TestCrossInvestor:
    def test_one_investor(self):
        s = cross_investor_stats([unit(1.07, 3.0, InvestorDayStats)])
        assert s.mean == pytest.approx(1.07) and s.volatility == 0.0 and s.investor_count == 1

    def test_equal_weights(self):
        s = cross_investor_stats([unit(1.0, 50.0, InvestorDayStats), unit(1.2, 50.0, InvestorDayStats)])
        assert s.mean == pytest.approx(1.1, rel=1e-15)
        _, _, want = exact_ratio_stats([50.0, 60.0], [50.0, 50.0])
        assert want == Fraction(1, 100)
        assert rel_err(s.volatility, want) < 1e-12

    def test_empty(self):
        with pytest.raises(DomainError):
            cross_investor_stats([])

    def test_stats_as_arrays(self):
        cols = stats_as_arrays([unit(1.0, 2.0), unit(2.0, 3.0)])
        assert cols["mean"].tolist() == [1.0, 2.0]
        assert stats_as_arrays([]) == {}


leg_sets = st.lists(st.tuples(st.floats(0.5, 5.0), st.floats(0.01, 1e4)), min_size=1, max_size=100)


class TestProperties:
    @given(leg_sets)
    def test_sale_dual_formula(self, rows):
        r = np.array([a for a, _ in rows])
        co = np.array([b for _, b in rows])
        s = sale_stats_from_legs(r * co, co, r)
        mean, second, vol = exact_ratio_stats((r * co).tolist(), co.tolist())
        assert rel_err(s.mean, mean) < 1e-12
        assert abs(s.volatility - float(vol)) <= 1e-9 * max(float(vol), 1e-3 * float(second))
        assert s.volatility >= 0
        assert s.second_moment - s.mean**2 == pytest.approx(s.volatility, rel=1e-9, abs=1e-12 * s.second_moment)

    @given(st.lists(leg_sets, min_size=1, max_size=12))
    def test_investor_mean_is_proceeds_over_averaged_cost(self, sales):
        stats = []
        c_avg, co_avg = [], []
        for rows in sales:
            r = np.array([a for a, _ in rows])
            co = np.array([b for _, b in rows])
            stats.append(sale_stats_from_legs(r * co, co, r))
            c_avg.append(Fraction(float(np.sum(r * co))) / len(rows))
            co_avg.append(Fraction(float(np.sum(co))) / len(rows))
        day = investor_day_stats(stats)
        assert rel_err(day.mean, sum(c_avg) / sum(co_avg)) < 1e-9
        assert day.volatility >= 0

    @given(st.lists(st.tuples(st.floats(0.5, 3.0), st.floats(0.1, 1e3)), min_size=1, max_size=50))
    def test_reduction_to_anticipated(self, rows):
        # one single-leg sale per investor: the market level is the plain ratio statistic
        days = [investor_day_stats([sale_stats_from_legs([g * co], [co])]) for g, co in rows]
        market = cross_investor_stats(days)
        c = [g * co for g, co in rows]
        co = [b for _, b in rows]
        ref = return_stats_from_values(c, co)
        assert market.mean == pytest.approx(ref.mean, rel=1e-10)
        assert market.volatility == pytest.approx(ref.volatility, rel=1e-10, abs=1e-12 * ref.second_moment)
