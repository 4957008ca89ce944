import io
import json

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, strategies as st

from tickmoments.actual import cross_investor_stats, investor_day_stats, sale_stats_from_legs
from tickmoments.errors import ConfigError
from tickmoments.events import read_events_text
from tickmoments.ledger import MatchPolicy
from tickmoments.pipeline import (
    FAMILIES,
    ORACLE_COLUMNS,
    PipelineOptions,
    Shift,
    report_columns,
    run_pipeline,
    tau_sweep,
)
from tickmoments.price_stats import price_stats
from tickmoments.reporting import emit, read_report, render
from tickmoments.sim import ConstantPrice, SimConfig, generate, stress_case


@pytest.fixture(scope="module")
def sim_log():
    return generate(SimConfig(seed=17, tick_count=3000, investor_count=12))


class TestShift:
    @pytest.mark.parametrize("text,want", [("5t", Shift(5, "ticks")), ("3 ticks", Shift(3, "ticks")), ("2.5", Shift(2.5, "time"))])
    def test_parse(self, text, want):
        assert Shift.parse(text) == want

    @pytest.mark.parametrize("text", ["soon", "-1", "1.5t"])
    def test_bad(self, text):
        with pytest.raises(ConfigError):
            Shift.parse(text)

    def test_default_is_one_window(self):
        assert PipelineOptions(window_size=40).tau == Shift(40, "ticks")

    def test_options_validate(self):
        with pytest.raises(ConfigError):
            PipelineOptions(window_size=0)
        with pytest.raises(ConfigError):
            PipelineOptions(policy="hifo")


class TestPipeline:
    def test_families_present(self, sim_log):
        rep = run_pipeline(sim_log, window_size=500)
        assert set(rep.frame["family"]) == set(FAMILIES)

    def test_partial_window_excluded(self, sim_log):
        log = sim_log[:1234]
        rep = run_pipeline(log, window_size=500)
        assert sorted(set(rep.frame["window"])) == [0, 1]
        assert rep.frame["anchor_time"].min() >= log.time[733]

    def test_price_rows_match_direct_call(self, sim_log):
        rep = run_pipeline(sim_log, window_size=1000)
        price = rep.family("price").sort_values("window", ascending=False)
        for k, row in enumerate(price.itertuples()):
            lo = k * 1000
            s = price_stats((sim_log.adjusted_price[lo:lo + 1000], sim_log.volume[lo:lo + 1000]))
            assert row.mean == pytest.approx(s.mean, rel=1e-13)
            assert row.volatility == pytest.approx(s.volatility, rel=1e-9)

    def test_missing_past_price_is_an_error_row(self, sim_log):
        rep = run_pipeline(sim_log, window_size=1000)
        err = rep.errors
        assert len(err) == 1
        assert err["family"].iloc[0] == "anticipated" and err["window"].iloc[0] == 2
        assert "MissingPastPrice" in err["message"].iloc[0]
        assert len(rep.family("price")) == 3

    def test_volatilities_non_negative(self, sim_log):
        f = run_pipeline(sim_log, window_size=250, policy="prorata").frame
        assert (f["volatility"].dropna() >= 0).all()

    def test_oracle_mode(self, sim_log):
        rep = run_pipeline(sim_log, window_size=300, oracle=True)
        assert all(c in rep.frame.columns for c in ORACLE_COLUMNS)
        assert rep.max_oracle_delta() <= 1e-9
        assert len(rep.oracle_failures) == 0
        plain = run_pipeline(sim_log, window_size=300)
        assert not any(c in plain.frame.columns for c in ORACLE_COLUMNS)

    def test_oversell_is_skipped_not_fatal(self):
        log = read_events_text(
            "time,investor_id,side,price,volume\n0,a,B,10,5\n1,b,B,10,5\n2,a,S,11,9\n3,b,S,12,2\n"
        )
        rep = run_pipeline(log, window_size=4)
        assert len(rep.skipped) == 1 and rep.skipped[0][1] == "a"
        sale = rep.family("actual_sale")
        assert sale["status"].tolist() == ["error", "ok"]
        assert sale["investor_id"].tolist() == ["a", "b"]

    def test_levels_match_library_functions(self):
        log = stress_case("all_same_investor")
        rep = run_pipeline(log, window_size=len(log))
        # FIFO by hand: sale 1 takes 5@10 and 2@12, sale 2 takes 3@12 and 1@11, sale 3 takes 3@11
        s1 = sale_stats_from_legs([13 * 5, 13 * 2], [10 * 5, 12 * 2])
        s2 = sale_stats_from_legs([12.5 * 3, 12.5 * 1], [12 * 3, 11 * 1])
        s3 = sale_stats_from_legs([14 * 3], [11 * 3])
        day = investor_day_stats([s1, s2, s3])
        market = cross_investor_stats([day])
        sales = rep.family("actual_sale")
        assert sales["mean"].tolist() == pytest.approx([s1.mean, s2.mean, s3.mean], rel=1e-14)
        inv = rep.family("actual_investor").iloc[0]
        assert inv["mean"] == pytest.approx(day.mean, rel=1e-14)
        assert inv["volatility"] == pytest.approx(day.volatility, rel=1e-9)
        assert rep.family("actual_market")["mean"].iloc[0] == pytest.approx(market.mean, rel=1e-14)

    def test_deterministic(self, sim_log):
        a = render(run_pipeline(sim_log, window_size=400, oracle=True))
        b = render(run_pipeline(sim_log, window_size=400, oracle=True))
        assert a == b

    @pytest.mark.parametrize("policy", list(MatchPolicy))
    def test_policies_run(self, sim_log, policy):
        rep = run_pipeline(sim_log, window_size=500, policy=policy, oracle=True)
        assert len(rep.oracle_failures) == 0

    def test_constant_price(self):
        log = generate(SimConfig(seed=3, tick_count=1000, price_model=ConstantPrice(10.0)))
        f = run_pipeline(log, window_size=100, tau="7t").frame
        f = f[(f.family != "price") & (f.status == "ok")]
        assert np.abs(f["mean"] - 1).max() <= 1e-12
        assert f["volatility"].abs().max() <= 1e-12

    def test_rows_iterate(self, sim_log):
        rep = run_pipeline(sim_log[:600], window_size=300)
        rows = list(rep)
        assert len(rows) == len(rep.frame)
        assert rows[0].family == "price" and rows[0].investor_id is None

    def test_options_and_kwargs_exclusive(self, sim_log):
        with pytest.raises(TypeError):
            run_pipeline(sim_log, PipelineOptions(), window_size=5)


class TestTauSweep:
    def test_shapes(self, sim_log):
        f = tau_sweep(sim_log, 500, ["1t", "10t", "50.0"])
        assert set(f["tau"]) == {"1t", "10t", "50.0"}
        assert (f["volatility"] >= 0).all()

    def test_zero_shift_is_flat(self, sim_log):
        f = tau_sweep(sim_log, 500, ["0t"])
        assert np.allclose(f["mean"], 1.0, atol=1e-12)
        assert np.allclose(f["volatility"], 0.0, atol=1e-12)


class TestReporting:
    @pytest.mark.parametrize("fmt", ["csv", "json"])
    @pytest.mark.parametrize("oracle", [False, True])
    def test_round_trip(self, sim_log, tmp_path, fmt, oracle):
        rep = run_pipeline(sim_log, window_size=300, oracle=oracle)
        path = tmp_path / f"r.{fmt}"
        emit(rep, fmt, path)
        back = read_report(path, fmt)
        assert back == list(rep)

    def test_empty_csv_is_header_only(self):
        text = render([], "csv")
        assert text.strip() == ",".join(report_columns(False))

    def test_empty_json_is_array(self):
        assert json.loads(render([], "json")) == []

    def test_unknown_format(self, sim_log):
        with pytest.raises(ConfigError):
            render([], "xml")

    def test_io_error_names_path(self, tmp_path):
        bad = tmp_path / "missing" / "r.csv"
        with pytest.raises(OSError, match="missing"):
            emit([], "csv", bad)

    def test_na_cells_blank(self, sim_log):
        text = render(run_pipeline(sim_log[:600], window_size=300), "csv")
        frame = pd.read_csv(io.StringIO(text))
        price = frame[frame.family == "price"]
        assert price["current_value_volatility"].isna().all()
        assert price["value_volatility"].notna().all()

    def test_rows_from_list(self, sim_log):
        rep = run_pipeline(sim_log[:600], window_size=300)
        assert render(list(rep)) == render(rep)
