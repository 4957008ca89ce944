import numpy as np
import pytest
from hypothesis import given, strategies as st

from tickmoments.errors import ConfigError
from tickmoments.ledger import LotLedger, MatchPolicy
from tickmoments.pipeline import run_pipeline
from tickmoments.sim import (
    STRESS_CASES,
    ConstantPrice,
    Fixed,
    GeometricWalk,
    Lognormal,
    Pareto,
    SimConfig,
    UniformInt,
    VOLUME_QUANTUM,
    generate,
    splitmix64,
    stress_case,
    uniforms,
)

MASK = (1 << 64) - 1


def splitmix_reference(seed, count):
    """Textbook scalar SplitMix64."""
    out, state = [], seed
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return out


class TestGenerator:
    @pytest.mark.parametrize("seed", [0, 1, 1234567, 2**63 + 5])
    def test_splitmix_matches_reference(self, seed):
        assert splitmix64(seed, 50).tolist() == splitmix_reference(seed, 50)

    def test_known_value(self):
        # first SplitMix64 output for seed 0
        assert int(splitmix64(0, 1)[0]) == 0xE220A8397B1DCDAF

    def test_uniform_range(self):
        u = uniforms(7, 10000)
        assert u.min() >= 0 and u.max() < 1
        assert abs(u.mean() - 0.5) < 0.02

    def test_lanes_differ(self):
        assert not np.array_equal(uniforms(7, 10, lane=0), uniforms(7, 10, lane=1))


class TestModels:
    def test_constant(self):
        assert ConstantPrice(10.0).draw(1, 5).tolist() == [10.0] * 5

    @pytest.mark.parametrize("model", [GeometricWalk(0.0, 0.02), Lognormal()])
    def test_prices_positive(self, model):
        assert (model.draw(3, 5000) > 0).all()

    def test_fixed(self):
        assert Fixed(3.0).draw(1, 4).tolist() == [3.0] * 4

    def test_uniform_int(self):
        v = UniformInt(2, 5).draw(1, 2000)
        assert set(v.tolist()) == {2.0, 3.0, 4.0, 5.0}

    def test_pareto_quantized(self):
        v = Pareto(1.5, 1.0).draw(1, 2000)
        assert (v >= 1.0).all()
        assert np.all(v / VOLUME_QUANTUM == np.round(v / VOLUME_QUANTUM))


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"investor_count": 0},
            {"buy_sell_mix": 1.5},
            {"price_model": ConstantPrice(0.0)},
            {"volume_model": UniformInt(5, 2)},
            {"window_size": 0},
            {"seed": -1},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            SimConfig(**kwargs).validate()

    def test_from_mapping(self):
        cfg = SimConfig.from_mapping(
            {"seed": "9", "price_model": "lognormal", "sigma": "0.2", "volume_model": "pareto", "alpha": "2", "window": "50"}
        )
        assert cfg.seed == 9 and cfg.price_model == Lognormal(sigma=0.2) and cfg.window_size == 50
        assert cfg.volume_model == Pareto(alpha=2.0)

    @pytest.mark.parametrize("values", [{"price_model": "brownian"}, {"seed": "abc"}, {"volume_model": "zipf"}])
    def test_from_mapping_errors(self, values):
        with pytest.raises(ConfigError):
            SimConfig.from_mapping(values)


class TestGenerate:
    def test_deterministic(self):
        cfg = SimConfig(seed=42, tick_count=3000, investor_count=7)
        assert generate(cfg).to_csv_text() == generate(cfg).to_csv_text()

    def test_seed_matters(self):
        a = generate(SimConfig(seed=1, tick_count=100))
        b = generate(SimConfig(seed=2, tick_count=100))
        assert a != b

    def test_empty(self):
        assert len(generate(SimConfig(tick_count=0))) == 0

    @given(st.integers(0, 2**64 - 1), st.integers(1, 20), st.floats(0.0, 1.0), st.sampled_from(list(MatchPolicy)))
    def test_feasible(self, seed, q, mix, policy):
        log = generate(SimConfig(seed=seed, investor_count=q, tick_count=400, buy_sell_mix=mix, volume_model=Pareto()))
        LotLedger.replay(log, policy)

    def test_all_buys(self):
        log = generate(SimConfig(seed=5, tick_count=500, buy_sell_mix=1.0))
        assert log.is_buy.all()
        market = run_pipeline(log, window_size=100).family("actual_market")
        assert len(market) == 5
        assert (market["status"] == "empty").all()
        assert market["mean"].isna().all()

    def test_constant_price_returns(self):
        log = generate(SimConfig(seed=11, tick_count=1000, price_model=ConstantPrice(10.0)))
        frame = run_pipeline(log, window_size=100).frame
        rets = frame[(frame.family != "price") & (frame.status == "ok")]
        assert len(rets) > 0
        assert np.abs(rets["mean"] - 1.0).max() <= 1e-12
        assert rets["volatility"].abs().max() <= 1e-12


class TestStress:
    def analyse(self, name):
        log = stress_case(name)
        return run_pipeline(log, window_size=len(log), oracle=True)

    def test_unknown(self):
        with pytest.raises(ConfigError, match="unknown stress case"):
            stress_case("meteor")

    def test_single_lot_single_sale(self):
        sale = self.analyse("single_lot_single_sale").family("actual_sale")
        assert len(sale) == 1
        assert sale["volatility"].iloc[0] == 0.0 and sale["count"].iloc[0] == 1
        assert sale["mean"].iloc[0] == pytest.approx(1.2)

    def test_all_same_investor(self):
        market = self.analyse("all_same_investor").family("actual_market")
        assert market["count"].tolist() == [1]
        assert market["volatility"].iloc[0] == 0.0

    def test_one_sale_per_investor(self):
        rep = self.analyse("one_sale_per_investor")
        inv = rep.family("actual_investor")
        assert (inv["count"] == 1).all()
        assert (inv["volatility"] == 0).all()
        assert rep.family("actual_market")["count"].tolist() == [8]

    def test_many_tiny_lots(self):
        sale = self.analyse("many_tiny_lots").family("actual_sale")
        assert sale["count"].tolist() == [200]

    @pytest.mark.parametrize("name", STRESS_CASES)
    def test_oracle_clean(self, name):
        rep = self.analyse(name)
        assert len(rep.oracle_failures) == 0
        assert rep.max_oracle_delta() <= 1e-9

    def test_degenerate_paths_covered(self):
        """Across the stress set, every M=1, N=1 and Q=1 path is exercised."""
        frames = [self.analyse(n).frame for n in STRESS_CASES]
        seen = {
            fam: any(((f.family == fam) & (f["count"] == 1)).any() for f in frames)
            for fam in ("actual_sale", "actual_investor", "actual_market")
        }
        assert all(seen.values()), seen
