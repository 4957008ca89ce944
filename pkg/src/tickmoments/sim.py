"""Deterministic synthetic event logs.

Randomness comes from SplitMix64: output ``k`` of a stream seeded with ``s``
is ``mix(s + (k + 1) * 0x9E3779B97F4A7C15 mod 2**64)``.  Because each output
depends only on its index, whole blocks are generated with vectorised
``uint64`` arithmetic and the same logs can be reproduced in any language.

Derived draws:

* uniform ``u = (x >> 11) * 2**-53`` in ``[0, 1)``;
* standard normal by Box-Muller, ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``;
* Pareto by inversion, ``min * (1 - u) ** (-1 / alpha)``, rounded up to a
  multiple of 1/256 share so ledger arithmetic stays exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Mapping

import numpy as np

from .errors import ConfigError
from .events import EventLog

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
VOLUME_QUANTUM = 1.0 / 256.0

# independent lanes of the uniform stream
_LANE_INVESTOR, _LANE_SIDE, _LANE_NORMAL_A, _LANE_NORMAL_B, _LANE_VOLUME = range(5)


def splitmix64(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Outputs ``offset .. offset + count - 1`` of the SplitMix64 stream."""
    k = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK) + k * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def uniforms(seed: int, count: int, lane: int = 0) -> np.ndarray:
    """Uniform doubles in ``[0, 1)`` from lane ``lane`` (lanes never overlap for count < 2**40)."""
    x = splitmix64(seed, count, offset=lane << 40)
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def normals(seed: int, count: int) -> np.ndarray:
    u1 = uniforms(seed, count, _LANE_NORMAL_A)
    u2 = uniforms(seed, count, _LANE_NORMAL_B)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


# ------------------------------------------------------------------ models


@dataclass(frozen=True)
class ConstantPrice:
    price: float = 10.0

    def draw(self, seed, n):
        return np.full(n, float(self.price))


@dataclass(frozen=True)
class GeometricWalk:
    drift: float = 0.0
    step_vol: float = 0.01
    initial: float = 100.0

    def draw(self, seed, n):
        steps = self.drift + self.step_vol * normals(seed, n)
        steps[0] = 0.0
        return self.initial * np.exp(np.cumsum(steps))


@dataclass(frozen=True)
class Lognormal:
    mu: float = np.log(100.0)
    sigma: float = 0.1

    def draw(self, seed, n):
        return np.exp(self.mu + self.sigma * normals(seed, n))


@dataclass(frozen=True)
class Fixed:
    volume: float = 1.0

    def draw(self, seed, n):
        return np.full(n, float(self.volume))


@dataclass(frozen=True)
class UniformInt:
    lo: int = 1
    hi: int = 100

    def draw(self, seed, n):
        u = uniforms(seed, n, _LANE_VOLUME)
        return self.lo + np.floor(u * (self.hi - self.lo + 1))


@dataclass(frozen=True)
class Pareto:
    alpha: float = 1.5
    minimum: float = 1.0

    def draw(self, seed, n):
        u = uniforms(seed, n, _LANE_VOLUME)
        v = self.minimum * (1.0 - u) ** (-1.0 / self.alpha)
        return np.ceil(v / VOLUME_QUANTUM) * VOLUME_QUANTUM


PRICE_MODELS = {"constant": ConstantPrice, "geometric_walk": GeometricWalk, "lognormal": Lognormal}
VOLUME_MODELS = {"fixed": Fixed, "uniform_int": UniformInt, "pareto": Pareto}


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    investor_count: int = 10
    tick_count: int = 1000
    price_model: object = field(default_factory=GeometricWalk)
    volume_model: object = field(default_factory=lambda: UniformInt(1, 100))
    buy_sell_mix: float = 0.5
    window_size: int = 100

    def validate(self) -> "SimConfig":
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.investor_count < 1:
            raise ConfigError("investor_count must be at least 1")
        if self.tick_count < 0:
            raise ConfigError("tick_count must be non-negative")
        if self.window_size < 1:
            raise ConfigError("window_size must be at least 1")
        if not 0.0 <= self.buy_sell_mix <= 1.0:
            raise ConfigError("buy_sell_mix must be a probability")
        pm, vm = self.price_model, self.volume_model
        if isinstance(pm, ConstantPrice) and not pm.price > 0:
            raise ConfigError("constant price must be positive")
        if isinstance(pm, GeometricWalk) and not (pm.step_vol >= 0 and pm.initial > 0):
            raise ConfigError("geometric walk needs step_vol >= 0 and initial > 0")
        if isinstance(pm, Lognormal) and not pm.sigma >= 0:
            raise ConfigError("lognormal sigma must be non-negative")
        if isinstance(vm, Fixed) and not vm.volume > 0:
            raise ConfigError("fixed volume must be positive")
        if isinstance(vm, UniformInt) and not 1 <= vm.lo <= vm.hi:
            raise ConfigError("uniform_int needs 1 <= lo <= hi")
        if isinstance(vm, Pareto) and not (vm.alpha > 0 and vm.minimum > 0):
            raise ConfigError("pareto needs alpha > 0 and minimum > 0")
        if not isinstance(pm, tuple(PRICE_MODELS.values())):
            raise ConfigError(f"unknown price model {pm!r}")
        if not isinstance(vm, tuple(VOLUME_MODELS.values())):
            raise ConfigError(f"unknown volume model {vm!r}")
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "SimConfig":
        """Build from flat ``key = value`` settings.

        Recognised keys: ``seed``, ``investor_count``, ``tick_count``,
        ``buy_sell_mix``, ``window``/``window_size``, ``price_model``
        (``constant|geometric_walk|lognormal``) with its parameters
        (``price``, ``drift``, ``step_vol``, ``initial``, ``mu``, ``sigma``) and
        ``volume_model`` (``fixed|uniform_int|pareto``) with ``volume``, ``lo``,
        ``hi``, ``alpha``, ``minimum``.  Unrelated keys are ignored.
        """
        try:
            pm_name = values.get("price_model", "geometric_walk")
            vm_name = values.get("volume_model", "uniform_int")
            if pm_name not in PRICE_MODELS:
                raise ConfigError(f"unknown price_model {pm_name!r}")
            if vm_name not in VOLUME_MODELS:
                raise ConfigError(f"unknown volume_model {vm_name!r}")
            pm_cls, vm_cls = PRICE_MODELS[pm_name], VOLUME_MODELS[vm_name]
            pm = pm_cls(**{f.name: float(values[f.name]) for f in fields(pm_cls) if f.name in values})
            vm_kwargs = {}
            for f in fields(vm_cls):
                if f.name in values:
                    vm_kwargs[f.name] = int(values[f.name]) if vm_cls is UniformInt else float(values[f.name])
            vm = vm_cls(**vm_kwargs)
            window = values.get("window_size", values.get("window", 100))
            cfg = cls(
                seed=int(values.get("seed", 0)),
                investor_count=int(values.get("investor_count", 10)),
                tick_count=int(values.get("tick_count", 1000)),
                price_model=pm,
                volume_model=vm,
                buy_sell_mix=float(values.get("buy_sell_mix", 0.5)),
                window_size=int(window),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid simulation setting: {exc}") from None
        return cfg.validate()


def investor_name(q: int) -> str:
    return f"inv{q:05d}"


def generate(config: SimConfig) -> EventLog:
    """Seeded event log; infeasible sells are turned into buys."""
    config.validate()
    n, seed = config.tick_count, config.seed
    if n == 0:
        return EventLog([], [], np.zeros(0, dtype=bool), [], [])
    inv = np.minimum(
        (uniforms(seed, n, _LANE_INVESTOR) * config.investor_count).astype(np.int64),
        config.investor_count - 1,
    )
    want_buy = uniforms(seed, n, _LANE_SIDE) < config.buy_sell_mix
    price = config.price_model.draw(seed, n)
    volume = config.volume_model.draw(seed, n)

    held = [0.0] * config.investor_count
    is_buy = want_buy.tolist()
    vols = volume.tolist()
    for k, q in enumerate(inv.tolist()):
        if is_buy[k]:
            held[q] += vols[k]
        elif held[q] >= vols[k]:
            held[q] -= vols[k]
        else:
            is_buy[k] = True
            held[q] += vols[k]
    names = np.array([investor_name(q) for q in range(config.investor_count)], dtype=object)
    return EventLog(np.arange(n, dtype=float), names[inv], np.array(is_buy, dtype=bool), price, volume)


# ------------------------------------------------------------ stress cases

STRESS_CASES = (
    "single_lot_single_sale",
    "one_giant_lot",
    "many_tiny_lots",
    "all_same_investor",
    "one_sale_per_investor",
)


def _log(rows):
    t, who, side, p, v = zip(*rows)
    return EventLog(np.asarray(t, dtype=float), list(who), np.array([s == "B" for s in side]), p, v)


def stress_case(name: str) -> EventLog:
    """Named fixtures for degenerate branches.

    Each fixture is meant to be analysed as one window spanning the log
    (``window = len(log)``).
    """
    if name == "single_lot_single_sale":
        return _log([(0, "a", "B", 10.0, 10.0), (1, "a", "S", 12.0, 10.0)])
    if name == "one_giant_lot":
        rows = [(0, "a", "B", 10.0, 1000.0)]
        rows += [(k, "a", "S", 10.0 + 0.5 * k, 7.0) for k in range(1, 11)]
        return _log(rows)
    if name == "many_tiny_lots":
        rows = [(k, "a", "B", 10.0 + (k % 17) * 0.25, 1.0) for k in range(200)]
        rows.append((200, "a", "S", 14.0, 200.0))
        return _log(rows)
    if name == "all_same_investor":
        return _log(
            [
                (0, "a", "B", 10.0, 5.0),
                (1, "a", "B", 12.0, 5.0),
                (2, "a", "S", 13.0, 7.0),
                (3, "a", "B", 11.0, 4.0),
                (4, "a", "S", 12.5, 4.0),
                (5, "a", "S", 14.0, 3.0),
            ]
        )
    if name == "one_sale_per_investor":
        rows = []
        for q in range(8):
            rows.append((q, investor_name(q), "B", 10.0 + q, 10.0 + 2 * q))
        for q in range(8):
            rows.append((8 + q, investor_name(q), "S", 12.0 + 0.75 * q, 3.0 + q))
        return _log(rows)
    raise ConfigError(f"unknown stress case {name!r}; expected one of {', '.join(STRESS_CASES)}")
