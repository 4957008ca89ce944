"""Per-investor purchase-lot ledger.

Each sale is decomposed into legs drawn from earlier purchase lots.  The
matching policy (FIFO, LIFO or pro-rata across all open lots) decides which
lots back a sale; the actual return of a leg is the sale price over the
lot's purchase price.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigError, DomainError, InsufficientInventory, OrderingError

# a sale may exceed inventory by this relative amount (float dust) and still clear it
_DUST = 1e-12


class MatchPolicy(str, enum.Enum):
    FIFO = "fifo"
    LIFO = "lifo"
    PRORATA = "prorata"

    @classmethod
    def parse(cls, value: "MatchPolicy | str") -> "MatchPolicy":
        if isinstance(value, MatchPolicy):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown match policy {value!r}; expected fifo, lifo or prorata") from None


@dataclass(frozen=True)
class PurchaseLot:
    purchase_time: float
    volume_remaining: float
    adjusted_price: float

    @property
    def original_value(self) -> float:
        return self.adjusted_price * self.volume_remaining


@dataclass(frozen=True)
class SaleLeg:
    purchase_time: float
    matched_volume: float
    lot_price: float
    current_value: float
    original_value: float
    actual_return: float


@dataclass(frozen=True)
class SaleDecomposition:
    investor_id: str
    sale_time: float
    sale_price: float
    sale_volume: float
    legs: tuple[SaleLeg, ...]

    @property
    def leg_count(self) -> int:
        return len(self.legs)

    M = leg_count

    @property
    def current_values(self) -> np.ndarray:
        return np.array([leg.current_value for leg in self.legs], dtype=float)

    @property
    def original_values(self) -> np.ndarray:
        return np.array([leg.original_value for leg in self.legs], dtype=float)

    @property
    def returns(self) -> np.ndarray:
        return np.array([leg.actual_return for leg in self.legs], dtype=float)

    @property
    def current_value(self) -> float:
        return math.fsum(leg.current_value for leg in self.legs)

    @property
    def original_value(self) -> float:
        return math.fsum(leg.original_value for leg in self.legs)


def _check_positive(name, x):
    if not (x > 0 and math.isfinite(x)):
        raise DomainError(f"{name} must be positive, got {x!r}")


class LotLedger:
    """Open purchase lots per investor.

    Lots are stored as mutable ``[purchase_time, price, remaining]`` lists in
    purchase order.  ``integer_volumes=True`` rejects fractional shares.
    """

    def __init__(self, policy: MatchPolicy | str = MatchPolicy.FIFO, integer_volumes: bool = False):
        self.policy = MatchPolicy.parse(policy)
        self.integer_volumes = integer_volumes
        self._lots: dict[str, deque] = {}
        self._last_time: dict[str, float] = {}
        self._held: dict[str, float] = {}

    def _validate(self, investor_id, time, price, volume):
        _check_positive("price", price)
        _check_positive("volume", volume)
        if self.integer_volumes and volume != int(volume):
            raise DomainError(f"fractional volume {volume!r} in integer-volume mode")
        last = self._last_time.get(investor_id)
        if last is not None and time < last:
            raise OrderingError(f"investor {investor_id!r}: event at t={time!r} precedes t={last!r}")

    def seed_inventory(self, investor_id: str, time: float, price: float, volume: float) -> "LotLedger":
        """Opening inventory held before the data starts."""
        return self.record_purchase(investor_id, time, price, volume)

    def record_purchase(self, investor_id: str, time: float, price: float, volume: float) -> "LotLedger":
        self._validate(investor_id, time, price, volume)
        self._lots.setdefault(investor_id, deque()).append([time, float(price), float(volume)])
        self._held[investor_id] = self._held.get(investor_id, 0.0) + volume
        self._last_time[investor_id] = time
        return self

    def remaining_inventory(self, investor_id: str) -> float:
        lots = self._lots.get(investor_id)
        if not lots:
            return 0.0
        return math.fsum(lot[2] for lot in lots)

    def lots(self, investor_id: str) -> tuple[PurchaseLot, ...]:
        return tuple(PurchaseLot(t, rem, p) for t, p, rem in self._lots.get(investor_id, ()))

    def investors(self) -> list[str]:
        return sorted(self._lots)

    def state(self) -> tuple:
        """Hashable snapshot of all open lots."""
        return tuple(
            (inv, tuple(tuple(lot) for lot in self._lots[inv])) for inv in sorted(self._lots)
        )

    def _consume(self, investor_id, volume, policy):
        """Remove ``volume`` shares from the investor's lots.

        Returns ``[(purchase_time, lot_price, matched_volume), ...]``.
        """
        lots = self._lots.get(investor_id)
        held = self._held.get(investor_id, 0.0)
        if not lots or volume > held * (1 + _DUST):
            raise InsufficientInventory(investor_id, volume, held if lots else 0.0)
        self._held[investor_id] = max(held - volume, 0.0) if lots else 0.0
        legs = []
        if policy is MatchPolicy.PRORATA:
            total = math.fsum(lot[2] for lot in lots)
            if volume >= total:
                legs = [(t, p, rem) for t, p, rem in lots]
                lots.clear()
                self._held[investor_id] = 0.0
            else:
                frac = volume / total
                takes = [lot[2] * frac for lot in lots]
                # last lot absorbs rounding so matched volumes sum to the sale
                takes[-1] = min(lots[-1][2], volume - math.fsum(takes[:-1]))
                keep = deque()
                for lot, take in zip(lots, takes):
                    if take > 0:
                        legs.append((lot[0], lot[1], take))
                    lot[2] -= take
                    if lot[2] > 0:
                        keep.append(lot)
                self._lots[investor_id] = keep
            return legs
        fifo = policy is MatchPolicy.FIFO
        need = volume
        while need > 0 and lots:
            lot = lots[0] if fifo else lots[-1]
            rem = lot[2]
            if rem <= need:
                legs.append((lot[0], lot[1], rem))
                need -= rem
                if fifo:
                    lots.popleft()
                else:
                    lots.pop()
            else:
                legs.append((lot[0], lot[1], need))
                lot[2] = rem - need
                need = 0.0
        if not lots:
            self._held[investor_id] = 0.0
        return legs

    def record_sale(
        self,
        investor_id: str,
        time: float,
        price: float,
        volume: float,
        policy: MatchPolicy | str | None = None,
    ) -> SaleDecomposition:
        """Match a sale against open lots and return its decomposition."""
        policy = self.policy if policy is None else MatchPolicy.parse(policy)
        self._validate(investor_id, time, price, volume)
        raw = self._consume(investor_id, volume, policy)
        self._last_time[investor_id] = time
        price = float(price)
        legs = tuple(
            SaleLeg(
                purchase_time=t,
                matched_volume=v,
                lot_price=p,
                current_value=price * v,
                original_value=p * v,
                actual_return=price / p,
            )
            for t, p, v in raw
        )
        return SaleDecomposition(investor_id, time, price, float(volume), legs)

    @classmethod
    def replay(cls, events: Iterable, policy: MatchPolicy | str = MatchPolicy.FIFO):
        """Run an event stream through a fresh ledger.

        ``events`` yields objects with ``time``, ``investor_id``, ``side``,
        ``price`` and ``volume`` (``adjusted_price`` is used when present).  Returns ``(ledger, decompositions)``.
        """
        ledger = cls(policy)
        sales = []
        for ev in events:
            side = getattr(ev.side, "value", ev.side)
            price = getattr(ev, "adjusted_price", ev.price)
            if side == "B":
                ledger.record_purchase(ev.investor_id, ev.time, price, ev.volume)
            else:
                sales.append(ledger.record_sale(ev.investor_id, ev.time, price, ev.volume))
        return ledger, sales


@dataclass
class MatchedEvents:
    """Flat output of ``match_events``: one entry per sale and per leg."""

    sale_event: list  # event index of each cleared sale
    leg_sale: list  # sale ordinal of each leg
    leg_price: list
    leg_volume: list
    skipped: list  # (event index, investor, reason) for rejected sales


def match_events(investors, is_buy, times, prices, volumes, policy=MatchPolicy.FIFO) -> MatchedEvents:
    """Replay time-ordered event columns and return every sale's legs.

    Gives the same legs as feeding the events one by one to
    ``LotLedger.record_purchase`` / ``record_sale``, but runs FIFO and LIFO
    in a single tight loop.  Oversold sales are skipped and reported rather
    than raised, leaving the investor's lots untouched.
    """
    policy = MatchPolicy.parse(policy)
    out = MatchedEvents([], [], [], [], [])
    sale_event, leg_sale, leg_price, leg_volume = out.sale_event, out.leg_sale, out.leg_price, out.leg_volume
    ledger = LotLedger(policy)
    books, held = ledger._lots, ledger._held
    fifo = policy is MatchPolicy.FIFO
    generic = policy is MatchPolicy.PRORATA
    limit = 1.0 + _DUST
    for k, (inv, buy, t, p, v) in enumerate(zip(investors, is_buy, times, prices, volumes)):
        if buy:
            dq = books.get(inv)
            if dq is None:
                books[inv] = dq = deque()
                held[inv] = 0.0
            dq.append([t, p, v])
            held[inv] += v
            continue
        dq = books.get(inv)
        h = held.get(inv, 0.0)
        if not dq or v > h * limit:
            out.skipped.append((k, inv, str(InsufficientInventory(inv, v, h if dq else 0.0))))
            continue
        s = len(sale_event)
        sale_event.append(k)
        if generic:
            for _, lp, lv in ledger._consume(inv, v, policy):
                leg_sale.append(s)
                leg_price.append(lp)
                leg_volume.append(lv)
            continue
        need = v
        while need > 0 and dq:
            lot = dq[0] if fifo else dq[-1]
            rem = lot[2]
            leg_sale.append(s)
            leg_price.append(lot[1])
            if rem <= need:
                leg_volume.append(rem)
                need -= rem
                if fifo:
                    dq.popleft()
                else:
                    dq.pop()
            else:
                leg_volume.append(need)
                lot[2] = rem - need
                need = 0.0
        held[inv] = max(h - v, 0.0) if dq else 0.0
    return out
