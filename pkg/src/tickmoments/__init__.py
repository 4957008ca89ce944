"""Market-based (value/volume weighted) moments of prices and returns from trade ticks."""
from .actual import (
    CrossInvestorStats,
    InvestorDayStats,
    SaleReturnStats,
    cross_investor_stats,
    investor_day_stats,
    per_sale_value_averages,
    sale_return_stats,
    sale_stats_from_legs,
)
from .anticipated import (
    ReturnStats,
    ShiftedTradePair,
    build_shifted_pairs,
    last_price_lookup,
    mean_return,
    return_second_moment,
    return_stats,
    return_stats_from_values,
    return_volatility,
    weight_fn_original_value,
)
from .errors import (
    ConfigError,
    DomainError,
    InsufficientInventory,
    MissingPastPrice,
    OrderingError,
    ParseError,
    TickMomentsError,
)
from .events import EventLog, EventRecord, ingest
from .kernel import (
    MomentSet,
    Side,
    TradeTick,
    TradingDayWindow,
    covariance,
    moment_set,
    partition_windows,
    raw_moment,
    variance,
)
from .ledger import LotLedger, MatchPolicy, PurchaseLot, SaleDecomposition, SaleLeg
from .pipeline import PipelineOptions, Report, ReportRow, Shift, run_pipeline, tau_sweep
from .price_stats import (
    PriceStats,
    price_second_moment,
    price_stats,
    price_volatility,
    vwap,
    weight_fn_volume,
    weighted_price_moment,
)
from .reporting import emit, read_report
from .sim import SimConfig, generate, stress_case

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CrossInvestorStats",
    "DomainError",
    "EventLog",
    "EventRecord",
    "InsufficientInventory",
    "InvestorDayStats",
    "LotLedger",
    "MatchPolicy",
    "MissingPastPrice",
    "MomentSet",
    "OrderingError",
    "ParseError",
    "PipelineOptions",
    "PriceStats",
    "PurchaseLot",
    "Report",
    "ReportRow",
    "ReturnStats",
    "SaleDecomposition",
    "SaleLeg",
    "SaleReturnStats",
    "Shift",
    "ShiftedTradePair",
    "Side",
    "SimConfig",
    "TickMomentsError",
    "TradeTick",
    "TradingDayWindow",
    "build_shifted_pairs",
    "covariance",
    "cross_investor_stats",
    "emit",
    "generate",
    "ingest",
    "investor_day_stats",
    "last_price_lookup",
    "mean_return",
    "moment_set",
    "partition_windows",
    "per_sale_value_averages",
    "price_second_moment",
    "price_stats",
    "price_volatility",
    "raw_moment",
    "read_report",
    "return_second_moment",
    "return_stats",
    "return_stats_from_values",
    "return_volatility",
    "run_pipeline",
    "sale_return_stats",
    "sale_stats_from_legs",
    "stress_case",
    "tau_sweep",
    "variance",
    "vwap",
    "weight_fn_original_value",
    "weight_fn_volume",
    "weighted_price_moment",
]
