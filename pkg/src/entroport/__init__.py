"""Fixed-weight rebalancing with an exact entropy ledger.

A portfolio that holds constant target weights and rebalances toward them
grows, in log terms, by the change of the weighted geometric price index
plus a non-negative entropy term produced by its trades. This package
simulates that process tick by tick, keeps the entropy books exactly, and
verifies the decomposition and its bounds numerically.
"""

from .entropy import EntropyLedger, accumulate, pair_entropy_first_order, trade_entropy_exact
from .numerics import RunningSum, fsum
from .paths import (
    CsvSpec,
    DeterministicSpec,
    GbmSpec,
    PricePath,
    generate,
    index_series,
    load_csv,
    write_csv,
)
from .simulate import (
    EndpointSummary,
    InvariantViolation,
    SimulationConfig,
    SimulationReport,
    StepRecord,
    Tolerances,
    all_checks_pass,
    compare_policies,
    report_from_json,
    report_to_json,
    run,
    steps_to_csv,
    verify_report,
)
from .state import (
    AssetWeights,
    PortfolioState,
    asset_value,
    equilibrium_residual,
    log_potential,
    log_price_index,
    new_portfolio,
    price_index,
    sub_temperature,
    total_value,
    with_prices,
)
from .trades import (
    BuyAndHold,
    FractionalRebalance,
    FullRebalance,
    IllegalTradeError,
    PairwiseTrade,
    RebalancePolicy,
    ThresholdRebalance,
    TradeBatch,
    TradeVerdict,
    Violation,
    apply_batch,
    apply_trade,
    format_policy,
    parse_policy,
    plan_rebalance,
    validate_trade,
)

__version__ = "0.1.0"

__all__ = [
    "AssetWeights",
    "BuyAndHold",
    "CsvSpec",
    "DeterministicSpec",
    "EndpointSummary",
    "EntropyLedger",
    "FractionalRebalance",
    "FullRebalance",
    "GbmSpec",
    "IllegalTradeError",
    "InvariantViolation",
    "PairwiseTrade",
    "PortfolioState",
    "PricePath",
    "RebalancePolicy",
    "RunningSum",
    "SimulationConfig",
    "SimulationReport",
    "StepRecord",
    "ThresholdRebalance",
    "Tolerances",
    "TradeBatch",
    "TradeVerdict",
    "Violation",
    "accumulate",
    "all_checks_pass",
    "apply_batch",
    "apply_trade",
    "asset_value",
    "compare_policies",
    "equilibrium_residual",
    "format_policy",
    "fsum",
    "generate",
    "index_series",
    "load_csv",
    "log_potential",
    "log_price_index",
    "new_portfolio",
    "pair_entropy_first_order",
    "parse_policy",
    "plan_rebalance",
    "price_index",
    "report_from_json",
    "report_to_json",
    "run",
    "steps_to_csv",
    "sub_temperature",
    "total_value",
    "trade_entropy_exact",
    "validate_trade",
    "verify_report",
    "with_prices",
    "write_csv",
]
