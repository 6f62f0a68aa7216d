"""Trade representation, legality rules, rebalance planning and application.

A trade moves value from a seller asset to a buyer asset at fixed prices,
conserving total value. Legality enforces one rule in two forms: value may
only flow from an asset with a higher value-to-weight ratio to one with a
lower ratio (direction), and a finite trade may not push the seller's
ratio below the buyer's (no crossing). The no-crossing rule is what keeps
the exact entropy of every legal trade non-negative; a trade that
overshoots the crossing point can destroy entropy even though its
direction was fine.

Planning turns a policy into a deterministic batch of pairwise trades:
hot sellers are matched against cold buyers greedily, hottest and coldest
first, so every emitted trade is legal at its application point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .numerics import fsum
from .state import PortfolioState, equilibrium_residual

__all__ = [
    "PairwiseTrade",
    "TradeBatch",
    "BuyAndHold",
    "FullRebalance",
    "FractionalRebalance",
    "ThresholdRebalance",
    "RebalancePolicy",
    "Violation",
    "TradeVerdict",
    "IllegalTradeError",
    "validate_trade",
    "apply_trade",
    "plan_rebalance",
    "apply_batch",
    "parse_policy",
    "format_policy",
]

# Net flows smaller than this fraction of total value are dropped as dust,
# so fractional policies cannot emit infinite tails of microscopic trades.
DUST_REL = 1e-15

# Slack for direction / no-crossing comparisons, scaled by total value.
# Exact-fill trades from the planner land on equality up to rounding; a
# strict comparison would reject them spuriously.
TRADE_TOL_REL = 1e-12

# A legal batch must conserve total value to this relative tolerance.
CONSERVATION_REL = 1e-12


@dataclass(frozen=True)
class PairwiseTrade:
    """Transfer of ``amount`` units of value from ``seller`` to ``buyer``.

    The signed flow is stored once: the buyer's value changes by
    ``+amount``, the seller's by ``-amount``, so the pair conserves value
    by construction.
    """

    buyer: int
    seller: int
    amount: float

    def __post_init__(self):
        if self.buyer == self.seller:
            raise ValueError("buyer and seller must differ")
        if self.buyer < 0 or self.seller < 0:
            raise ValueError("asset indices must be non-negative")
        if not (self.amount > 0.0 and np.isfinite(self.amount)):
            raise ValueError("trade amount must be positive and finite")


@dataclass(frozen=True)
class TradeBatch:
    """Ordered sequence of trades; application order is the stored order."""

    trades: tuple[PairwiseTrade, ...]
    n: int

    def __len__(self) -> int:
        return len(self.trades)

    def net_flows(self) -> np.ndarray:
        """Per-asset net value flow Q_i (compensated per-asset sums)."""
        per_asset: list[list[float]] = [[] for _ in range(self.n)]
        for t in self.trades:
            per_asset[t.buyer].append(t.amount)
            per_asset[t.seller].append(-t.amount)
        return np.array([fsum(terms) for terms in per_asset])

    def traded_value(self) -> float:
        """Total turnover: sum of trade amounts."""
        return fsum(t.amount for t in self.trades)


# --- Policies ---------------------------------------------------------------


@dataclass(frozen=True)
class BuyAndHold:
    """Never trade (non-trading baseline)."""


@dataclass(frozen=True)
class FullRebalance:
    """Trade all the way back to the target allocation every tick."""


@dataclass(frozen=True)
class FractionalRebalance:
    """Close a fixed fraction ``alpha`` of the gap to target each tick."""

    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must be in (0,1]")


@dataclass(frozen=True)
class ThresholdRebalance:
    """Rebalance fully, but only when the allocation drifts past ``band``."""

    band: float

    def __post_init__(self):
        if not (self.band > 0.0 and np.isfinite(self.band)):
            raise ValueError("band must be positive and finite")


RebalancePolicy = Union[BuyAndHold, FullRebalance, FractionalRebalance, ThresholdRebalance]


def parse_policy(text: str) -> RebalancePolicy:
    """Parse ``full``, ``buyhold``, ``fractional:<alpha>``, ``threshold:<band>``."""
    name, sep, param = text.strip().partition(":")
    name = name.lower()
    if name == "full":
        if sep:
            raise ValueError("policy 'full' takes no parameter")
        return FullRebalance()
    if name == "buyhold":
        if sep:
            raise ValueError("policy 'buyhold' takes no parameter")
        return BuyAndHold()
    if name == "fractional":
        try:
            alpha = float(param)
        except ValueError:
            raise ValueError(f"bad fractional policy parameter {param!r}") from None
        return FractionalRebalance(alpha)
    if name == "threshold":
        try:
            band = float(param)
        except ValueError:
            raise ValueError(f"bad threshold policy parameter {param!r}") from None
        return ThresholdRebalance(band)
    raise ValueError(
        f"unknown policy {text!r}; expected full, buyhold, "
        "fractional:<alpha> or threshold:<band>"
    )


def format_policy(policy: RebalancePolicy) -> str:
    if isinstance(policy, FullRebalance):
        return "full"
    if isinstance(policy, BuyAndHold):
        return "buyhold"
    if isinstance(policy, FractionalRebalance):
        return f"fractional:{policy.alpha!r}"
    if isinstance(policy, ThresholdRebalance):
        return f"threshold:{policy.band!r}"
    raise TypeError(f"not a rebalance policy: {policy!r}")


# --- Legality ---------------------------------------------------------------


class Violation(enum.Enum):
    DIRECTION = "direction-violates-second-law"
    CROSSING = "crossing-overshoot"
    NEGATIVE_HOLDING = "negative-holding"
    CONSERVATION = "conservation-broken"
    DIMENSION = "dimension-mismatch"


@dataclass(frozen=True)
class TradeVerdict:
    """Outcome of legality validation; legal xor a violation is present."""

    legal: bool
    violation: Violation | None = None
    detail: str = ""

    def __post_init__(self):
        if self.legal == (self.violation is not None):
            raise ValueError("verdict must be legal xor carry a violation")


class IllegalTradeError(ValueError):
    """A trade or batch failed validation (or broke conservation)."""

    def __init__(self, verdict: TradeVerdict, trade_index: int | None = None):
        self.verdict = verdict
        self.trade_index = trade_index
        where = "" if trade_index is None else f" (trade #{trade_index})"
        super().__init__(f"{verdict.violation.value}{where}: {verdict.detail}")


def _violation(
    u_s: float, u_b: float, w_s: float, w_b: float, amount: float, tol: float
) -> TradeVerdict | None:
    """Core legality rules on raw values; ``tol`` is the comparison slack."""
    t_s = u_s / w_s
    t_b = u_b / w_b
    if t_s < t_b - tol:
        return TradeVerdict(
            False,
            Violation.DIRECTION,
            f"seller ratio {t_s!r} below buyer ratio {t_b!r}",
        )
    if amount > u_s:
        return TradeVerdict(
            False,
            Violation.NEGATIVE_HOLDING,
            f"amount {amount!r} exceeds seller value {u_s!r}",
        )
    t_s2 = (u_s - amount) / w_s
    t_b2 = (u_b + amount) / w_b
    if t_s2 < t_b2 - tol:
        return TradeVerdict(
            False,
            Violation.CROSSING,
            f"post-trade seller ratio {t_s2!r} below buyer ratio {t_b2!r}",
        )
    return None


def validate_trade(state: PortfolioState, trade: PairwiseTrade) -> TradeVerdict:
    """Judge one trade against the current state.

    Legal means: the seller's value-to-weight ratio is at least the
    buyer's, the trade does not push them past each other, and the seller
    is left with non-negative value. Failures come back as a verdict,
    never as an exception.
    """
    n = state.n
    if trade.buyer >= n or trade.seller >= n:
        return TradeVerdict(
            False,
            Violation.DIMENSION,
            f"asset index out of range for {n} assets",
        )
    u = state.values
    w = state.weights.w
    verdict = _violation(
        float(u[trade.seller]),
        float(u[trade.buyer]),
        float(w[trade.seller]),
        float(w[trade.buyer]),
        trade.amount,
        TRADE_TOL_REL * state.total,
    )
    return verdict if verdict is not None else TradeVerdict(True)


def apply_trade(state: PortfolioState, trade: PairwiseTrade) -> PortfolioState:
    """Apply one legal trade at fixed prices; raises on an illegal one.

    Holdings update in value space, ``h' = (U -+ amount) / p``, which is
    the same as ``h -+ amount / p`` up to rounding but guarantees the
    seller's holding cannot round below zero. Untouched assets keep their
    holdings bit-for-bit.
    """
    verdict = validate_trade(state, trade)
    if not verdict.legal:
        raise IllegalTradeError(verdict)
    h = np.array(state.holdings)
    u = state.values
    p = state.prices
    h[trade.seller] = (u[trade.seller] - trade.amount) / p[trade.seller]
    h[trade.buyer] = (u[trade.buyer] + trade.amount) / p[trade.buyer]
    return PortfolioState(weights=state.weights, prices=state.prices, holdings=h)


# --- Planning and batch application -----------------------------------------


def _policy_alpha(state: PortfolioState, policy: RebalancePolicy) -> float:
    if isinstance(policy, BuyAndHold):
        return 0.0
    if isinstance(policy, FullRebalance):
        return 1.0
    if isinstance(policy, FractionalRebalance):
        return policy.alpha
    if isinstance(policy, ThresholdRebalance):
        return 1.0 if equilibrium_residual(state) > policy.band else 0.0
    raise TypeError(f"not a rebalance policy: {policy!r}")


def plan_rebalance(state: PortfolioState, policy: RebalancePolicy) -> TradeBatch:
    """Plan the batch realizing net flows ``alpha * (w_i T - U_i)``.

    Sellers (above-target assets) are drained hottest first into buyers
    coldest first, two-pointer, each trade taking the smaller of the two
    open amounts. The decomposition is a deterministic canonical choice;
    any matching of toward-target flows would be legal. Flows below
    ``DUST_REL * T`` are dropped.
    """
    n = state.n
    alpha = _policy_alpha(state, policy)
    if alpha == 0.0:
        return TradeBatch((), n)
    t_total = state.total
    u = state.values
    flows = alpha * (state.weights.w * t_total - u)
    dust = DUST_REL * t_total
    ti = state.sub_temperatures
    sellers = sorted(
        (i for i in range(n) if flows[i] < -dust), key=lambda i: (-ti[i], i)
    )
    buyers = sorted(
        (i for i in range(n) if flows[i] > dust), key=lambda i: (ti[i], i)
    )
    trades: list[PairwiseTrade] = []
    si = bi = 0
    sell_open = -float(flows[sellers[0]]) if sellers else 0.0
    buy_open = float(flows[buyers[0]]) if buyers else 0.0
    while si < len(sellers) and bi < len(buyers):
        amount = min(sell_open, buy_open)
        if amount >= dust:
            trades.append(
                PairwiseTrade(buyer=buyers[bi], seller=sellers[si], amount=amount)
            )
        sell_open -= amount
        buy_open -= amount
        if sell_open <= 0.0:
            si += 1
            if si < len(sellers):
                sell_open = -float(flows[sellers[si]])
        if buy_open <= 0.0:
            bi += 1
            if bi < len(buyers):
                buy_open = float(flows[buyers[bi]])
    return TradeBatch(tuple(trades), n)


def apply_batch(
    state: PortfolioState, batch: TradeBatch
) -> tuple[PortfolioState, list[np.ndarray]]:
    """Apply a batch in stored order, all-or-nothing.

    Each trade is validated against the state at its application point;
    the first illegal trade aborts with its verdict and the input state
    is untouched. Returns the final state and the per-trade snapshots of
    the value-to-weight ratio vector (what the entropy ledger consumes).
    Total value must be conserved across the whole batch to
    ``CONSERVATION_REL``.
    """
    if batch.n != state.n:
        raise IllegalTradeError(
            TradeVerdict(
                False,
                Violation.DIMENSION,
                f"batch planned for {batch.n} assets, state has {state.n}",
            )
        )
    if not batch.trades:
        return state, []
    w = state.weights.w
    p = state.prices
    u = np.array(state.values)
    h = np.array(state.holdings)
    tol = TRADE_TOL_REL * state.total
    snapshots: list[np.ndarray] = []
    for k, trade in enumerate(batch.trades):
        if trade.buyer >= state.n or trade.seller >= state.n:
            raise IllegalTradeError(
                TradeVerdict(
                    False,
                    Violation.DIMENSION,
                    f"asset index out of range for {state.n} assets",
                ),
                trade_index=k,
            )
        s, b = trade.seller, trade.buyer
        verdict = _violation(
            float(u[s]), float(u[b]), float(w[s]), float(w[b]), trade.amount, tol
        )
        if verdict is not None:
            raise IllegalTradeError(verdict, trade_index=k)
        u[s] -= trade.amount
        u[b] += trade.amount
        h[s] = u[s] / p[s]
        h[b] = u[b] / p[b]
        snapshots.append(u / w)
    final = PortfolioState(weights=state.weights, prices=state.prices, holdings=h)
    drift = abs(final.total - state.total)
    if drift > CONSERVATION_REL * state.total:
        raise IllegalTradeError(
            TradeVerdict(
                False,
                Violation.CONSERVATION,
                f"batch changed total value by {drift!r} "
                f"(> {CONSERVATION_REL:g} relative)",
            )
        )
    return final, snapshots
