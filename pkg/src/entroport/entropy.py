"""Per-asset entropy ledger for trade-driven value transfers.

Trading at fixed prices moves each touched asset's value-to-weight ratio;
the entropy booked to asset ``i`` over a trade leg is the exact integral
of traded value over that ratio, which at fixed prices closes to

    dS_i = w_i * ln(T_i_post / T_i_pre).

The ledger accumulates these deltas from a reference state (the run's
initial, on-target allocation, where S = 0). Price motion never touches
the ledger: it contributes the price-index term of the growth
decomposition instead, so callers must split ticks into a price leg and
a trade leg. Legal trades always produce a non-negative total delta;
negative totals beyond tolerance mean an illegal trade slipped through
validation.

The first-order per-pair form ``amount/T_buyer - amount/T_seller``
(pre-trade ratios) is kept as a diagnostic: it agrees with the exact form
to second order in trade size and overestimates for large trades.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import fsum
from .state import PortfolioState
from .trades import PairwiseTrade

__all__ = [
    "EntropyLedger",
    "trade_entropy_exact",
    "pair_entropy_first_order",
    "accumulate",
]

# Tolerance for "non-negative" totals: rounding in exact-fill trades can
# leave a legal batch's entropy a hair below zero.
ENTROPY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EntropyLedger:
    """Running per-asset entropies and their total, from a reference state."""

    s: np.ndarray
    total: float
    reference_time: float
    reference: PortfolioState

    @classmethod
    def fresh(cls, reference: PortfolioState, reference_time: float = 0.0) -> "EntropyLedger":
        s = np.zeros(reference.n)
        s.setflags(write=False)
        return cls(s=s, total=0.0, reference_time=float(reference_time), reference=reference)

    def accumulate(self, delta: np.ndarray) -> "EntropyLedger":
        return accumulate(self, delta)


def trade_entropy_exact(pre: PortfolioState, post: PortfolioState) -> np.ndarray:
    """Exact per-asset entropy of a trade leg between two states.

    Both states must share prices and weights (trade legs happen at fixed
    prices; mixing in a price move is a caller bug) and have strictly
    positive values everywhere. The per-asset result is
    ``w_i * ln(T_i_post / T_i_pre)`` and its compensated sum equals the
    log-potential change of the leg.
    """
    if pre.n != post.n:
        raise ValueError("states have different asset counts")
    if not np.array_equal(pre.weights.w, post.weights.w):
        raise ValueError("states have different weights")
    if not np.array_equal(pre.prices, post.prices):
        raise ValueError(
            "states have different prices; entropy is booked to trades only, "
            "split the price move from the trade leg"
        )
    ti_pre = pre.sub_temperatures
    ti_post = post.sub_temperatures
    if np.any(ti_pre <= 0.0) or np.any(ti_post <= 0.0):
        raise ValueError("entropy undefined for assets with zero value")
    return pre.weights.w * np.log(ti_post / ti_pre)


def pair_entropy_first_order(state: PortfolioState, trade: PairwiseTrade) -> float:
    """First-order entropy of one trade, ``amount/T_buyer - amount/T_seller``.

    Uses pre-trade ratios. Non-negative for any legal trade, zero exactly
    when the two ratios are equal, and within O(amount^2) of the exact
    ledger entry: halving the amount shrinks the gap about fourfold.
    """
    n = state.n
    if trade.buyer >= n or trade.seller >= n:
        raise IndexError(f"asset index out of range for {n} assets")
    ti = state.sub_temperatures
    t_b = float(ti[trade.buyer])
    t_s = float(ti[trade.seller])
    if t_b <= 0.0 or t_s <= 0.0:
        raise ValueError("entropy undefined for assets with zero value")
    return trade.amount / t_b - trade.amount / t_s


def accumulate(ledger: EntropyLedger, delta: np.ndarray) -> EntropyLedger:
    """Book a per-asset delta; the total delta must be >= -ENTROPY_TOL."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != ledger.s.shape:
        raise ValueError(
            f"delta has shape {delta.shape}, ledger has {ledger.s.shape}"
        )
    step = fsum(delta)
    if step < -ENTROPY_TOL:
        raise ValueError(
            f"entropy delta {step!r} is negative beyond tolerance; "
            "an illegal trade slipped through validation"
        )
    s = ledger.s + delta
    s.setflags(write=False)
    return EntropyLedger(
        s=s,
        total=fsum(s),
        reference_time=ledger.reference_time,
        reference=ledger.reference,
    )
