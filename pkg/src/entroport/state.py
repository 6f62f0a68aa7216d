"""Portfolio state and its instantaneous derived quantities.

A portfolio is a fixed weight vector plus current prices and holdings.
Everything else is derived: per-asset value ``U_i = p_i * h_i``, total
value ``T``, the per-asset value-to-weight ratio ``T_i = U_i / w_i``
(equal across assets exactly when the portfolio sits on its target
allocation), the weighted geometric price index ``P``, and the log
potential ``L = sum_i w_i * ln(T_i)``.

All objects are immutable value objects; arrays are stored as read-only
copies, so states can be shared freely. Sums over assets use compensated
summation so the 1e-12 invariant tolerances hold up to ~1000 assets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .numerics import fsum

__all__ = [
    "WEIGHT_SUM_TOL",
    "AssetWeights",
    "PortfolioState",
    "new_portfolio",
    "asset_value",
    "total_value",
    "sub_temperature",
    "price_index",
    "log_price_index",
    "equilibrium_residual",
    "log_potential",
    "with_prices",
    "validate_prices",
    "validate_holdings",
]

# Weight vectors must sum to 1 within this band; anything else is rejected
# rather than silently normalized, so report numbers stay reproducible.
WEIGHT_SUM_TOL = 1e-9


def _readonly(values, dtype=float) -> np.ndarray:
    a = np.array(values, dtype=dtype)
    a.setflags(write=False)
    return a


def validate_prices(p: np.ndarray, n: int | None = None) -> np.ndarray:
    """Check a price vector: finite, strictly positive, optionally length n."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"prices must be a 1-d vector, got shape {p.shape}")
    if n is not None and p.shape[0] != n:
        raise ValueError(f"expected {n} prices, got {p.shape[0]}")
    if not np.all(np.isfinite(p)):
        raise ValueError("prices must be finite")
    if not np.all(p > 0.0):
        raise ValueError("prices must be strictly positive")
    return p


def validate_holdings(h: np.ndarray, n: int | None = None) -> np.ndarray:
    """Check a holdings vector: finite, non-negative, optionally length n."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 1:
        raise ValueError(f"holdings must be a 1-d vector, got shape {h.shape}")
    if n is not None and h.shape[0] != n:
        raise ValueError(f"expected {n} holdings, got {h.shape[0]}")
    if not np.all(np.isfinite(h)):
        raise ValueError("holdings must be finite")
    if np.any(h < 0.0):
        raise ValueError("holdings must be non-negative (no short positions)")
    return h


@dataclass(frozen=True, eq=False)
class AssetWeights:
    """Fixed target weights, one per asset.

    Weights must be strictly positive and sum to one within
    ``WEIGHT_SUM_TOL``; out-of-band inputs are rejected, not rescaled.
    ``labels`` is optional; when present it must provide one unique
    identifier per asset (used for CSV headers and reports).
    """

    w: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1:
            raise ValueError(f"weights must be a 1-d vector, got shape {w.shape}")
        if w.shape[0] < 2:
            raise ValueError("need at least two assets")
        if not np.all(np.isfinite(w)) or not np.all(w > 0.0):
            raise ValueError("weights must be finite and strictly positive")
        total = fsum(w)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(
                f"weights must sum to 1 within {WEIGHT_SUM_TOL:g}; got {total!r}"
            )
        object.__setattr__(self, "w", _readonly(w))
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != w.shape[0]:
                raise ValueError(
                    f"{len(labels)} labels for {w.shape[0]} assets"
                )
            if len(set(labels)) != len(labels):
                raise ValueError("asset labels must be unique")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def label_or_default(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else f"A{i}"


@dataclass(frozen=True, eq=False)
class PortfolioState:
    """Immutable snapshot of weights, prices and holdings at one instant."""

    weights: AssetWeights
    prices: np.ndarray
    holdings: np.ndarray

    def __post_init__(self):
        n = self.weights.n
        p = validate_prices(self.prices, n)
        h = validate_holdings(self.holdings, n)
        object.__setattr__(self, "prices", _readonly(p))
        object.__setattr__(self, "holdings", _readonly(h))
        if self.total <= 0.0:
            raise ValueError("total portfolio value must be positive")

    @property
    def n(self) -> int:
        return self.weights.n

    @cached_property
    def values(self) -> np.ndarray:
        """Per-asset values U_i = p_i * h_i."""
        return _readonly(self.prices * self.holdings)

    @cached_property
    def total(self) -> float:
        """Total value T (compensated sum of U_i)."""
        return fsum(self.values)

    @cached_property
    def sub_temperatures(self) -> np.ndarray:
        """Value-to-weight ratios T_i = U_i / w_i.

        All equal to the total exactly when each asset holds its target
        share; trades are restricted by the ordering of these ratios.
        """
        return _readonly(self.values / self.weights.w)


def new_portfolio(weights: AssetWeights, prices, capital: float) -> PortfolioState:
    """Allocate ``capital`` across assets exactly at the target weights.

    Holdings are ``h_i = w_i * capital / p_i``, so every asset starts at
    its target share: ``U_i = w_i * T`` with ``T == capital`` up to
    rounding.
    """
    if not (isinstance(capital, (int, float)) and math.isfinite(capital)):
        raise ValueError("capital must be a finite number")
    if capital <= 0.0:
        raise ValueError("capital must be positive")
    p = validate_prices(prices, weights.n)
    h = weights.w * float(capital) / p
    return PortfolioState(weights=weights, prices=p, holdings=h)


def with_prices(state: PortfolioState, prices) -> PortfolioState:
    """Same holdings, new prices: the price leg of a tick."""
    return PortfolioState(weights=state.weights, prices=prices, holdings=state.holdings)


def _check_index(i: int, n: int) -> int:
    if not (isinstance(i, (int, np.integer)) and 0 <= i < n):
        raise IndexError(f"asset index {i!r} out of range for {n} assets")
    return int(i)


def asset_value(state: PortfolioState, i: int) -> float:
    """Value of one asset, U_i = p_i * h_i."""
    i = _check_index(i, state.n)
    return float(state.values[i])


def total_value(state: PortfolioState) -> float:
    """Total portfolio value T = sum_i U_i."""
    return state.total


def sub_temperature(state: PortfolioState, i: int) -> float:
    """Value-to-weight ratio T_i = U_i / w_i of one asset."""
    i = _check_index(i, state.n)
    return float(state.sub_temperatures[i])


def log_price_index(prices, weights: AssetWeights) -> float:
    """ln P = sum_i w_i * ln(p_i), the log of the geometric price index."""
    p = validate_prices(prices, weights.n)
    return fsum(weights.w * np.log(p))


def price_index(prices, weights: AssetWeights) -> float:
    """Weighted geometric average of prices, P = prod_i p_i ** w_i.

    Computed in log space so long products cannot overflow or underflow.
    """
    return math.exp(log_price_index(prices, weights))


def equilibrium_residual(state: PortfolioState) -> float:
    """Distance from the target allocation: max_i |T_i / T - 1|.

    Zero iff every asset's value equals its weight share of the total.
    """
    return float(np.max(np.abs(state.sub_temperatures / state.total - 1.0)))


def log_potential(state: PortfolioState) -> float:
    """L = sum_i w_i * ln(T_i); equals ln T on the target allocation.

    Per tick this quantity moves by exactly the log price-index change
    (price leg) plus the entropy produced by trading (trade leg), which
    is what makes it the bookkeeping backbone of the simulator.
    """
    ti = state.sub_temperatures
    if np.any(ti <= 0.0):
        raise ValueError(
            "log potential undefined: some asset has zero value "
            f"(indices {np.nonzero(ti <= 0.0)[0].tolist()})"
        )
    return fsum(state.weights.w * np.log(ti))
