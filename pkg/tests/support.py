"""Shared helpers for building states in tests."""

import numpy as np

from entroport import AssetWeights, PortfolioState


def make_state(w, sub_temps, prices=None) -> PortfolioState:
    """State with given weights and value-to-weight ratios (unit prices by default)."""
    w = np.asarray(w, dtype=float)
    ti = np.asarray(sub_temps, dtype=float)
    p = np.ones_like(w) if prices is None else np.asarray(prices, dtype=float)
    h = w * ti / p
    return PortfolioState(weights=AssetWeights(w), prices=p, holdings=h)


def random_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    raw = rng.uniform(0.05, 1.0, size=n)
    return raw / raw.sum()


def random_state(rng: np.random.Generator, n: int) -> PortfolioState:
    w = random_weights(rng, n)
    ti = np.exp(rng.uniform(-1.5, 1.5, size=n))
    p = np.exp(rng.uniform(-1.0, 1.0, size=n))
    return make_state(w, ti, prices=p)
