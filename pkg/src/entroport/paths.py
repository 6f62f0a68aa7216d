"""Time-indexed price paths: seeded generators, analytic paths, CSV round-trip.

Generation is a pure function of the spec: the same spec (seed included)
reproduces the same path bit for bit. The generator family is numpy's
``default_rng`` (PCG64); its name and the numpy version are recorded in
the path provenance so runs stay reproducible across builds.

CSV format: UTF-8, header ``time,<label0>,<label1>,...``, one decimal
time plus decimal prices per row, scientific notation accepted, LF or
CRLF line endings. Values are written with round-trip-exact decimal
formatting (shortest ``repr``), so write/load round-trips exactly.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, TextIO

import numpy as np

from .numerics import fsum
from .state import AssetWeights

__all__ = [
    "PricePath",
    "GbmSpec",
    "DeterministicSpec",
    "CsvSpec",
    "PathSpec",
    "generate",
    "load_csv",
    "write_csv",
    "index_series",
]

DETERMINISTIC_KINDS = ("exp-ramp", "sinusoid", "reciprocal-pair")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PricePath:
    """Strictly increasing times with one positive price vector per time."""

    times: np.ndarray
    prices: np.ndarray
    labels: tuple[str, ...]
    provenance: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        prices = np.asarray(self.prices, dtype=float)
        if times.ndim != 1 or prices.ndim != 2:
            raise ValueError("times must be 1-d and prices 2-d (ticks x assets)")
        if times.shape[0] < 2:
            raise ValueError("a price path needs at least two time points")
        if prices.shape[0] != times.shape[0]:
            raise ValueError(
                f"{times.shape[0]} times but {prices.shape[0]} price rows"
            )
        if not np.all(np.diff(times) > 0.0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(prices)) or not np.all(prices > 0.0):
            raise ValueError("all prices must be finite and strictly positive")
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != prices.shape[1]:
            raise ValueError(f"{len(labels)} labels for {prices.shape[1]} assets")
        if len(set(labels)) != len(labels):
            raise ValueError("asset labels must be unique")
        object.__setattr__(self, "times", _readonly(np.array(times)))
        object.__setattr__(self, "prices", _readonly(np.array(prices)))
        object.__setattr__(self, "labels", labels)

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]

    @property
    def n_ticks(self) -> int:
        return self.prices.shape[0]


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(f"A{i}" for i in range(n))


def _per_asset(value, n: int, name: str) -> np.ndarray:
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        a = np.full(n, float(a))
    if a.shape != (n,):
        raise ValueError(f"{name} must be a scalar or a length-{n} sequence")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


@dataclass(frozen=True, eq=False)
class GbmSpec:
    """Seeded geometric Brownian motion, one column per asset.

    ``p(t+1) = p(t) * exp((mu - sigma^2/2) dt + sigma sqrt(dt) z)`` with
    ``z`` standard normal from PCG64 seeded by ``seed``. An optional
    correlation matrix couples the draws through its lower-triangular
    Cholesky factor; a factorization failure is an input error.
    """

    mu: Any
    sigma: Any
    steps: int
    seed: int
    initial: Any = 1.0
    correlation: Any = None
    labels: tuple[str, ...] | None = None
    dt: float = 1.0
    n_assets: int | None = None


@dataclass(frozen=True, eq=False)
class DeterministicSpec:
    """Closed-form path of a named kind.

    Kinds and their ``params``:

    - ``reciprocal-pair``: two assets, ``p0(t) = exp(t/steps)`` and
      ``p1(t) = exp(-t/steps)``; no params. Their equal-weight geometric
      index is 1 at every tick.
    - ``exp-ramp``: ``p_i(t) = initial_i * exp(rates_i * t)``; params
      ``rates`` (required), ``initial``.
    - ``sinusoid``: ``p_i(t) = initial_i * exp(amps_i * sin(2 pi t /
      periods_i + phases_i))``; params ``amps`` (required), ``periods``
      (default: steps), ``phases`` (default 0), ``initial``.
    """

    kind: str
    steps: int
    params: Mapping[str, Any] = field(default_factory=dict)
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in DETERMINISTIC_KINDS:
            raise ValueError(
                f"unknown deterministic kind {self.kind!r}; "
                f"expected one of {DETERMINISTIC_KINDS}"
            )


@dataclass(frozen=True, eq=False)
class CsvSpec:
    """Load the path from a CSV file."""

    path: str


PathSpec = GbmSpec | DeterministicSpec | CsvSpec


def _generate_gbm(spec: GbmSpec) -> PricePath:
    if spec.steps < 1:
        raise ValueError("steps must be >= 1")
    initial = np.asarray(spec.initial, dtype=float)
    if initial.ndim == 0:
        if spec.n_assets is None:
            raise ValueError("scalar initial price needs n_assets")
        initial = np.full(spec.n_assets, float(initial))
    n = initial.shape[0]
    if spec.n_assets is not None and spec.n_assets != n:
        raise ValueError(f"n_assets={spec.n_assets} but {n} initial prices")
    if not np.all(np.isfinite(initial)) or not np.all(initial > 0.0):
        raise ValueError("initial prices must be finite and strictly positive")
    mu = _per_asset(spec.mu, n, "mu")
    sigma = _per_asset(spec.sigma, n, "sigma")
    if np.any(sigma < 0.0):
        raise ValueError("sigma must be non-negative")
    if spec.dt <= 0.0:
        raise ValueError("dt must be positive")
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((spec.steps, n))
    corr = None
    if spec.correlation is not None:
        corr = np.asarray(spec.correlation, dtype=float)
        if corr.shape != (n, n):
            raise ValueError(f"correlation must be {n}x{n}")
        if not np.allclose(corr, corr.T):
            raise ValueError("correlation matrix must be symmetric")
        try:
            chol = np.linalg.cholesky(corr)
        except np.linalg.LinAlgError:
            raise ValueError(
                "correlation matrix is not positive definite; cannot factorize"
            ) from None
        z = z @ chol.T
    increments = (mu - 0.5 * sigma**2) * spec.dt + sigma * np.sqrt(spec.dt) * z
    prices = np.cumprod(np.vstack([initial, np.exp(increments)]), axis=0)
    times = np.arange(spec.steps + 1, dtype=float) * spec.dt
    labels = spec.labels if spec.labels is not None else _default_labels(n)
    provenance = {
        "source": "gbm",
        "seed": int(spec.seed),
        "steps": int(spec.steps),
        "dt": float(spec.dt),
        "mu": mu.tolist(),
        "sigma": sigma.tolist(),
        "initial": initial.tolist(),
        "correlation": None if corr is None else corr.tolist(),
        "rng": {
            "bit_generator": type(rng.bit_generator).__name__,
            "numpy": np.__version__,
        },
    }
    return PricePath(times=times, prices=prices, labels=labels, provenance=provenance)


def _generate_deterministic(spec: DeterministicSpec) -> PricePath:
    if spec.steps < 1:
        raise ValueError("steps must be >= 1")
    t = np.arange(spec.steps + 1, dtype=float)
    params = dict(spec.params)
    if spec.kind == "reciprocal-pair":
        if params:
            raise ValueError(f"reciprocal-pair takes no params, got {sorted(params)}")
        x = t / spec.steps
        prices = np.column_stack([np.exp(x), np.exp(-x)])
        n = 2
    elif spec.kind == "exp-ramp":
        rates = np.atleast_1d(np.asarray(params.pop("rates"), dtype=float))
        n = rates.shape[0]
        initial = _per_asset(params.pop("initial", 1.0), n, "initial")
        if params:
            raise ValueError(f"unknown exp-ramp params {sorted(params)}")
        prices = initial * np.exp(np.outer(t, rates))
    else:  # sinusoid
        amps = np.atleast_1d(np.asarray(params.pop("amps"), dtype=float))
        n = amps.shape[0]
        periods = _per_asset(params.pop("periods", float(spec.steps)), n, "periods")
        phases = _per_asset(params.pop("phases", 0.0), n, "phases")
        initial = _per_asset(params.pop("initial", 1.0), n, "initial")
        if params:
            raise ValueError(f"unknown sinusoid params {sorted(params)}")
        if np.any(periods <= 0.0):
            raise ValueError("periods must be positive")
        phase = 2.0 * np.pi * np.outer(t, 1.0 / periods) + phases
        prices = initial * np.exp(amps * np.sin(phase))
    labels = spec.labels if spec.labels is not None else _default_labels(n)
    provenance = {
        "source": "deterministic",
        "kind": spec.kind,
        "steps": int(spec.steps),
        "params": {k: np.asarray(v).tolist() for k, v in dict(spec.params).items()},
    }
    return PricePath(times=t, prices=prices, labels=labels, provenance=provenance)


def generate(spec: PathSpec) -> PricePath:
    """Build the path a spec describes; pure, seed and all."""
    if isinstance(spec, GbmSpec):
        return _generate_gbm(spec)
    if isinstance(spec, DeterministicSpec):
        return _generate_deterministic(spec)
    if isinstance(spec, CsvSpec):
        return load_csv(spec.path)
    raise TypeError(f"not a path spec: {spec!r}")


def load_csv(source: str | Path | TextIO) -> PricePath:
    """Parse a price path CSV; malformed input errors name the row.

    Rows are counted from 1 including the header line. The header order
    defines the asset order. Provenance records the SHA-256 of the text.
    """
    if hasattr(source, "read"):
        text = source.read()
        name = getattr(source, "name", "<stream>")
    else:
        text = Path(source).read_text(encoding="utf-8")
        name = str(source)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty price CSV")
    header = [c.strip() for c in lines[0].split(",")]
    if len(header) < 3 or header[0] != "time":
        raise ValueError(
            "row 1: header must be 'time,<label0>,<label1>,...' "
            "with at least two assets"
        )
    labels = tuple(header[1:])
    n = len(labels)
    times: list[float] = []
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != n + 1:
            raise ValueError(
                f"row {lineno}: expected {n + 1} columns, got {len(cells)}"
            )
        try:
            values = [float(c) for c in cells]
        except ValueError:
            raise ValueError(f"row {lineno}: non-numeric cell") from None
        t = values[0]
        if times and t <= times[-1]:
            raise ValueError(
                f"row {lineno}: time {t!r} does not increase past {times[-1]!r}"
            )
        if any(p <= 0.0 for p in values[1:]):
            raise ValueError(f"row {lineno}: prices must be strictly positive")
        times.append(t)
        rows.append(values[1:])
    if len(rows) < 2:
        raise ValueError("a price path needs at least two data rows")
    provenance = {"source": "csv", "name": name, "sha256": digest}
    return PricePath(
        times=np.array(times), prices=np.array(rows), labels=labels,
        provenance=provenance,
    )


def write_csv(path: PricePath, sink: str | Path | TextIO) -> None:
    """Write a path as CSV with round-trip-exact decimal formatting."""
    buf = io.StringIO()
    buf.write("time," + ",".join(path.labels) + "\n")
    for t, row in zip(path.times, path.prices):
        buf.write(repr(float(t)) + "," + ",".join(repr(float(p)) for p in row) + "\n")
    text = buf.getvalue()
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        Path(sink).write_text(text, encoding="utf-8")


def index_series(path: PricePath, weights: AssetWeights) -> np.ndarray:
    """Geometric price index at every tick."""
    if weights.n != path.n_assets:
        raise ValueError(
            f"{weights.n} weights for a {path.n_assets}-asset path"
        )
    logp = np.log(path.prices)
    w = weights.w
    return np.exp(np.array([fsum(w * row) for row in logp]))
