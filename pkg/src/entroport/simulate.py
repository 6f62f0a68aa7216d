"""Tick-loop simulator, growth decomposition report, and verification.

Each tick after the first splits into a price leg (prices move, holdings
fixed, ledger untouched) and a trade leg (plan a batch under the policy,
apply it, book its exact entropy). Trading before the price move would
make rebalancing a permanent no-op, so the order is price-then-trade.

The report decomposes log growth over the run:

    ln(T_D / T_C) = ln(P_D / P_C) + (S_D - S_C)

where T is total value, P the geometric price index and S the entropy
ledger total. The identity holds exactly when both endpoints sit on the
target allocation; the initial state does by construction, and
``settle_at_end`` appends one full rebalance so the final state does too.
A generalized per-step form (log-potential change = index change +
entropy step) holds for every policy at every tick, settled or not, and
is tracked as a cumulative absolute residual in compensated summation.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .entropy import EntropyLedger, trade_entropy_exact
from .numerics import RunningSum
from .paths import PricePath
from .state import (
    AssetWeights,
    PortfolioState,
    equilibrium_residual,
    log_potential,
    log_price_index,
    new_portfolio,
    with_prices,
)
from .trades import (
    FullRebalance,
    IllegalTradeError,
    RebalancePolicy,
    apply_batch,
    format_policy,
    parse_policy,
    plan_rebalance,
)

__all__ = [
    "Tolerances",
    "SimulationConfig",
    "StepRecord",
    "EndpointSummary",
    "SimulationReport",
    "InvariantViolation",
    "run",
    "verify_report",
    "all_checks_pass",
    "compare_policies",
    "report_to_json",
    "report_from_json",
    "steps_to_csv",
]

STEP_CSV_HEADER = "t,T,L,lnP,S,residual"


class InvariantViolation(RuntimeError):
    """The engine broke one of its own conservation/entropy guarantees."""


@dataclass(frozen=True)
class Tolerances:
    identity: float = 1e-9
    entropy: float = 1e-12
    equilibrium: float = 1e-12

    def __post_init__(self):
        for name in ("identity", "entropy", "equilibrium"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"tolerance {name} must be positive")


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    weights: AssetWeights
    capital: float
    policy: RebalancePolicy
    settle_at_end: bool = True
    record_steps: bool = False
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if not (self.capital > 0.0 and math.isfinite(self.capital)):
            raise ValueError("capital must be positive and finite")


@dataclass(frozen=True)
class StepRecord:
    """One tick: totals after the tick's trades plus residual bookkeeping.

    ``residual`` is the cumulative sum of per-step identity residuals
    ``|dL - dlnP - dS|`` up to and including this tick. A settlement
    record shares the last tick's timestamp.
    """

    t: float
    total: float
    log_potential: float
    log_index: float
    entropy: float
    n_trades: int
    traded_value: float
    conservation_slack: float
    step_residual: float
    residual: float
    settlement: bool = False


@dataclass(frozen=True)
class EndpointSummary:
    """Snapshot of an endpoint state (C or D) plus its ledger total."""

    t: float
    prices: tuple[float, ...]
    holdings: tuple[float, ...]
    total: float
    log_potential: float
    log_index: float
    equilibrium_residual: float
    entropy: float


@dataclass(frozen=True, eq=False)
class SimulationReport:
    config: dict[str, Any]
    path_info: dict[str, Any]
    initial: EndpointSummary
    final: EndpointSummary
    summary: dict[str, Any]
    verification: dict[str, dict[str, Any]]
    records: tuple[StepRecord, ...] | None = None


def _config_echo(config: SimulationConfig) -> dict[str, Any]:
    return {
        "weights": config.weights.w.tolist(),
        "labels": None if config.weights.labels is None else list(config.weights.labels),
        "capital": float(config.capital),
        "policy": format_policy(config.policy),
        "settle_at_end": config.settle_at_end,
        "record_steps": config.record_steps,
        "tolerances": {
            "identity": config.tolerances.identity,
            "entropy": config.tolerances.entropy,
            "equilibrium": config.tolerances.equilibrium,
        },
    }


def _endpoint(
    state: PortfolioState, t: float, log_index: float, entropy: float
) -> EndpointSummary:
    return EndpointSummary(
        t=float(t),
        prices=tuple(float(x) for x in state.prices),
        holdings=tuple(float(x) for x in state.holdings),
        total=state.total,
        log_potential=log_potential(state),
        log_index=log_index,
        equilibrium_residual=equilibrium_residual(state),
        entropy=entropy,
    )


def run(path: PricePath, config: SimulationConfig) -> SimulationReport:
    """Evolve the portfolio along the path under the configured policy.

    The initial state allocates the capital at the first tick's prices,
    exactly on target, so it qualifies as the reference endpoint C with
    S(C) = 0. Planner-emitted batches must apply legally and conserve
    value; a failure there is an engine invariant breach and aborts.
    """
    weights = config.weights
    if weights.n != path.n_assets:
        raise ValueError(f"{weights.n} weights for a {path.n_assets}-asset path")
    if weights.labels is not None and weights.labels != path.labels:
        raise ValueError(
            f"weight labels {weights.labels} do not match path labels {path.labels}"
        )
    tol = config.tolerances
    times = path.times
    state = new_portfolio(weights, path.prices[0], config.capital)
    ledger = EntropyLedger.fresh(state, times[0])
    lp = log_potential(state)
    ln_index = log_price_index(path.prices[0], weights)
    initial = _endpoint(state, times[0], ln_index, 0.0)

    residual_acc = RunningSum()
    max_step_residual = 0.0
    min_batch_entropy = math.inf
    max_conservation_slack = 0.0
    n_trades_total = 0
    turnover = RunningSum()
    records: list[StepRecord] | None = None
    if config.record_steps:
        records = [
            StepRecord(
                t=float(times[0]),
                total=state.total,
                log_potential=lp,
                log_index=ln_index,
                entropy=0.0,
                n_trades=0,
                traded_value=0.0,
                conservation_slack=0.0,
                step_residual=0.0,
                residual=0.0,
            )
        ]

    def trade_leg(
        current: PortfolioState, policy: RebalancePolicy, tick: int
    ) -> tuple[PortfolioState, float, int, float, float]:
        nonlocal ledger
        batch = plan_rebalance(current, policy)
        if not batch.trades:
            return current, 0.0, 0, 0.0, 0.0
        try:
            traded, _snapshots = apply_batch(current, batch)
            delta = trade_entropy_exact(current, traded)
            before = ledger.total
            ledger = ledger.accumulate(delta)
        except (IllegalTradeError, ValueError) as exc:
            raise InvariantViolation(
                f"planner-emitted batch failed at tick {tick}: {exc}"
            ) from exc
        slack = abs(traded.total - current.total) / current.total
        return traded, ledger.total - before, len(batch), batch.traded_value(), slack

    def book_step(
        t: float,
        new_state: PortfolioState,
        ln_index_new: float,
        ds: float,
        n_trades: int,
        traded_value: float,
        cons_slack: float,
        settlement: bool,
    ) -> None:
        nonlocal lp, ln_index, max_step_residual, min_batch_entropy
        nonlocal max_conservation_slack, n_trades_total
        lp_new = log_potential(new_state)
        step_residual = abs((lp_new - lp) - (ln_index_new - ln_index) - ds)
        residual_acc.add(step_residual)
        max_step_residual = max(max_step_residual, step_residual)
        if n_trades:
            min_batch_entropy = min(min_batch_entropy, ds)
            max_conservation_slack = max(max_conservation_slack, cons_slack)
            n_trades_total += n_trades
            turnover.add(traded_value)
        lp, ln_index = lp_new, ln_index_new
        if records is not None:
            records.append(
                StepRecord(
                    t=float(t),
                    total=new_state.total,
                    log_potential=lp_new,
                    log_index=ln_index_new,
                    entropy=ledger.total,
                    n_trades=n_trades,
                    traded_value=traded_value,
                    conservation_slack=cons_slack,
                    step_residual=step_residual,
                    residual=residual_acc.value,
                    settlement=settlement,
                )
            )

    for k in range(1, len(times)):
        state = with_prices(state, path.prices[k])
        ln_index_new = log_price_index(path.prices[k], weights)
        state, ds, n_trades, traded_value, cons_slack = trade_leg(
            state, config.policy, k
        )
        book_step(
            times[k], state, ln_index_new, ds, n_trades, traded_value,
            cons_slack, settlement=False,
        )

    settled = False
    if config.settle_at_end and equilibrium_residual(state) > tol.equilibrium:
        state, ds, n_trades, traded_value, cons_slack = trade_leg(
            state, FullRebalance(), len(times) - 1
        )
        if n_trades:
            settled = True
            book_step(
                times[-1], state, ln_index, ds, n_trades, traded_value,
                cons_slack, settlement=True,
            )

    final = _endpoint(state, times[-1], ln_index, ledger.total)
    ln_t_ratio = math.log(final.total / initial.total)
    ln_p_ratio = final.log_index - initial.log_index
    delta_s = ledger.total
    summary: dict[str, Any] = {
        "ln_T_ratio": ln_t_ratio,
        "ln_P_ratio": ln_p_ratio,
        "delta_S": delta_s,
        "identity_residual": abs(ln_t_ratio - ln_p_ratio - delta_s),
        "per_asset_entropy": ledger.s.tolist(),
        "cumulative_step_residual": residual_acc.value,
        "max_step_residual": max_step_residual,
        "min_batch_entropy": (
            0.0 if math.isinf(min_batch_entropy) else min_batch_entropy
        ),
        "max_conservation_slack": max_conservation_slack,
        "n_trades": n_trades_total,
        "traded_value": turnover.value,
        "settled": settled,
    }
    path_info = dict(path.provenance)
    path_info.update(
        {
            "n_assets": path.n_assets,
            "n_ticks": path.n_ticks,
            "labels": list(path.labels),
        }
    )
    report = SimulationReport(
        config=_config_echo(config),
        path_info=path_info,
        initial=initial,
        final=final,
        summary=summary,
        verification={},
        records=None if records is None else tuple(records),
    )
    return dataclasses.replace(report, verification=verify_report(report))


# --- Verification ------------------------------------------------------------


def _record_steps_pairs(records: Sequence[StepRecord]):
    for i in range(1, len(records)):
        yield i, records[i - 1], records[i]


def verify_report(
    report: SimulationReport,
    identity_tol: float | None = None,
    entropy_tol: float | None = None,
    per_step: bool | None = None,
) -> dict[str, dict[str, Any]]:
    """Re-check the report's claims; returns check-name -> {pass, slack}.

    Endpoint checks (growth identity and the ROI-beats-index bound) apply
    only when both endpoints sit on the target allocation and are omitted
    otherwise. Per-step checks recompute from step records when present;
    without records they fall back on the engine's summary accumulators,
    unless ``per_step=True`` insists on records.

    Slack semantics: for residual-style checks, slack is the measured
    residual (pass when <= tolerance); for bound-style checks, slack is
    the measured margin (pass when >= -tolerance).
    """
    tols = report.config.get("tolerances", {})
    id_tol = identity_tol if identity_tol is not None else tols.get("identity", 1e-9)
    en_tol = entropy_tol if entropy_tol is not None else tols.get("entropy", 1e-12)
    eq_tol = tols.get("equilibrium", 1e-12)
    if per_step is None:
        per_step = report.records is not None
    if per_step and report.records is None:
        raise ValueError("per-step checks need a report with step records")

    checks: dict[str, dict[str, Any]] = {}
    endpoints_settled = (
        report.initial.equilibrium_residual <= eq_tol
        and report.final.equilibrium_residual <= eq_tol
    )

    if endpoints_settled:
        ln_t = math.log(report.final.total / report.initial.total)
        ln_p = report.final.log_index - report.initial.log_index
        ds = report.final.entropy - report.initial.entropy
        slack = abs(ln_t - ln_p - ds)
        checks["endpoint-identity"] = {"pass": slack <= id_tol, "slack": slack}
        margin = ln_t - ln_p
        checks["roi-bound"] = {"pass": margin >= -en_tol, "slack": margin}

    if per_step:
        acc = RunningSum()
        worst = 0.0
        for _, prev, cur in _record_steps_pairs(report.records):
            step = abs(
                (cur.log_potential - prev.log_potential)
                - (cur.log_index - prev.log_index)
                - (cur.entropy - prev.entropy)
            )
            acc.add(step)
            worst = max(worst, step)
        checks["per-step-identity"] = {
            "pass": acc.value <= id_tol,
            "slack": acc.value,
            "max_step": worst,
        }
        min_ds = 0.0
        offender = None
        for i, prev, cur in _record_steps_pairs(report.records):
            ds_step = cur.entropy - prev.entropy
            if ds_step < min_ds:
                min_ds = ds_step
                offender = i
        entry: dict[str, Any] = {"pass": min_ds >= -en_tol, "slack": min_ds}
        if not entry["pass"]:
            entry["detail"] = (
                f"entropy decreases by {-min_ds!r} at step {offender} "
                f"(t={report.records[offender].t!r})"
            )
        checks["entropy-non-decreasing"] = entry
    else:
        slack = report.summary["cumulative_step_residual"]
        checks["per-step-identity"] = {
            "pass": slack <= id_tol,
            "slack": slack,
            "max_step": report.summary["max_step_residual"],
        }
        min_ds = report.summary["min_batch_entropy"]
        checks["entropy-non-decreasing"] = {
            "pass": min_ds >= -en_tol,
            "slack": min_ds,
        }
    return checks


def all_checks_pass(verification: Mapping[str, Mapping[str, Any]]) -> bool:
    return all(entry["pass"] for entry in verification.values())


# --- Policy comparison --------------------------------------------------------


def compare_policies(
    path: PricePath, configs: Sequence[SimulationConfig]
) -> list[dict[str, Any]]:
    """Run one simulation per config and tabulate key outcomes.

    All configs must share weights and capital (the point is isolating
    the policy). Row order follows input order.
    """
    if not configs:
        raise ValueError("need at least one config to compare")
    first = configs[0]
    for cfg in configs[1:]:
        if not np.array_equal(cfg.weights.w, first.weights.w):
            raise ValueError("all configs must share the same weights")
        if cfg.capital != first.capital:
            raise ValueError("all configs must share the same capital")
    rows = []
    for cfg in configs:
        report = run(path, cfg)
        rows.append(
            {
                "policy": report.config["policy"],
                "ln_T_ratio": report.summary["ln_T_ratio"],
                "delta_S": report.summary["delta_S"],
                "n_trades": report.summary["n_trades"],
                "max_step_residual": report.summary["max_step_residual"],
                "identity_residual": report.summary["identity_residual"],
            }
        )
    return rows


# --- Serialization ------------------------------------------------------------


def report_to_dict(report: SimulationReport) -> dict[str, Any]:
    return {
        "config": report.config,
        "path": report.path_info,
        "initial": dataclasses.asdict(report.initial),
        "final": dataclasses.asdict(report.final),
        "summary": report.summary,
        "verification": report.verification,
        "steps": (
            None
            if report.records is None
            else [dataclasses.asdict(r) for r in report.records]
        ),
    }


def report_to_json(report: SimulationReport) -> str:
    """Serialize with round-trip-exact numbers; no wall-clock anywhere."""
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def _endpoint_from_dict(d: Mapping[str, Any]) -> EndpointSummary:
    return EndpointSummary(
        t=d["t"],
        prices=tuple(d["prices"]),
        holdings=tuple(d["holdings"]),
        total=d["total"],
        log_potential=d["log_potential"],
        log_index=d["log_index"],
        equilibrium_residual=d["equilibrium_residual"],
        entropy=d["entropy"],
    )


def report_from_json(text: str) -> SimulationReport:
    d = json.loads(text)
    steps = d.get("steps")
    return SimulationReport(
        config=d["config"],
        path_info=d["path"],
        initial=_endpoint_from_dict(d["initial"]),
        final=_endpoint_from_dict(d["final"]),
        summary=d["summary"],
        verification=d.get("verification", {}),
        records=None if steps is None else tuple(StepRecord(**s) for s in steps),
    )


def steps_to_csv(report: SimulationReport) -> str:
    """Per-step dump with columns ``t,T,L,lnP,S,residual``."""
    if report.records is None:
        raise ValueError("report has no step records; rerun with record_steps")
    lines = [STEP_CSV_HEADER]
    for r in report.records:
        lines.append(
            ",".join(
                repr(float(x))
                for x in (
                    r.t, r.total, r.log_potential, r.log_index, r.entropy,
                    r.residual,
                )
            )
        )
    return "\n".join(lines) + "\n"


def config_from_cli(
    weights: Sequence[float],
    capital: float,
    policy: str,
    labels: Sequence[str] | None = None,
    settle_at_end: bool = True,
    record_steps: bool = False,
    identity_tol: float | None = None,
    entropy_tol: float | None = None,
) -> SimulationConfig:
    """Build a config from flag-level values (strings already split)."""
    tol_kwargs = {}
    if identity_tol is not None:
        tol_kwargs["identity"] = identity_tol
    if entropy_tol is not None:
        tol_kwargs["entropy"] = entropy_tol
    return SimulationConfig(
        weights=AssetWeights(
            np.asarray(weights, dtype=float),
            None if labels is None else tuple(labels),
        ),
        capital=capital,
        policy=parse_policy(policy),
        settle_at_end=settle_at_end,
        record_steps=record_steps,
        tolerances=Tolerances(**tol_kwargs),
    )
