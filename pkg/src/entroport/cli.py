"""Command-line entry point: generate, simulate, verify, compare.

All configuration is explicit flags (no environment variables, no config
files), and nothing reads the wall clock, so identical invocations
produce byte-identical artifacts.

Exit codes: 0 success (verify: all checks pass), 1 verify found a failing
check, 2 input error (bad flag, malformed file, invalid parameter).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .paths import DeterministicSpec, GbmSpec, generate, load_csv, write_csv
from .simulate import (
    all_checks_pass,
    compare_policies,
    config_from_cli,
    report_from_json,
    report_to_json,
    run,
    steps_to_csv,
    verify_report,
)

__all__ = ["main"]


def _float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ValueError(f"{flag} expects comma-separated decimals, got {text!r}") from None


def _matrix(text: str, flag: str) -> list[list[float]]:
    return [_float_list(row, flag) for row in text.split(";")]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entroport",
        description=(
            "Fixed-weight rebalancing simulator with an exact entropy ledger: "
            "log growth = log price-index change + non-negative entropy."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a price path CSV")
    kind = gen.add_mutually_exclusive_group(required=True)
    kind.add_argument("--gbm", action="store_true", help="seeded geometric Brownian motion")
    kind.add_argument("--reciprocal-pair", action="store_true",
                      help="two assets with exactly reciprocal exponential prices")
    kind.add_argument("--exp-ramp", action="store_true", help="exponential ramps (needs --rates)")
    kind.add_argument("--sinusoid", action="store_true", help="log-sinusoid prices (needs --amps)")
    gen.add_argument("--steps", type=int, required=True, help="number of ticks after the first")
    gen.add_argument("--out", required=True, help="output CSV file")
    gen.add_argument("--assets", type=int, help="asset count (gbm with scalar params)")
    gen.add_argument("--mu", help="per-asset drift per tick, comma-separated")
    gen.add_argument("--sigma", help="per-asset volatility per sqrt-tick, comma-separated")
    gen.add_argument("--seed", type=int, help="PRNG seed (gbm; required)")
    gen.add_argument("--initial", help="initial prices, comma-separated (default all 1)")
    gen.add_argument("--labels", help="asset labels, comma-separated")
    gen.add_argument("--corr", help="correlation matrix, rows ';'-separated: '1,r;r,1'")
    gen.add_argument("--dt", type=float, default=1.0, help="tick length (default 1)")
    gen.add_argument("--rates", help="exp-ramp: per-asset log slope per tick")
    gen.add_argument("--amps", help="sinusoid: per-asset log amplitudes")
    gen.add_argument("--periods", help="sinusoid: per-asset periods in ticks")
    gen.add_argument("--phases", help="sinusoid: per-asset phases in radians")

    sim = sub.add_parser("simulate", help="run a simulation, write a JSON report")
    sim.add_argument("--path", required=True, help="price path CSV")
    sim.add_argument("--weights", required=True,
                     help="target weights, comma-separated, matching CSV asset order")
    sim.add_argument("--policy", required=True,
                     help="full | buyhold | fractional:<alpha> | threshold:<band>")
    sim.add_argument("--capital", type=float, required=True, help="starting capital")
    sim.add_argument("--out", required=True, help="output JSON report")
    sim.add_argument("--record-steps", action="store_true", help="store per-step records")
    sim.add_argument("--steps-out", help="also dump per-step CSV (implies --record-steps)")
    sim.add_argument("--no-settle", action="store_true",
                     help="skip the final settling rebalance")
    sim.add_argument("--tol-identity", type=float, help="identity tolerance (default 1e-9)")
    sim.add_argument("--tol-entropy", type=float, help="entropy tolerance (default 1e-12)")

    ver = sub.add_parser("verify", help="re-check a JSON report; exit 0 iff all pass")
    ver.add_argument("--report", required=True, help="JSON report to verify")
    ver.add_argument("--per-step", action="store_true",
                     help="insist on per-step checks from records")
    ver.add_argument("--tol-identity", type=float, help="override identity tolerance")
    ver.add_argument("--tol-entropy", type=float, help="override entropy tolerance")

    cmp_ = sub.add_parser("compare", help="run several policies on one path")
    cmp_.add_argument("--path", required=True, help="price path CSV")
    cmp_.add_argument("--weights", required=True, help="target weights, comma-separated")
    cmp_.add_argument("--capital", type=float, required=True, help="starting capital")
    cmp_.add_argument("--policies", required=True,
                      help="comma-separated policy specs, e.g. full,buyhold,fractional:0.5")
    cmp_.add_argument("--out", help="write the table to this file (default stdout)")
    cmp_.add_argument("--format", choices=("text", "csv"), default="text")
    cmp_.add_argument("--no-settle", action="store_true",
                      help="skip the final settling rebalance")
    return parser


def _cmd_generate(args: argparse.Namespace) -> int:
    labels = None if args.labels is None else tuple(args.labels.split(","))
    if args.gbm:
        if args.seed is None:
            raise ValueError("--gbm requires --seed (paths are reproducible by contract)")
        if args.mu is None or args.sigma is None:
            raise ValueError("--gbm requires --mu and --sigma")
        mu = _float_list(args.mu, "--mu")
        sigma = _float_list(args.sigma, "--sigma")
        n = args.assets if args.assets is not None else len(mu)
        initial = _float_list(args.initial, "--initial") if args.initial else 1.0
        corr = _matrix(args.corr, "--corr") if args.corr else None
        spec = GbmSpec(
            mu=mu if len(mu) > 1 else mu[0],
            sigma=sigma if len(sigma) > 1 else sigma[0],
            steps=args.steps,
            seed=args.seed,
            initial=initial,
            correlation=corr,
            labels=labels,
            dt=args.dt,
            n_assets=n,
        )
    else:
        if args.reciprocal_pair:
            kind, params = "reciprocal-pair", {}
        elif args.exp_ramp:
            if args.rates is None:
                raise ValueError("--exp-ramp requires --rates")
            kind, params = "exp-ramp", {"rates": _float_list(args.rates, "--rates")}
            if args.initial:
                params["initial"] = _float_list(args.initial, "--initial")
        else:
            if args.amps is None:
                raise ValueError("--sinusoid requires --amps")
            kind, params = "sinusoid", {"amps": _float_list(args.amps, "--amps")}
            if args.periods:
                params["periods"] = _float_list(args.periods, "--periods")
            if args.phases:
                params["phases"] = _float_list(args.phases, "--phases")
            if args.initial:
                params["initial"] = _float_list(args.initial, "--initial")
        spec = DeterministicSpec(kind=kind, steps=args.steps, params=params, labels=labels)
    path = generate(spec)
    write_csv(path, args.out)
    print(f"wrote {args.out}: {path.n_assets} assets x {path.n_ticks} ticks "
          f"({path.provenance.get('source')})")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    path = load_csv(args.path)
    weights = _float_list(args.weights, "--weights")
    config = config_from_cli(
        weights=weights,
        capital=args.capital,
        policy=args.policy,
        labels=path.labels if len(weights) == path.n_assets else None,
        settle_at_end=not args.no_settle,
        record_steps=args.record_steps or args.steps_out is not None,
        identity_tol=args.tol_identity,
        entropy_tol=args.tol_entropy,
    )
    report = run(path, config)
    Path(args.out).write_text(report_to_json(report), encoding="utf-8")
    if args.steps_out:
        Path(args.steps_out).write_text(steps_to_csv(report), encoding="utf-8")
    s = report.summary
    print(
        f"wrote {args.out}: policy={report.config['policy']} "
        f"ln_T_ratio={s['ln_T_ratio']:.10g} ln_P_ratio={s['ln_P_ratio']:.10g} "
        f"delta_S={s['delta_S']:.10g} identity_residual={s['identity_residual']:.3g}"
    )
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    report = report_from_json(Path(args.report).read_text(encoding="utf-8"))
    checks = verify_report(
        report,
        identity_tol=args.tol_identity,
        entropy_tol=args.tol_entropy,
        per_step=True if args.per_step else None,
    )
    width = max(len(name) for name in checks)
    for name, entry in checks.items():
        status = "PASS" if entry["pass"] else "FAIL"
        line = f"{status}  {name:<{width}}  slack={entry['slack']:.6g}"
        if "detail" in entry:
            line += f"  ({entry['detail']})"
        print(line)
    return 0 if all_checks_pass(checks) else 1


def _cmd_compare(args: argparse.Namespace) -> int:
    path = load_csv(args.path)
    weights = _float_list(args.weights, "--weights")
    configs = [
        config_from_cli(
            weights=weights,
            capital=args.capital,
            policy=p,
            labels=path.labels if len(weights) == path.n_assets else None,
            settle_at_end=not args.no_settle,
        )
        for p in args.policies.split(",")
    ]
    rows = compare_policies(path, configs)
    columns = ["policy", "ln_T_ratio", "delta_S", "n_trades", "max_step_residual"]
    if args.format == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(
                ",".join(
                    row["policy"] if c == "policy" else repr(row[c]) for c in columns
                )
            )
    else:
        formatted = [
            [
                row["policy"],
                f"{row['ln_T_ratio']:.10g}",
                f"{row['delta_S']:.10g}",
                str(row["n_trades"]),
                f"{row['max_step_residual']:.3g}",
            ]
            for row in rows
        ]
        widths = [
            max(len(columns[i]), *(len(r[i]) for r in formatted))
            for i in range(len(columns))
        ]
        lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
        for r in formatted:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    table = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, 0 on --help; keep its code
        return int(exc.code or 0)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_compare(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
