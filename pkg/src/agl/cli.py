"""Command-line surface: evaluate, simulate, sweep, figures, lemma sums, CSV out.

Configuration comes from an optional JSON file ({kind, honest, n, lambda,
p, q}) overridden by flags; one precedence rule, flags win. The seed falls
back to the AGL_SEED environment variable. All commands emit RFC-4180 CSV
with 10-significant-digit floats, to stdout or --out. Exit codes: 0 success,
2 configuration error (all violations on stderr), 1 internal failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from . import analytic, experiments, simulator
from .model import (AdversaryPolicy, COIN_MODES, ConfigError, NetworkKind,
                    NetworkSpec, RunParams, validate_config)

_COLUMN_ORDER = ("series", "n", "node_label", "analytic", "sim_mean", "sim_ci95",
                 "bound_lower", "bound_upper")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return format(value, ".10g")
    return str(value)


def emit_csv(rows: list[dict], stream, minimum: tuple[str, ...] = ()) -> None:
    """Write dict rows as CSV: canonical column order, absent columns omitted.

    ``minimum`` columns always appear, so an empty result still carries its
    header.
    """
    def populated(name: str) -> bool:
        return name in minimum or any(row.get(name) is not None for row in rows)

    present = [name for name in _COLUMN_ORDER if populated(name)]
    for row in rows:
        for name in row:
            if name not in _COLUMN_ORDER and name not in present and populated(name):
                present.append(name)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(present)
    for row in rows:
        writer.writerow([_fmt(row.get(name)) for name in present])


def _sweep_rows(result: experiments.SweepResult) -> list[dict]:
    out = []
    for r in result.rows:
        out.append({"series": r.series, "n": r.n, "node_label": r.node_label,
                    "analytic": r.analytic, "sim_mean": r.sim_mean,
                    "sim_ci95": r.sim_ci95, "bound_lower": r.bound_lower,
                    "bound_upper": r.bound_upper})
    return out


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _env_seed() -> int:
    raw = os.environ.get("AGL_SEED")
    return int(raw) if raw else 1


def _net_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with {kind, honest, n, lambda, p, q}")
    parser.add_argument("--kind", choices=[k.value for k in NetworkKind])
    parser.add_argument("--honest", action="store_true", default=None)
    parser.add_argument("--n", type=int)
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--p", type=float)
    parser.add_argument("--q", type=float)
    parser.add_argument("--dump-config", action="store_true",
                        help="print the normalized config as JSON and exit")


def _sim_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--horizon", type=float, default=10000.0)
    parser.add_argument("--warmup", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None,
                        help="default: AGL_SEED environment variable, else 1")
    parser.add_argument("--reps", type=int, default=10)
    parser.add_argument("--coin-mode", choices=COIN_MODES, default="explicit-flip")


def _spec_from_args(args, require_n: bool = True) -> NetworkSpec:
    merged = {"kind": "fcn-capture", "honest": False, "n": None,
              "lambda": 1.0, "p": 1.0, "q": 1.0}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(merged)
        if unknown:
            raise ConfigError([f"unknown config keys: {sorted(unknown)}"])
        merged.update(loaded)
    for key, attr in (("kind", "kind"), ("honest", "honest"), ("n", "n"),
                      ("lambda", "lam"), ("p", "p"), ("q", "q")):
        value = getattr(args, attr, None)
        if value is not None:
            merged[key] = value
    if merged["n"] is None:
        if require_n:
            raise ConfigError(["n is required (flag --n or config file)"])
        merged["n"] = 2  # sweeps take sizes from --n-values instead
    try:
        kind = NetworkKind(merged["kind"])
    except ValueError:
        raise ConfigError([f"unknown network kind {merged['kind']!r}"]) from None
    return NetworkSpec(kind, int(merged["n"]), float(merged["lambda"]),
                       AdversaryPolicy(float(merged["p"]), float(merged["q"])),
                       honest=bool(merged["honest"]))


def spec_to_json(spec: NetworkSpec) -> str:
    return json.dumps({"kind": spec.kind.value, "honest": spec.honest, "n": spec.n,
                       "lambda": spec.lam, "p": spec.policy.p, "q": spec.policy.q},
                      sort_keys=True)


def _parse_n_values(text: str) -> list[int]:
    """Either a comma list, or min:max:factor for a geometric grid."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(["--n-values range must be min:max:factor"])
        lo, hi, factor = int(parts[0]), int(parts[1]), float(parts[2])
        if lo < 2 or hi < lo or factor <= 1.0:
            raise ConfigError([f"bad --n-values range {text!r}"])
        out, x = [], float(lo)
        while x <= hi * (1.0 + 1e-12):
            out.append(int(round(x)))
            x *= factor
        return sorted(set(out))
    return sorted({int(tok) for tok in text.split(",") if tok.strip()})


def _run_params(args, default_reps: int = 1) -> RunParams:
    seed = args.seed if args.seed is not None else _env_seed()
    reps = getattr(args, "reps", default_reps)
    return RunParams(args.horizon, args.warmup, seed, reps, args.coin_mode)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_analytic(args) -> list[dict]:
    spec = _spec_from_args(args)
    validate_config(spec)
    ages = analytic.ages_for_spec(spec)
    rows = [{"n": spec.n, "node_label": str(j + 1),
             "analytic": float(ages.node_ages[j])} for j in range(spec.n)]
    if ages.v_adversary is not None:
        rows.append({"n": spec.n, "node_label": "A", "analytic": ages.v_adversary})
    return rows


def _cmd_simulate(args) -> list[dict]:
    spec = _spec_from_args(args)
    run = _run_params(args, default_reps=10)
    checked = validate_config(spec, run)
    config = simulator.SimConfig(spec, checked.run.horizon, checked.run.warmup,
                                 checked.run.seed, checked.run.coin_mode)
    report = simulator.replicate(config, checked.run.reps)
    rows = []
    for j in range(spec.n):
        rows.append({"n": spec.n, "node_label": str(j + 1),
                     "sim_mean": float(report.mean_age[j]),
                     "sim_ci95": None if report.ci95 is None else float(report.ci95[j])})
    if report.mean_age_adversary is not None:
        rows.append({"n": spec.n, "node_label": "A",
                     "sim_mean": report.mean_age_adversary,
                     "sim_ci95": report.ci95_adversary})
    return rows


def _cmd_sweep(args) -> list[dict]:
    spec = _spec_from_args(args, require_n=False)
    validate_config(spec)
    selector = args.node if args.alpha is None else f"pow:{args.alpha}"
    settings = experiments.SimSettings(
        target_events=args.events, reps=args.reps,
        seed=args.seed if args.seed is not None else _env_seed(),
        coin_mode=args.coin_mode, max_n=args.sim_max_n)
    result = experiments.sweep(spec.kind, spec.policy, _parse_n_values(args.n_values),
                               selector, args.with_sim, honest=spec.honest,
                               lam=spec.lam, sim=settings)
    for n, reason in result.skipped:
        print(f"skipped n={n}: {reason}", file=sys.stderr)
    return _sweep_rows(result)


def _cmd_figure(args) -> list[dict]:
    settings = experiments.SimSettings(
        target_events=args.events, reps=args.reps,
        seed=args.seed if args.seed is not None else _env_seed(),
        coin_mode=args.coin_mode, max_n=args.sim_max_n)
    result = experiments.figure_preset(args.fig_id, args.with_sim, sim=settings)
    return _sweep_rows(result)


def _cmd_lemma(args) -> list[dict]:
    n, n0 = args.n, args.n0 if args.n0 is not None else args.n
    total = analytic.lemma_sum(n, n0)
    env = analytic.lemma_envelopes(n, n0)
    return [{"n": n, "n0": n0, "sum": total,
             "lower_env": env.lower, "upper_env": env.upper}]


def _cmd_compare(args) -> list[dict]:
    spec = _spec_from_args(args)
    validate_config(spec)
    settings = experiments.SimSettings(
        target_events=args.events, reps=args.reps,
        seed=args.seed if args.seed is not None else _env_seed(),
        coin_mode=args.coin_mode, max_n=spec.n)
    report = experiments.compare_sim_analytic(spec.kind, spec.policy, spec.n,
                                              honest=spec.honest, lam=spec.lam,
                                              sim=settings)
    rows = []
    for j in range(spec.n):
        exact = float(report.exact.node_ages[j])
        rows.append({"n": spec.n, "node_label": str(j + 1),
                     "analytic": None if math.isnan(exact) else exact,
                     "sim_mean": float(report.sim.mean_age[j]),
                     "sim_ci95": None if report.sim.ci95 is None
                     else float(report.sim.ci95[j])})
    if report.exact.v_adversary is not None:
        rows.append({"n": spec.n, "node_label": "A",
                     "analytic": report.exact.v_adversary,
                     "sim_mean": report.sim.mean_age_adversary,
                     "sim_ci95": report.sim.ci95_adversary})
    print(f"max_rel_error={report.max_rel_error:.6g} "
          f"flagged={report.flagged_nodes}", file=sys.stderr)
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agl",
                                     description="Gossip-age toolkit: exact recursions "
                                                 "and event simulation under timestamp "
                                                 "tampering")
    sub = parser.add_subparsers(dest="command", required=True)

    cmd = sub.add_parser("analytic", help="exact expected ages per node")
    _net_flags(cmd)
    cmd.add_argument("--out")
    cmd.set_defaults(fn=_cmd_analytic)

    cmd = sub.add_parser("simulate", help="Monte-Carlo mean ages per node")
    _net_flags(cmd)
    _sim_flags(cmd)
    cmd.add_argument("--out")
    cmd.set_defaults(fn=_cmd_simulate)

    cmd = sub.add_parser("sweep", help="node selector across network sizes")
    _net_flags(cmd)
    cmd.add_argument("--n-values", required=True,
                     help="comma list or min:max:factor geometric grid")
    cmd.add_argument("--node", default="node:1",
                     help="node:<idx> | infected | adversary | pow:<alpha> | transition")
    cmd.add_argument("--alpha", type=float, default=None,
                     help="shorthand for --node pow:<alpha>")
    cmd.add_argument("--with-sim", action="store_true")
    cmd.add_argument("--events", type=float, default=2e5,
                     help="target events per replication for sim columns")
    cmd.add_argument("--sim-max-n", type=int, default=64)
    cmd.add_argument("--seed", type=int, default=None)
    cmd.add_argument("--reps", type=int, default=10)
    cmd.add_argument("--coin-mode", choices=COIN_MODES, default="explicit-flip")
    cmd.add_argument("--out")
    cmd.set_defaults(fn=_cmd_sweep)

    cmd = sub.add_parser("figure", help="canned sweep presets")
    cmd.add_argument("fig_id", choices=list(experiments.FIGURE_IDS))
    cmd.add_argument("--with-sim", action="store_true")
    cmd.add_argument("--events", type=float, default=2e5)
    cmd.add_argument("--sim-max-n", type=int, default=64)
    cmd.add_argument("--seed", type=int, default=None)
    cmd.add_argument("--reps", type=int, default=10)
    cmd.add_argument("--coin-mode", choices=COIN_MODES, default="explicit-flip")
    cmd.add_argument("--out")
    cmd.set_defaults(fn=_cmd_figure)

    cmd = sub.add_parser("lemma", help="ring prefix-product sum and its envelopes")
    cmd.add_argument("--n", type=int, required=True)
    cmd.add_argument("--n0", type=int, default=None)
    cmd.add_argument("--out")
    cmd.set_defaults(fn=_cmd_lemma)

    cmd = sub.add_parser("compare", help="simulated vs exact ages per node")
    _net_flags(cmd)
    cmd.add_argument("--events", type=float, default=2e5)
    cmd.add_argument("--seed", type=int, default=None)
    cmd.add_argument("--reps", type=int, default=10)
    cmd.add_argument("--coin-mode", choices=COIN_MODES, default="explicit-flip")
    cmd.add_argument("--out")
    cmd.set_defaults(fn=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        if getattr(args, "dump_config", False):
            print(spec_to_json(_spec_from_args(args)))
            return 0
        rows = args.fn(args)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    buffer = io.StringIO()
    minimum = {"sweep": ("n", "node_label", "analytic"),
               "figure": ("series", "n", "node_label", "analytic")}
    emit_csv(rows, buffer, minimum=minimum.get(args.command, ()))
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buffer.getvalue())
    else:
        sys.stdout.write(buffer.getvalue())
    return 0


def entrypoint() -> None:  # console script
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
