"""Discrete-event Monte-Carlo engine for gossip under timestamp tampering.

Each path realizes the superposed Poisson dynamics exactly: nodes hold a
(claimed stamp, true generation time) pair, honest transfers keep the higher
claimed stamp, tampered transfers re-stamp to "now" (always accepted) or to 0
(never accepted), and the source resets both fields to the current time.
Reported ages are exact time averages of t - Ubar over (warmup, horizon].

Coin handling comes in two statistically equivalent flavours: explicit
per-packet coin flips at the unthinned rates, or pre-thinned rates where
every surviving tampered packet is an acceptance. Both must agree within
Monte-Carlo error; `coin_mode_equivalence` checks exactly that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .model import (COIN_MODES, ConfigError, NetworkKind, NetworkSpec, RunParams,
                    build_rate_table, validate_config)


@dataclass(frozen=True)
class NodeState:
    """Claimed stamp and true generation time of the packet a node holds."""

    claimed_timestamp: float
    true_generation_time: float


@dataclass(frozen=True)
class SimConfig:
    spec: NetworkSpec
    horizon: float
    warmup: float | None = None  # None: 10% of horizon
    seed: int = 1
    coin_mode: str = "explicit-flip"

    def resolved_warmup(self) -> float:
        return 0.1 * self.horizon if self.warmup is None else self.warmup


@dataclass
class SimReport:
    """Time-averaged ages with replication statistics.

    ``mean_age[j-1]`` is node j's estimate; the relay's (interception runs
    only) is reported separately. ``ci95`` entries are normal-approximation
    95% half-widths over replications, None for a single replication.
    """

    mean_age: np.ndarray
    mean_age_adversary: float | None
    events_processed: int
    events_post_warmup: int
    ci95: np.ndarray | None = None
    ci95_adversary: float | None = None
    rep_means: np.ndarray | None = None
    final_states: list[NodeState] | None = None
    untainted_age_increases: int = 0
    state_violations: int = 0


@dataclass(frozen=True)
class EquivalenceVerdict:
    ok: bool
    diverging_nodes: list[int]


def _check(config: SimConfig) -> SimConfig:
    run = RunParams(config.horizon, config.warmup, config.seed, 1, config.coin_mode)
    validate_config(config.spec, run)
    return config


def compile_edges(spec: NetworkSpec, coin_mode: str):
    """Flatten a spec into kernel arrays (src, dst, kind, cumulative rates).

    Node j lives at index j-1; the relay, when present, at index n. Explicit
    mode lists tampered edges at their unthinned rates with coin kinds;
    pre-thinned mode lists them at the table's effective rates as
    always-accepted stamps. The relay feed carries no coin in either mode.
    """
    if coin_mode not in COIN_MODES:
        raise ConfigError([f"coin_mode must be one of {COIN_MODES} (got {coin_mode!r})"])
    table = build_rate_table(spec)
    n = spec.n
    mitm = spec.kind is NetworkKind.FCN_MITM and not spec.honest
    n_state = n + 1 if mitm else n
    src: list[int] = []
    dst: list[int] = []
    kind: list[int] = []
    rate: list[float] = []

    def add(i: int, j: int, k: int, r: float) -> None:
        if r > 0.0:
            src.append(i)
            dst.append(j)
            kind.append(k)
            rate.append(r)

    for j in range(n):
        add(-1, j, _kernel.SOURCE, float(table.source_rates[j]))
    if mitm:
        add(-1, n, _kernel.SOURCE, table.source_to_adversary)
        add(n, n - 1, _kernel.STAMP_NOW, table.adversary_feed_rate)

    tampered = not spec.honest and spec.kind is not NetworkKind.FCN_MITM
    p, q = spec.policy.p, spec.policy.q
    explicit = coin_mode == "explicit-flip"
    for (i, j), r in sorted(table.edge_rates.items()):
        if tampered and (i == n or j == n):
            continue  # rebuilt below in the requested coin mode
        add(i - 1, j - 1, _kernel.HONEST, r)
    if tampered:
        ring = spec.kind is NetworkKind.URN_CAPTURE
        unthinned = spec.lam if ring else spec.lam / (n - 1)
        out_to = [1] if ring else list(range(1, n))
        in_from = [n - 1] if ring else list(range(1, n))
        if explicit:
            for j in out_to:
                add(n - 1, j - 1, _kernel.OUT_COIN, unthinned)
            for i in in_from:
                add(i - 1, n - 1, _kernel.IN_COIN, unthinned)
        else:
            for j in out_to:
                add(n - 1, j - 1, _kernel.STAMP_NOW, p * unthinned)
            for i in in_from:
                add(i - 1, n - 1, _kernel.STAMP_NOW, (1.0 - q) * unthinned)

    return (n_state,
            np.asarray(src, dtype=np.int64),
            np.asarray(dst, dtype=np.int64),
            np.asarray(kind, dtype=np.int64),
            np.cumsum(np.asarray(rate, dtype=np.float64)),
            p, q)


def event_rate(spec: NetworkSpec, coin_mode: str = "explicit-flip") -> float:
    """Total superposed Poisson rate, i.e. expected events per unit time."""
    _, _, _, _, cumsum, _, _ = compile_edges(spec, coin_mode)
    return float(cumsum[-1])


def _run_arrays(config: SimConfig, probe_node: int = -1):
    n_state, src, dst, kind, cumsum, p, q = compile_edges(config.spec, config.coin_mode)
    return _kernel.run_path(
        n_state, src, dst, kind, cumsum, p, q,
        config.horizon, config.resolved_warmup(),
        np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF), probe_node)


def run(config: SimConfig) -> SimReport:
    """Simulate one path and report exact time-averaged ages per node."""
    _check(config)
    (ages, events, events_post, untainted, violations,
     u, ubar, _, _) = _run_arrays(config)
    if events_post == 0:
        raise RuntimeError("horizon produced zero post-warmup events; nothing to average")
    n = config.spec.n
    adversary = float(ages[n]) if ages.size > n else None
    final = [NodeState(float(u[i]), float(ubar[i])) for i in range(ages.size)]
    return SimReport(
        mean_age=ages[:n].copy(),
        mean_age_adversary=adversary,
        events_processed=int(events),
        events_post_warmup=int(events_post),
        final_states=final,
        untainted_age_increases=int(untainted),
        state_violations=int(violations),
    )


def replicate(config: SimConfig, num_reps: int) -> SimReport:
    """Independent replications with seeds seed, seed+1, ...; pooled report.

    Means are averaged across replications; ci95 is the usual normal
    half-width over the replication means (unavailable for one rep).
    """
    if num_reps < 1:
        raise ConfigError([f"reps must be ≥ 1 (got {num_reps})"])
    _check(config)
    reports = []
    for r in range(num_reps):
        reports.append(run(SimConfig(config.spec, config.horizon, config.warmup,
                                     config.seed + r, config.coin_mode)))
    n = config.spec.n
    rep_means = np.stack([rep.mean_age for rep in reports])
    mean = rep_means.mean(axis=0)
    mitm = reports[0].mean_age_adversary is not None
    adv_means = np.array([rep.mean_age_adversary for rep in reports]) if mitm else None
    ci = ci_adv = None
    if num_reps > 1:
        ci = 1.96 * rep_means.std(axis=0, ddof=1) / math.sqrt(num_reps)
        if mitm:
            ci_adv = float(1.96 * adv_means.std(ddof=1) / math.sqrt(num_reps))
    return SimReport(
        mean_age=mean,
        mean_age_adversary=float(adv_means.mean()) if mitm else None,
        events_processed=sum(rep.events_processed for rep in reports),
        events_post_warmup=sum(rep.events_post_warmup for rep in reports),
        ci95=ci,
        ci95_adversary=ci_adv,
        rep_means=rep_means,
        untainted_age_increases=sum(rep.untainted_age_increases for rep in reports),
        state_violations=sum(rep.state_violations for rep in reports),
    )


def coin_mode_equivalence(config_a: SimConfig, config_b: SimConfig,
                          reps: int) -> EquivalenceVerdict:
    """Check the two coin modes agree: per-node 95% CIs must overlap.

    ``config_a`` must be explicit-flip and ``config_b`` pre-thinned on the
    same network and horizon; returns the diverging node labels on failure.
    """
    if config_a.coin_mode != "explicit-flip" or config_b.coin_mode != "pre-thinned":
        raise ConfigError(["coin_mode_equivalence wants (explicit-flip, pre-thinned) configs"])
    if config_a.spec != config_b.spec or config_a.horizon != config_b.horizon:
        raise ConfigError(["coin_mode_equivalence wants identical spec and horizon"])
    if reps < 2:
        raise ConfigError(["need reps >= 2 for confidence intervals"])
    ra = replicate(config_a, reps)
    rb = replicate(config_b, reps)
    diverging = []
    for j in range(config_a.spec.n):
        lo_a, hi_a = ra.mean_age[j] - ra.ci95[j], ra.mean_age[j] + ra.ci95[j]
        lo_b, hi_b = rb.mean_age[j] - rb.ci95[j], rb.mean_age[j] + rb.ci95[j]
        if hi_a < lo_b or hi_b < lo_a:
            diverging.append(j + 1)
    return EquivalenceVerdict(not diverging, diverging)


def trajectory_probe(config: SimConfig, node: int, sample_times) -> np.ndarray:
    """True age of one node sampled along a single path.

    ``node`` is the 1-based label; sample times must lie within the horizon.
    Ages interpolate exactly: unit-rate growth between generation-time
    changes, with X(0) = 0 from the all-fresh start.
    """
    _check(config)
    times = np.asarray(sample_times, dtype=np.float64)
    if times.size and (times.min() < 0.0 or times.max() > config.horizon):
        raise ConfigError(["sample_times must lie within [0, horizon]"])
    n_state = config.spec.n + (1 if config.spec.kind is NetworkKind.FCN_MITM
                               and not config.spec.honest else 0)
    if not 1 <= node <= n_state:
        raise ConfigError([f"node must be in 1..{n_state} (got {node})"])
    *_, change_t, change_v = _run_arrays(config, probe_node=node - 1)
    idx = np.searchsorted(change_t, times, side="right") - 1
    return times - change_v[idx]
