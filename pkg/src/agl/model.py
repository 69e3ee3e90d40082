"""Network topologies, adversary policies, and effective transition-rate tables.

A network is a source plus user nodes 1..n gossiping on Poisson clocks.
Node n is the tampered node (or, in the interception variant, is fed by a
man-in-the-middle relay "A" that swallows its source updates). The tables
built here are shared by the exact recursion evaluator and the Monte-Carlo
event engine: rates are pre-thinned by the adversary's coin probabilities,
so a kept adversarial packet is always accepted by the receiver.

Honest mode is a distinct switch, not a coin setting: with truthful
timestamps the accept rule degenerates to keep-the-lowest-age, and every
edge runs unthinned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class NetworkKind(str, Enum):
    FCN_CAPTURE = "fcn-capture"
    FCN_MITM = "fcn-mitm"
    URN_CAPTURE = "urn-capture"


#: coin_mode values accepted by the simulator
COIN_MODES = ("explicit-flip", "pre-thinned")


class ConfigError(ValueError):
    """Invalid network or run configuration; carries every violation found."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class AdversaryPolicy:
    """Coin probabilities of the timestamp manipulator sitting on node n.

    Outgoing packets get their claimed timestamp raised to the current time
    with probability ``p`` (otherwise dropped to 0); incoming packets get it
    dropped to 0 with probability ``q`` (otherwise raised to the current
    time). A raised stamp is always accepted by the receiver, a zeroed one
    never is, which is what makes pre-thinning exact.
    """

    p: float = 1.0
    q: float = 1.0


@dataclass(frozen=True)
class NetworkSpec:
    """Single source of truth for one network: topology, size, rate, policy."""

    kind: NetworkKind
    n: int
    lam: float
    policy: AdversaryPolicy = field(default_factory=AdversaryPolicy)
    honest: bool = False

    def violations(self) -> list[str]:
        out: list[str] = []
        if not isinstance(self.kind, NetworkKind):
            out.append(f"unknown network kind {self.kind!r}")
        if self.n < 2:
            out.append(f"n must be ≥ 2 (got {self.n})")
        if not self.lam > 0:
            out.append(f"lambda must be > 0 (got {self.lam})")
        for name, value in (("p", self.policy.p), ("q", self.policy.q)):
            if not 0.0 <= value <= 1.0:
                out.append(f"probability out of range: {name}={value} not in [0, 1]")
        return out


@dataclass(frozen=True)
class RunParams:
    """Simulation-side knobs; analytic paths ignore these."""

    horizon: float = 10_000.0
    warmup: float | None = None  # None: 10% of horizon
    seed: int = 1
    reps: int = 1
    coin_mode: str = "explicit-flip"

    def resolved_warmup(self) -> float:
        return 0.1 * self.horizon if self.warmup is None else self.warmup

    def violations(self) -> list[str]:
        out: list[str] = []
        if not self.horizon > 0:
            out.append(f"horizon must be > 0 (got {self.horizon})")
        w = self.resolved_warmup()
        if not 0 <= w < self.horizon:
            out.append(f"warmup must satisfy 0 ≤ warmup < horizon (got {w})")
        if self.reps < 1:
            out.append(f"reps must be ≥ 1 (got {self.reps})")
        if self.coin_mode not in COIN_MODES:
            out.append(f"coin_mode must be one of {COIN_MODES} (got {self.coin_mode!r})")
        return out


@dataclass(frozen=True)
class CheckedConfig:
    spec: NetworkSpec
    run: RunParams


def validate_config(spec: NetworkSpec, run_params: RunParams | None = None) -> CheckedConfig:
    """Normalize a configuration, aggregating every violation before failing.

    Returns the checked config with defaults filled in; raises
    :class:`ConfigError` listing all problems at once otherwise.
    """
    run = run_params if run_params is not None else RunParams()
    problems = spec.violations() + run.violations()
    if problems:
        raise ConfigError(problems)
    if run.warmup is None:
        run = RunParams(run.horizon, run.resolved_warmup(), run.seed, run.reps, run.coin_mode)
    return CheckedConfig(spec, run)


@dataclass(frozen=True)
class RateTable:
    """Effective (thinned) Poisson rates for one network.

    Nodes are labelled 1..n as in the update dynamics; ``source_rates[j-1]``
    is the source's rate into node j, and ``edge_rates`` holds only strictly
    positive node-to-node rates. The relay entries are nonzero only for the
    interception variant.
    """

    n: int
    source_rates: np.ndarray
    edge_rates: dict[tuple[int, int], float]
    adversary_feed_rate: float = 0.0
    source_to_adversary: float = 0.0

    def rate(self, i: int, j: int) -> float:
        """Rate on directed edge (i, j); 0 for edges that cannot fire."""
        return self.edge_rates.get((i, j), 0.0)

    def out_rate(self, i: int) -> float:
        return sum(r for (a, _), r in self.edge_rates.items() if a == i)

    def in_rate(self, j: int) -> float:
        return sum(r for (_, b), r in self.edge_rates.items() if b == j)

    @property
    def total_rate(self) -> float:
        return (
            float(np.sum(self.source_rates))
            + sum(self.edge_rates.values())
            + self.adversary_feed_rate
            + self.source_to_adversary
        )


def build_rate_table(spec: NetworkSpec) -> RateTable:
    """Build the effective transition-rate table for a validated spec.

    Honest mode returns unthinned rates on every edge (node n included);
    under capture the tampered node's outgoing edges are thinned by p and
    its inbound gossip by 1-q. In the interception variant node n loses its
    direct source row: that rate feeds the relay instead, which forwards at
    the full per-node rate.
    """
    problems = spec.violations()
    if problems:
        raise ConfigError(problems)

    n, lam = spec.n, spec.lam
    p, q = spec.policy.p, spec.policy.q
    source = np.full(n, lam / n)
    edges: dict[tuple[int, int], float] = {}

    def put(i: int, j: int, r: float) -> None:
        if r > 0.0:
            edges[(i, j)] = r

    if spec.honest or spec.kind is NetworkKind.FCN_MITM:
        # Honest interception collapses to an honest fully connected network.
        if spec.kind is NetworkKind.URN_CAPTURE:
            for i in range(1, n + 1):
                put(i, i % n + 1, lam)
        else:
            for i in range(1, n + 1):
                for j in range(1, n + 1):
                    if i != j:
                        put(i, j, lam / (n - 1))
        if spec.kind is NetworkKind.FCN_MITM and not spec.honest:
            source[n - 1] = 0.0
            return RateTable(n, source, edges, adversary_feed_rate=lam,
                             source_to_adversary=lam / n)
        return RateTable(n, source, edges)

    if spec.kind is NetworkKind.FCN_CAPTURE:
        for i in range(1, n):
            for j in range(1, n):
                if i != j:
                    put(i, j, lam / (n - 1))
            put(i, n, (1.0 - q) * lam / (n - 1))
        for j in range(1, n):
            put(n, j, p * lam / (n - 1))
    elif spec.kind is NetworkKind.URN_CAPTURE:
        for i in range(1, n - 1):
            put(i, i + 1, lam)
        put(n - 1, n, (1.0 - q) * lam)
        put(n, 1, p * lam)
    else:  # pragma: no cover - kinds are exhaustive
        raise ConfigError([f"unknown network kind {spec.kind!r}"])
    return RateTable(n, source, edges)
