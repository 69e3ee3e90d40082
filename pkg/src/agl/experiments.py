"""Parameter sweeps, scaling fits, sim-vs-exact comparison, figure presets.

A sweep evaluates one node selector across network sizes and emits rows of
(n, node label, exact value, optional simulated mean and CI, optional
closed-form bounds). Power-law selectors m = floor(n^alpha) snap the n grid
to ceil(l^(1/alpha)) so m steps through consecutive integers instead of
plateauing. Scaling exponents come from a log-log least-squares fit over
the top decade of n, which suppresses pre-asymptotic bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic, simulator
from .model import AdversaryPolicy, ConfigError, NetworkKind, NetworkSpec


@dataclass(frozen=True)
class SweepRow:
    n: int
    node_label: str
    analytic: float | None
    sim_mean: float | None = None
    sim_ci95: float | None = None
    bound_lower: float | None = None
    bound_upper: float | None = None
    series: str | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def column(self, name: str, series: str | None = None) -> np.ndarray:
        rows = [r for r in self.rows if series is None or r.series == series]
        return np.array([getattr(r, name) for r in rows], dtype=np.float64)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    degenerate: bool = False
    n_used: int = 0


@dataclass
class ComparisonReport:
    rel_errors: np.ndarray            # per node, NaN where no exact value exists
    max_rel_error: float
    flagged_nodes: list[int]          # nodes whose CI excludes the exact value
    adversary_rel_error: float | None
    sim: simulator.SimReport
    exact: analytic.AnalyticAges


@dataclass(frozen=True)
class SimSettings:
    """Event budget per replication; horizon is derived from the event rate."""

    target_events: float = 2.0e5
    reps: int = 10
    seed: int = 1
    coin_mode: str = "explicit-flip"
    max_n: int = 64  # rows above this stay analytic-only


# ---------------------------------------------------------------------------
# node selectors
# ---------------------------------------------------------------------------

def _parse_selector(selector) -> tuple[str, float | int | None]:
    """Selectors: node index, "infected", "adversary", "pow:a", "transition"."""
    if isinstance(selector, int):
        return "node", selector
    if isinstance(selector, float):
        return "pow", selector
    text = str(selector)
    if text in ("infected", "adversary", "transition"):
        return text, None
    if text.startswith("node:"):
        return "node", int(text.split(":", 1)[1])
    if text.startswith("pow:"):
        alpha = float(text.split(":", 1)[1])
        if not 0.0 < alpha < 1.0:
            raise ConfigError([f"power-law exponent must be in (0,1) (got {alpha})"])
        return "pow", alpha
    raise ConfigError([f"unknown node selector {selector!r}"])


def _power_m(n: int, alpha: float) -> int:
    # epsilon guards pow() round-off right at integer boundaries
    return int(n ** alpha + 1e-9)


def snap_power_grid(n_values, alpha: float) -> list[int]:
    """Snap each n to the smallest n' with floor(n'^alpha) = floor(n^alpha)."""
    out = []
    for n in n_values:
        m = _power_m(int(n), alpha)
        if m >= 1:
            out.append(max(2, math.ceil(m ** (1.0 / alpha) - 1e-9)))
    return sorted(set(out))


def _selector_m(mode: str, arg, n: int) -> int | None:
    if mode == "node":
        return int(arg)
    if mode == "pow":
        return _power_m(n, float(arg))
    if mode == "transition":
        return int(math.sqrt(0.25 * n * math.log(n)))
    return None


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _bounds_for(spec: NetworkSpec, ages: analytic.AnalyticAges, mode: str,
                m: int | None) -> tuple[float | None, float | None]:
    p, q = spec.policy.p, spec.policy.q
    if spec.honest:
        return None, None
    if spec.kind is NetworkKind.FCN_MITM:
        if mode == "adversary":
            return spec.n / spec.lam, spec.n / spec.lam
        if mode == "node":
            return ages.v_adversary / 4.0, None
        return None, None
    if spec.kind is NetworkKind.FCN_CAPTURE:
        try:
            table = {b.label: b for b in analytic.fcn_case_bounds(spec.n, spec.lam, p, q)}
        except analytic.BoundInapplicableError:
            return None, None
        key = "vn" if mode == "infected" else "v1"
        for label, b in table.items():
            if label.startswith(key):
                return (b.lower if b.lower > 0.0 else None,
                        b.upper if math.isfinite(b.upper) else None)
        return None, None
    # ring
    if mode == "infected":
        if q == 1.0:
            return spec.n / spec.lam, spec.n / spec.lam
        return None, None
    if p == 0.0 or m is None:
        return None, None
    b = analytic.urn_age_bounds(spec.n, spec.lam, p, m, ages.v_infected)
    return b.lower, b.upper


def _row_value(spec: NetworkSpec, ages: analytic.AnalyticAges, mode: str,
               m: int | None) -> tuple[float | None, str]:
    if mode == "adversary":
        return ages.v_adversary, "A"
    if mode == "infected":
        value = ages.v_infected
        return value, str(spec.n)
    value = float(ages.node_ages[m - 1])
    return (None if math.isnan(value) else value), str(m)


def sweep(kind: NetworkKind | str, policy: AdversaryPolicy | None, n_values,
          node_selector, with_sim: bool = False, *, honest: bool = False,
          lam: float = 1.0, sim: SimSettings | None = None,
          series: str | None = None) -> SweepResult:
    """Evaluate one node selector across sizes; one row per surviving n."""
    kind = NetworkKind(kind)
    policy = policy or AdversaryPolicy()
    sim = sim or SimSettings()
    mode, arg = _parse_selector(node_selector)
    ns = [int(v) for v in n_values]
    if mode == "pow":
        ns = snap_power_grid(ns, float(arg))
    result = SweepResult()
    for n in ns:
        spec = NetworkSpec(kind, n, lam, policy, honest=honest)
        m = _selector_m(mode, arg, n)
        if mode in ("node", "pow", "transition"):
            if m is None or m < 1:
                result.skipped.append((n, f"selector gives m={m} < 1"))
                continue
            if m >= n:
                result.skipped.append((n, f"selector gives m={m} >= n"))
                continue
        if mode == "adversary" and (kind is not NetworkKind.FCN_MITM or honest):
            result.skipped.append((n, "no adversary node in this mode"))
            continue
        ages = analytic.ages_for_spec(spec)
        value, label = _row_value(spec, ages, mode, m)
        lo, hi = _bounds_for(spec, ages, mode, m)
        sim_mean = sim_ci = None
        if with_sim and n <= sim.max_n:
            horizon = sim.target_events / simulator.event_rate(spec, sim.coin_mode)
            report = simulator.replicate(
                simulator.SimConfig(spec, horizon, seed=sim.seed,
                                    coin_mode=sim.coin_mode), sim.reps)
            if mode == "adversary":
                sim_mean = report.mean_age_adversary
                sim_ci = report.ci95_adversary
            else:
                j = (n if mode == "infected" else m) - 1
                sim_mean = float(report.mean_age[j])
                sim_ci = float(report.ci95[j]) if report.ci95 is not None else None
        result.rows.append(SweepRow(n, label, value, sim_mean, sim_ci, lo, hi, series))
    return result


def scaling_exponent(rows) -> ScalingFit:
    """Least-squares slope of log v against log n over the top decade of n.

    Needs at least 3 rows spanning a factor of 4 in n; constant values are
    reported as exponent 0 with the degeneracy flag set.
    """
    pairs = [(float(n), float(v)) for n, v in rows]
    if len(pairs) < 3:
        raise ValueError("need at least 3 (n, v) rows")
    ns = np.array([a for a, _ in pairs])
    vs = np.array([b for _, b in pairs])
    if ns.max() < 4.0 * ns.min():
        raise ValueError("rows must span at least a factor 4 in n")
    if np.any(vs <= 0.0):
        raise ValueError("values must be positive for a log-log fit")
    keep = ns >= ns.max() / 10.0
    if keep.sum() < 3:
        keep = ns >= math.sqrt(ns.min() * ns.max())
    if keep.sum() < 3:
        keep = np.ones_like(ns, dtype=bool)
    log_v = np.log(vs[keep])
    if np.ptp(log_v) < 1e-12:
        return ScalingFit(0.0, degenerate=True, n_used=int(keep.sum()))
    slope = np.polyfit(np.log(ns[keep]), log_v, 1)[0]
    return ScalingFit(float(slope), n_used=int(keep.sum()))


def compare_sim_analytic(kind: NetworkKind | str, policy: AdversaryPolicy | None,
                         n: int, *, honest: bool = False, lam: float = 1.0,
                         sim: SimSettings | None = None) -> ComparisonReport:
    """Per-node relative error of the simulator against the exact recursions.

    Nodes without an exact value (the intercepted node) carry NaN and are
    excluded from the maximum; nodes whose CI excludes the exact value are
    flagged.
    """
    kind = NetworkKind(kind)
    sim = sim or SimSettings()
    spec = NetworkSpec(kind, n, lam, policy or AdversaryPolicy(), honest=honest)
    ages = analytic.ages_for_spec(spec)
    horizon = sim.target_events / simulator.event_rate(spec, sim.coin_mode)
    report = simulator.replicate(
        simulator.SimConfig(spec, horizon, seed=sim.seed, coin_mode=sim.coin_mode),
        sim.reps)
    exact = ages.node_ages
    rel = np.abs(report.mean_age - exact) / exact
    flagged = []
    if report.ci95 is not None:
        for j in range(n):
            if not math.isnan(exact[j]) and abs(report.mean_age[j] - exact[j]) > report.ci95[j]:
                flagged.append(j + 1)
    adv_rel = None
    if ages.v_adversary is not None and report.mean_age_adversary is not None:
        adv_rel = abs(report.mean_age_adversary - ages.v_adversary) / ages.v_adversary
    return ComparisonReport(rel, float(np.nanmax(rel)), flagged, adv_rel, report, ages)


# ---------------------------------------------------------------------------
# figure presets
# ---------------------------------------------------------------------------

def _geometric(lo: int, hi: int, factor: float = 2.0) -> list[int]:
    out = []
    x = float(lo)
    while x <= hi + 0.5:
        out.append(int(round(x)))
        x *= factor
    return sorted(set(out))

_FCN_GRID = _geometric(4, 4096)
_URN_GRID = _geometric(32, 10000, 1.5)

_PRESETS = {
    "fig4": dict(kind=NetworkKind.FCN_CAPTURE, p=0.5, q=1.0,
                 series=[("v1", "node:1", _FCN_GRID), ("vn", "infected", _FCN_GRID)]),
    "fig5": dict(kind=NetworkKind.FCN_CAPTURE, p=0.0, q=0.5,
                 series=[("v1", "node:1", _FCN_GRID), ("vn", "infected", _FCN_GRID)]),
    "fig6": dict(kind=NetworkKind.FCN_CAPTURE, p=0.5, q=0.5,
                 series=[("v1", "node:1", _FCN_GRID), ("vn", "infected", _FCN_GRID)]),
    "fig7": dict(kind=NetworkKind.FCN_MITM, p=1.0, q=1.0,
                 series=[("v1", "node:1", _FCN_GRID), ("vA", "adversary", _FCN_GRID)]),
    "fig8": dict(kind=NetworkKind.URN_CAPTURE, p=0.5, q=1.0,
                 series=[("vn", "infected", _URN_GRID),
                         ("m_pow_0.3", "pow:0.3", _URN_GRID),
                         ("transition", "transition", _URN_GRID),
                         ("m_pow_0.8", "pow:0.8", _URN_GRID)]),
    "fig9": dict(kind=NetworkKind.URN_CAPTURE, p=0.0, q=0.5,
                 series=[("m_pow_0.3", "pow:0.3", _URN_GRID),
                         ("m_pow_0.4", "pow:0.4", _URN_GRID),
                         ("m_pow_0.8", "pow:0.8", _URN_GRID)]),
    "fig10": dict(kind=NetworkKind.URN_CAPTURE, p=0.5, q=0.5,
                  series=[("m_pow_0.3", "pow:0.3", _URN_GRID),
                          ("m_pow_0.8", "pow:0.8", _URN_GRID),
                          ("vn", "infected", _URN_GRID)]),
}

FIGURE_IDS = tuple(sorted(_PRESETS, key=lambda s: int(s[3:])))


def figure_preset(fig_id: str, with_sim: bool = False,
                  sim: SimSettings | None = None) -> SweepResult:
    """Run one of the canned sweeps (lambda = 1 throughout); plot-ready rows.

    Analytic and bound columns are deterministic; sim columns appear only
    when requested and only on rows small enough to converge quickly.
    """
    if fig_id not in _PRESETS:
        raise ConfigError([f"unknown figure id {fig_id!r}; valid: {', '.join(FIGURE_IDS)}"])
    preset = _PRESETS[fig_id]
    policy = AdversaryPolicy(preset["p"], preset["q"])
    merged = SweepResult()
    for name, selector, grid in preset["series"]:
        part = sweep(preset["kind"], policy, grid, selector, with_sim,
                     sim=sim, series=name)
        merged.rows.extend(part.rows)
        merged.skipped.extend(part.skipped)
    return merged
