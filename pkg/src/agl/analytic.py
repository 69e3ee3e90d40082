"""Exact long-run expected ages from the stationarity recursions.

Every quantity here comes from one identity: for a stationary test function
of the network state, the unit age drift balances the rate-weighted expected
jumps across all Poisson transitions. Applied to "true age of the node with
the freshest claimed stamp in a set", that identity yields coupled linear
recursions in the set size, which this module solves exactly:

* fully connected network with a captured node: subset chain closed against
  the captured node's age;
* interception (relay-in-the-middle) variant: two downward chains fed by the
  relay's age n/lambda;
* unidirectional ring with a captured node: prefix-product formula closed
  against the ring-end age.

The chains are affine first-order recurrences, so they are solved by prefix
products plus one suffix sum (no iteration, no tolerance), vectorized so a
full sweep over n in the thousands stays cheap.

All functions are pure; nodes are labelled 1..n with node n captured.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import AdversaryPolicy, ConfigError, NetworkKind, NetworkSpec


class BoundInapplicableError(ValueError):
    """A closed-form bound is undefined at the requested parameters."""


@dataclass(frozen=True)
class AnalyticAges:
    """Exact stationary expected ages for one network.

    ``node_ages[j-1]`` is the per-node expectation for user node j (NaN when
    the model gives no closed form, e.g. the intercepted node itself).
    ``v_regular`` is the mode's underlying chain: freshest-of-k-subset values
    for the fully connected modes, per-node values v_m for the ring.
    """

    node_ages: np.ndarray
    v_regular: np.ndarray
    v_infected: float | None
    v_adversary: float | None = None
    v_sets_with_n: np.ndarray | None = None
    v_freshest_prefix: np.ndarray | None = None  # ring: freshest of {1..m}, m = 1..n-1

    @property
    def v1(self) -> float:
        return float(self.v_regular[0])


@dataclass(frozen=True)
class AgeBounds:
    """A closed-form [lower, upper] envelope with a regime label."""

    lower: float
    upper: float
    label: str

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"bound ordering violated: {self.lower} > {self.upper} ({self.label})")

    def contains(self, value: float, rel_slack: float = 1e-9) -> bool:
        pad = rel_slack * max(1.0, abs(value))
        return self.lower - pad <= value <= self.upper + pad


# ---------------------------------------------------------------------------
# small numeric helpers
# ---------------------------------------------------------------------------

_harmonic_lock = threading.Lock()
_harmonic_cumsum = np.array([0.0])  # _harmonic_cumsum[k] = H_k


def harmonic_number(n: int) -> float:
    """H_n = sum_{k=1}^{n} 1/k, cached cumulatively for cheap sweeps."""
    if n < 1:
        raise ValueError(f"harmonic_number needs n >= 1 (got {n})")
    global _harmonic_cumsum
    if n >= _harmonic_cumsum.size:
        with _harmonic_lock:
            if n >= _harmonic_cumsum.size:
                hi = max(n, 2 * _harmonic_cumsum.size)
                tail = 1.0 / np.arange(_harmonic_cumsum.size, hi + 1, dtype=np.float64)
                grown = np.concatenate([_harmonic_cumsum, tail])
                np.cumsum(grown[_harmonic_cumsum.size - 1:], out=grown[_harmonic_cumsum.size - 1:])
                _harmonic_cumsum = grown
    return float(_harmonic_cumsum[n])


def _solve_backward(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Solve x[k] = alpha[k] x[k+1] + beta[k], k = K-1..0, with x[K] = 0.

    Closed form via prefix products and a suffix sum. Valid while the prefix
    products stay representable; the chains here have 0 < alpha < 1 with at
    most polynomial decay of the product, far from underflow for n <= 1e5.
    The suffix sums are positive-term, so plain float64 keeps them at a few
    ulps times the length.
    """
    prod = np.empty(alpha.size + 1)
    prod[0] = 1.0
    np.cumprod(alpha, out=prod[1:])
    weighted = prod[:-1] * beta
    suffix = np.cumsum(weighted[::-1])[::-1]
    return suffix / prod[:-1]


def _require_valid(n: int, lam: float, p: float, q: float) -> None:
    spec = NetworkSpec(NetworkKind.FCN_CAPTURE, n, lam, AdversaryPolicy(p, q))
    problems = spec.violations()
    if problems:
        raise ConfigError(problems)


# ---------------------------------------------------------------------------
# fully connected network, captured node
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _fcn_affine_chain(n: int, lam: float, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Subset-chain coefficients (a, b) with v_{S_k} = a_k + b_k * v_n.

    Independent of q (q only enters the scalar closure), so sweeps that vary
    q or evaluate several bounds at one (n, lam, p) share the scan. Cached
    arrays are frozen read-only.
    """
    k = np.arange(1, n, dtype=np.float64)
    g = (n - k - 1) / (n - 1)
    denom = 1.0 / n + g + p / (n - 1)
    alpha = g / denom
    a = _solve_backward(alpha, 1.0 / (k * lam * denom))
    b = _solve_backward(alpha, (p / (n - 1)) / denom)
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def _fcn_close_vn(n: int, lam: float, q: float, a1: float, b1: float) -> float:
    if q == 1.0:
        return n / lam
    return (1.0 / lam + (1.0 - q) * a1) / (1.0 / n + (1.0 - q) * (1.0 - b1))


def fcn_v1_vn(n: int, lam: float, p: float, q: float) -> tuple[float, float]:
    """Regular-node and captured-node expected ages, scalars only.

    Same exact values as :func:`fcn_capture_ages`, skipping the per-set
    vectors; cheap enough to call for every n of a dense bound sweep.
    """
    _require_valid(n, lam, p, q)
    a, b = _fcn_affine_chain(n, lam, p)
    v_n = _fcn_close_vn(n, lam, q, float(a[0]), float(b[0]))
    return float(a[0] + b[0] * v_n), float(v_n)


def fcn_capture_ages(n: int, lam: float, p: float, q: float) -> AnalyticAges:
    """Exact ages in the fully connected network with node n captured.

    The freshest-of-k chain depends on the captured node's age v_n and
    vice versa, so each chain value is propagated as a_k + b_k * v_n from
    k = n-1 down to k = 1 and the loop is closed by the scalar linear
    equation for v_n. At q = 1 the captured node is isolated from gossip
    and v_n = n/lambda exactly.
    """
    _require_valid(n, lam, p, q)
    a, b = _fcn_affine_chain(n, lam, p)
    v_n = _fcn_close_vn(n, lam, q, float(a[0]), float(b[0]))
    v_sets = a + b * v_n
    if not (np.all(np.isfinite(v_sets)) and math.isfinite(v_n)):
        raise ArithmeticError("non-finite age from the subset chain")
    node_ages = np.full(n, v_sets[0])
    node_ages[n - 1] = v_n
    return AnalyticAges(node_ages=node_ages, v_regular=v_sets, v_infected=float(v_n))


def fcn_case_bounds(n: int, lam: float, p: float, q: float) -> list[AgeBounds]:
    """Closed-form age bounds for the (p, q) regime of the captured FCN.

    Regimes: full inbound blocking (q=1, p>0) gives two-sided v1 bounds of
    order n; a mute tamperer (p=0) caps v1 at e times the harmonic sum; a
    partially open node (p>0, q<1) caps v1 at a 1/(1-p)-inflated harmonic
    sum, undefined at p=1.
    """
    _require_valid(n, lam, p, q)
    h = harmonic_number(n - 1)
    out: list[AgeBounds] = []
    if q == 1.0:
        v_n = n / lam
        out.append(AgeBounds(v_n, v_n, "vn[q=1]"))
        if p > 0.0:
            lower = (h - (n - 1) / n) / lam + p * v_n / 2.0
            out.append(AgeBounds(lower, h / lam + p * v_n, "v1[p>0,q=1]"))
            return out
    if p == 0.0:
        cap = math.exp((n - 1) * math.log1p(1.0 / (n - 1)))
        out.append(AgeBounds(0.0, cap * h / lam, "v1[p=0]"))
        if q < 1.0:
            v1, _ = fcn_v1_vn(n, lam, p, q)
            out.append(AgeBounds(0.0, 1.0 / (lam * (1.0 - q)) + v1, "vn[q<1]"))
        return out
    # p > 0, q < 1
    if p == 1.0:
        raise BoundInapplicableError("v1 bound inapplicable at p=1 (1/(1-p) diverges)")
    v1, _ = fcn_v1_vn(n, lam, p, q)
    out.append(AgeBounds(0.0, (h / lam + p / (lam * (1.0 - q))) / (1.0 - p), "v1[p>0,q<1]"))
    out.append(AgeBounds(0.0, 1.0 / (lam * (1.0 - q)) + v1, "vn[q<1]"))
    return out


@dataclass(frozen=True)
class MonotonicityVerdict:
    ok: bool
    strict: bool
    violation: str | None = None


def fcn_p_monotonicity_check(n: int, lam: float, p_grid: list[float]) -> MonotonicityVerdict:
    """Check that a fully blocking tamperer gains by raising p (q fixed at 1).

    Asserts v1 strictly increasing across the grid and, for every subset
    size k, v_n - v_{set k} positive and strictly decreasing in p. The n=2
    network has no regular-to-regular gossip and is exactly degenerate
    (v1 = v_n for all p), so strictness is not required there.
    """
    grid = list(p_grid)
    if sorted(grid) != grid:
        raise ValueError("p_grid must be ascending")
    strict = n > 2
    prev_v1: float | None = None
    prev_gaps: np.ndarray | None = None
    for p in grid:
        ages = fcn_capture_ages(n, lam, p, 1.0)
        gaps = ages.v_infected - ages.v_regular
        tol = 1e-12 * n / lam
        if strict and np.any(gaps <= 0.0):
            k_bad = int(np.argmax(gaps <= 0.0)) + 1
            return MonotonicityVerdict(False, strict, f"v_n - v_set[{k_bad}] not positive at p={p}")
        if not strict and np.any(gaps < -tol):
            return MonotonicityVerdict(False, strict, f"v_n - v_set negative at p={p}")
        if prev_v1 is not None:
            increased = ages.v1 > prev_v1 if strict else ages.v1 >= prev_v1 - tol
            if not increased:
                return MonotonicityVerdict(False, strict, f"v1 not increasing into p={p}")
            shrunk = gaps < prev_gaps if strict else gaps <= prev_gaps + tol
            if not np.all(shrunk):
                k_bad = int(np.argmin(shrunk)) + 1
                return MonotonicityVerdict(
                    False, strict, f"v_n - v_set[{k_bad}] not decreasing into p={p}")
        prev_v1, prev_gaps = ages.v1, gaps
    return MonotonicityVerdict(True, strict)


# ---------------------------------------------------------------------------
# interception (relay-in-the-middle) on the fully connected network
# ---------------------------------------------------------------------------

def mitm_ages(n: int, lam: float) -> AnalyticAges:
    """Exact ages under interception of node n's source feed.

    The relay only hears the source (rate lambda/n), so its age is exactly
    n/lambda. Sets containing node n satisfy a downward chain fed by the
    relay age; plain regular-node sets then follow a second downward chain.
    Exact coefficients are used throughout (no large-n rounding of the
    1/(n-1) gossip weights). The intercepted node's own age has no closed
    chain here and is reported as NaN; simulation covers it.
    """
    _require_valid(n, lam, 1.0, 1.0)
    v_a = n / lam
    k = np.arange(1, n, dtype=np.float64)
    # chain for sets {k regulars} + node n; the coupling coefficient
    # (k+1)(n-1-k)/(n-1) vanishes at k = n-1, which is exactly the base case
    c = (k + 1.0) * (n - 1.0 - k) / (n - 1.0)
    denom_w = k / n + c + 1.0
    w = _solve_backward(c / denom_w, (1.0 / lam + v_a) / denom_w)
    g = (n - k - 1.0) / (n - 1.0)
    denom_s = 1.0 / n + g + 1.0 / (n - 1.0)
    s = _solve_backward(g / denom_s, (1.0 / (k * lam) + w / (n - 1.0)) / denom_s)
    node_ages = np.full(n, s[0])
    node_ages[n - 1] = np.nan
    return AnalyticAges(node_ages=node_ages, v_regular=s, v_infected=None,
                        v_adversary=float(v_a), v_sets_with_n=w)


# ---------------------------------------------------------------------------
# unidirectional ring, captured node
# ---------------------------------------------------------------------------

def prefix_products(n: int, m: int) -> np.ndarray:
    """Products prod_{k=1}^{j} 1/(1 + k/n) for j = 0..m (entry 0 is 1).

    Accumulated in log space; entries below the float64 floor round to 0,
    which downstream sums tolerate (they are dominated by the early terms).
    """
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n (got m={m}, n={n})")
    logs = np.concatenate([[0.0], -np.log1p(np.arange(1, m + 1, dtype=np.float64) / n)])
    return np.exp(np.cumsum(logs))


def _ring_partial_sums(products: np.ndarray) -> np.ndarray:
    """C[j] = sum_{i=1}^{j} products[i]; extended-precision accumulation."""
    sums = np.concatenate(
        [[0.0], np.cumsum(products[1:].astype(np.longdouble)).astype(np.float64)])
    return sums


def urn_capture_ages(n: int, lam: float, p: float, q: float) -> AnalyticAges:
    """Exact ages on the unidirectional ring with node n captured.

    v_m unrolls along the ring into a prefix-product sum anchored at the
    freshest-of-{1..m} value, which in turn is a known affine function of
    the ring-end age v_n. v_{n-1} is therefore affine in v_n and the scalar
    loop closes exactly. Special regimes are taken before the generic path:
    q = 1 isolates node n (v_n = n/lambda); p = 0 kills the injected ring
    edge and the anchor collapses to n/(m lambda).
    """
    _require_valid(n, lam, p, q)
    products = prefix_products(n, n - 1)
    sums = _ring_partial_sums(products)
    m = np.arange(1, n, dtype=np.float64)

    def anchor(v_n: float) -> np.ndarray:
        # freshest-of-{1..m} for m = 1..n-1
        if p == 0.0:
            return n / (m * lam)
        return (1.0 + p * lam * v_n) / (lam * (p + m / n))

    if q == 1.0:
        v_n = n / lam
    else:
        if p == 0.0:
            affine_const = sums[n - 2] / lam + (n / ((n - 1.0) * lam)) * products[n - 2]
            affine_slope = 0.0
        else:
            scale = products[n - 2] / (p + (n - 1.0) / n)
            affine_const = sums[n - 2] / lam + scale / lam
            affine_slope = p * scale
        v_n = (1.0 / lam + (1.0 - q) * affine_const) / (
            1.0 / n + (1.0 - q) * (1.0 - affine_slope))
    anchors = anchor(v_n)
    v_m = sums[:-1] / lam + anchors * products[:-1]
    if not (np.all(np.isfinite(v_m)) and math.isfinite(v_n)):
        raise ArithmeticError("non-finite age from the ring chain")
    node_ages = np.concatenate([v_m, [v_n]])
    return AnalyticAges(node_ages=node_ages, v_regular=v_m, v_infected=float(v_n),
                        v_freshest_prefix=anchors)


def urn_age_bounds(n: int, lam: float, p: float, m: int, v_n: float) -> AgeBounds:
    """Two-sided sandwich for the ring age v_m given the ring-end age v_n.

    Lower side weighs the injected term by p, upper side inflates the
    prefix-product sum by 1/p; undefined at p = 0.
    """
    if p == 0.0:
        raise BoundInapplicableError("upper bound inapplicable at p=0 (1/p diverges)")
    if not 1 <= m <= n - 1:
        raise ValueError(f"need 1 <= m <= n-1 (got m={m}, n={n})")
    products = prefix_products(n, m)
    total = float(_ring_partial_sums(products)[m])
    tail = float(products[m])
    return AgeBounds(total / lam + p * v_n * tail,
                     total / (p * lam) + v_n * tail,
                     f"vm[m={m}]")


# ---------------------------------------------------------------------------
# asymptotic lemma quantities
# ---------------------------------------------------------------------------

def lemma_sum(n: int, n0: int) -> float:
    """sum_{j=1}^{n0} prod_{k=1}^{j} 1/(1 + k/n), the ring's sqrt(n) driver."""
    if not 1 <= n0 <= n:
        raise ValueError(f"need 1 <= n0 <= n (got n0={n0}, n={n})")
    products = prefix_products(n, n0)
    return float(np.sum(products[1:], dtype=np.longdouble))


def lemma_envelopes(n: int, n0: int) -> AgeBounds:
    """Gaussian envelopes sandwiching :func:`lemma_sum` term by term."""
    if not 1 <= n0 <= n:
        raise ValueError(f"need 1 <= n0 <= n (got n0={n0}, n={n})")
    j2 = np.arange(1, n0 + 1, dtype=np.float64) ** 2
    lower = float(np.sum(np.exp(-j2 / n), dtype=np.longdouble))
    upper = float(np.sum(np.exp(-j2 / (4.0 * n)), dtype=np.longdouble))
    return AgeBounds(lower, upper, f"gaussian-envelope[n0={n0}]")


# ---------------------------------------------------------------------------
# honest baselines
# ---------------------------------------------------------------------------

def honest_ages(kind: NetworkKind, n: int, lam: float) -> AnalyticAges:
    """Exact per-node age with no adversary (all stamps truthful).

    Both honest topologies are symmetric, so one freshest-of-k chain over
    set sizes k = 1..n closes at the full set, whose age is 1/lambda. The
    interception kind without its relay is just the honest complete graph.
    """
    _require_valid(n, lam, 1.0, 1.0)
    k = np.arange(1, n + 1, dtype=np.float64)
    if kind is NetworkKind.URN_CAPTURE:
        inbound = (k < n).astype(np.float64)  # the full ring has no outside sender
        denom = k / n + inbound
        beta = 1.0 / (lam * denom)
    else:
        inbound = (n - k) / (n - 1.0)
        denom = 1.0 / n + inbound
        beta = 1.0 / (k * lam * denom)
    chain = _solve_backward(inbound / denom, beta)
    node_ages = np.full(n, chain[0])
    return AnalyticAges(node_ages=node_ages, v_regular=chain, v_infected=None)


def ages_for_spec(spec: NetworkSpec) -> AnalyticAges:
    """Dispatch to the exact evaluator matching a network spec."""
    if spec.honest:
        return honest_ages(spec.kind, spec.n, spec.lam)
    if spec.kind is NetworkKind.FCN_CAPTURE:
        return fcn_capture_ages(spec.n, spec.lam, spec.policy.p, spec.policy.q)
    if spec.kind is NetworkKind.FCN_MITM:
        return mitm_ages(spec.n, spec.lam)
    return urn_capture_ages(spec.n, spec.lam, spec.policy.p, spec.policy.q)
