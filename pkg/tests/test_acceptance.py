"""End-to-end acceptance gate.

Every guarantee the package makes is pinned here with its tolerance and,
where stated, a wall-clock budget: exact identities, dense-oracle
equivalence at small n, closed-form bound suites across the full size
range, asymptotic envelopes, desk-scale scaling fits, and Monte-Carlo
agreement between the event engine and the recursions. One line is printed
per criterion (run with ``pytest -s`` to see them on success).
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

import oracles
from agl import analytic as an
from agl import experiments as ex
from agl import simulator as sim
from agl.model import AdversaryPolicy, NetworkKind, NetworkSpec

PQ_GRID = [(1.0, 1.0), (0.5, 1.0), (0.0, 0.5), (0.5, 0.5)]


def _report(name: str, elapsed: float, detail: str) -> None:
    print(f"PASS {name}: {detail} [{elapsed:.2f}s]")


def _exact_node_ages(kind: str, n: int, p: float, q: float, honest: bool) -> np.ndarray:
    spec = NetworkSpec(NetworkKind(kind), n, 1.0, AdversaryPolicy(p, q), honest=honest)
    return an.ages_for_spec(spec).node_ages


def test_isolated_node_exact_identity():
    t0 = time.perf_counter()
    for n in (2, 10, 100, 10 ** 4):
        for lam in (1.0, 2.0):
            for p in (0.0, 0.5, 1.0):
                vn = an.fcn_capture_ages(n, lam, p, 1.0).v_infected
                assert abs(vn - n / lam) <= 1e-12 * (n / lam)
                vn = an.urn_capture_ages(n, lam, p, 1.0).v_infected
                assert abs(vn - n / lam) <= 1e-12 * (n / lam)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report("isolated_node_identity", elapsed,
            "blocked-inbound captured node ages exactly n/lambda")


def test_small_network_dense_oracle_agreement():
    t0 = time.perf_counter()
    checked = 0
    for n in range(2, 7):
        for p, q in PQ_GRID:
            ages = an.fcn_capture_ages(n, 1.0, p, q)
            chain, vn = oracles.fcn_capture_dense(n, 1.0, p, q)
            assert np.max(np.abs(ages.v_regular - chain) / chain) <= 1e-10
            assert abs(ages.v_infected - vn) <= 1e-10 * vn

            per_node = oracles.urn_capture_dense(n, 1.0, p, q)
            urn = an.urn_capture_ages(n, 1.0, p, q)
            assert np.max(np.abs(urn.node_ages - per_node) / per_node) <= 1e-10

            va, w, s = oracles.mitm_dense(n, 1.0)
            mitm = an.mitm_ages(n, 1.0)
            assert abs(mitm.v_adversary - va) <= 1e-10 * va
            assert np.max(np.abs(mitm.v_sets_with_n - w) / w) <= 1e-10
            assert np.max(np.abs(mitm.v_regular - s) / s) <= 1e-10
            checked += 3
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report("small_network_dense_oracle", elapsed,
            f"{checked} recursion/dense-solve matches at 1e-10 relative")


def test_fcn_regime_bounds_full_range():
    t0 = time.perf_counter()
    for n in range(3, 10 ** 4 + 1):
        h = an.harmonic_number(n - 1)
        # full blocking with injection: two-sided linear-order envelope
        v1, vn = an.fcn_v1_vn(n, 1.0, 0.5, 1.0)
        assert vn == n
        assert (h - (n - 1) / n) + 0.5 * n / 2.0 <= v1 <= h + 0.5 * n
        # mute tamperer: e-capped harmonic upper bound, and a bounded
        # infected-node excess while any inbound trickle survives
        v1, vn = an.fcn_v1_vn(n, 1.0, 0.0, 0.5)
        assert v1 <= math.exp((n - 1) * math.log1p(1.0 / (n - 1))) * h
        assert vn - v1 <= 1.0 / (1.0 - 0.5) + 1e-12
        # partial injection and acceptance: inflated harmonic upper bound
        v1, vn = an.fcn_v1_vn(n, 1.0, 0.5, 0.5)
        assert v1 <= (h + 0.5 / (1.0 - 0.5)) / (1.0 - 0.5)
    # the packaged bound evaluator states the same envelopes
    for n in range(3, 10 ** 4 + 1, 97):
        v1, vn = an.fcn_v1_vn(n, 1.0, 0.5, 1.0)
        bounds = {b.label: b for b in an.fcn_case_bounds(n, 1.0, 0.5, 1.0)}
        assert bounds["v1[p>0,q=1]"].contains(v1)
        assert bounds["vn[q=1]"].lower == vn
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    _report("fcn_regime_bounds", elapsed,
            "v1 envelopes hold for all n in [3, 1e4] across the three regimes")


def test_blocking_adversary_gains_with_p():
    t0 = time.perf_counter()
    grid = [round(0.1 * i, 1) for i in range(11)]
    for n in (10, 100, 1000):
        verdict = an.fcn_p_monotonicity_check(n, 1.0, grid)
        assert verdict.ok and verdict.strict, verdict.violation
    elapsed = time.perf_counter() - t0
    _report("blocking_adversary_monotone_in_p", elapsed,
            "v1 strictly increasing over p in {0,0.1,...,1} at n in {10,100,1000}")


def test_interception_floor_inequalities():
    t0 = time.perf_counter()
    for n in range(3, 10 ** 4 + 1):
        ages = an.mitm_ages(n, 1.0)
        va = ages.v_adversary
        assert va == n
        assert np.all(ages.v_sets_with_n >= va / 2.0 - 1e-9 * va)
        assert ages.v1 >= va / 4.0 - 1e-9 * va
    elapsed = time.perf_counter() - t0
    _report("interception_floors", elapsed,
            "relay age n, with-node sets >= half, regular nodes >= quarter, all n in [3, 1e4]")


def test_ring_sandwich_all_nodes():
    t0 = time.perf_counter()
    for n in (100, 10 ** 3, 10 ** 4):
        products = an.prefix_products(n, n - 1)
        sums = np.concatenate(
            [[0.0], np.cumsum(products[1:].astype(np.longdouble)).astype(np.float64)])
        for p in (0.25, 0.5, 1.0):
            for q in (0.5, 1.0):
                ages = an.urn_capture_ages(n, 1.0, p, q)
                vn = ages.v_infected
                lower = sums[1:] + p * vn * products[1:]
                upper = sums[1:] / p + vn * products[1:]
                pad = 1e-9 * np.maximum(1.0, np.abs(ages.v_regular))
                assert np.all(lower - pad <= ages.v_regular)
                assert np.all(ages.v_regular <= upper + pad)
                # the packaged evaluator states the same interval
                for m in (1, n // 2, n - 1):
                    b = an.urn_age_bounds(n, 1.0, p, m, vn)
                    assert b.lower == pytest.approx(float(lower[m - 1]), rel=1e-12)
                    assert b.upper == pytest.approx(float(upper[m - 1]), rel=1e-12)
    elapsed = time.perf_counter() - t0
    _report("ring_sandwich", elapsed,
            "exact v_m inside its two-sided interval for every m, p, q, n tested")


def test_prefix_product_envelopes_and_sqrt_sum():
    t0 = time.perf_counter()
    for n in (10, 100, 10 ** 4):
        j = np.arange(0, n + 1, dtype=np.float64)
        prods = an.prefix_products(n, n)
        assert np.all(np.exp(-j ** 2 / n) <= prods + 1e-300)
        assert np.all(prods <= np.exp(-j ** 2 / (4.0 * n)) * (1.0 + 1e-12))
    ratio = an.lemma_sum(10 ** 6, 10 ** 6) / 1000.0
    assert 0.85 <= ratio <= 1.80
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report("gaussian_envelopes", elapsed,
            f"pointwise product sandwich holds; sum/sqrt(n) = {ratio:.4f} at n = 1e6")


def test_desk_scale_scaling_fits():
    t0 = time.perf_counter()
    grid = [int(round(10 ** e)) for e in np.linspace(3.0, 4.0, 12)]

    rows = ex.sweep(NetworkKind.FCN_CAPTURE, AdversaryPolicy(0.5, 1.0), grid, "node:1").rows
    fit = ex.scaling_exponent([(r.n, r.analytic) for r in rows])
    assert abs(fit.exponent - 1.0) <= 0.05

    worst = max(an.fcn_v1_vn(n, 1.0, 0.0, 0.5)[0] / an.harmonic_number(n - 1)
                for n in range(10 ** 3, 10 ** 4 + 1, 9))
    assert worst <= math.e

    rows = ex.sweep(NetworkKind.URN_CAPTURE, AdversaryPolicy(0.5, 1.0), grid, "pow:0.8").rows
    fit8 = ex.scaling_exponent([(r.n, r.analytic) for r in rows])
    assert abs(fit8.exponent - 0.5) <= 0.05

    rows = ex.sweep(NetworkKind.URN_CAPTURE, AdversaryPolicy(0.0, 0.5), grid, "pow:0.3").rows
    fit3 = ex.scaling_exponent([(r.n, r.analytic) for r in rows])
    assert abs(fit3.exponent - 0.7) <= 0.05

    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _report("desk_scale_scaling_fits", elapsed,
            f"exponents {fit.exponent:.3f}/1.0, {fit8.exponent:.3f}/0.5, "
            f"{fit3.exponent:.3f}/0.7; mute-adversary v1/H <= e")


def test_simulation_matches_exact_values():
    t0 = time.perf_counter()
    worst = 0.0
    for kind, n in (("fcn-capture", 20), ("urn-capture", 50)):
        for case in PQ_GRID + ["honest"]:
            honest = case == "honest"
            p, q = (1.0, 1.0) if honest else case
            spec = NetworkSpec(NetworkKind(kind), n, 1.0, AdversaryPolicy(p, q),
                               honest=honest)
            exact = _exact_node_ages(kind, n, p, q, honest)
            horizon = 1.2e6 / sim.event_rate(spec)  # >= 2e5 events per replication
            report = sim.replicate(sim.SimConfig(spec, horizon, seed=2024), 10)
            assert report.events_post_warmup >= 10 * 2 * 10 ** 5
            err = float(np.max(np.abs(report.mean_age - exact) / exact))
            worst = max(worst, err)
            assert err <= 0.05, (kind, n, case, err)
            assert report.state_violations == 0
            assert report.untainted_age_increases == 0
    elapsed = time.perf_counter() - t0
    assert elapsed <= 120.0
    _report("simulation_agreement", elapsed,
            f"every node within 5% of the exact value (worst {worst:.3f})")


def test_honest_ring_sqrt_constant():
    t0 = time.perf_counter()
    ratios = []
    for n in (400, 900):
        spec = NetworkSpec(NetworkKind.URN_CAPTURE, n, 1.0, honest=True)
        report = sim.replicate(sim.SimConfig(spec, horizon=12000.0, seed=5), 6)
        ratio = float(report.mean_age[n // 2 - 1]) / math.sqrt(n)
        ratios.append(ratio)
        assert abs(ratio - 1.25) <= 0.15 * 1.25, (n, ratio)
    elapsed = time.perf_counter() - t0
    assert elapsed <= 120.0
    _report("honest_ring_constant", elapsed,
            f"mid-ring age / sqrt(n) = {ratios[0]:.3f}, {ratios[1]:.3f} (target 1.25 +- 15%)")


def test_coin_thinning_equivalence():
    t0 = time.perf_counter()
    for kind in ("fcn-capture", "urn-capture"):
        spec = NetworkSpec(NetworkKind(kind), 10, 1.0, AdversaryPolicy(0.5, 0.5))
        a = sim.SimConfig(spec, horizon=20000.0, seed=41, coin_mode="explicit-flip")
        b = sim.SimConfig(spec, horizon=20000.0, seed=42, coin_mode="pre-thinned")
        verdict = sim.coin_mode_equivalence(a, b, reps=20)
        assert verdict.ok, verdict.diverging_nodes
    elapsed = time.perf_counter() - t0
    _report("coin_thinning_equivalence", elapsed,
            "per-packet coins and pre-thinned rates give overlapping CIs")


def test_csv_byte_determinism(tmp_path):
    t0 = time.perf_counter()
    args = [sys.executable, "-m", "agl.cli", "simulate", "--kind", "fcn-capture",
            "--n", "8", "--p", "0.5", "--q", "0.5", "--horizon", "5000",
            "--seed", "99", "--reps", "4"]
    first = subprocess.run(args + ["--out", str(tmp_path / "a.csv")],
                           capture_output=True, text=True)
    second = subprocess.run(args + ["--out", str(tmp_path / "b.csv")],
                            capture_output=True, text=True)
    assert first.returncode == 0 and second.returncode == 0, second.stderr
    a = (tmp_path / "a.csv").read_bytes()
    b = (tmp_path / "b.csv").read_bytes()
    assert a == b and a
    elapsed = time.perf_counter() - t0
    _report("csv_byte_determinism", elapsed,
            "same seed and config give byte-identical CSV across processes")
