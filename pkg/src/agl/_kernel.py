"""Compiled event loop for the gossip simulator.

One superposed Poisson clock drives everything: draw an exponential at the
total rate, pick the firing edge in proportion to its rate, apply the reset.
Age integrals are exact (closed-form ramp integral per state segment, no
sampling grid) and accumulated lazily, only when a node's true generation
time changes, so an event costs O(1) plus the categorical pick.

The RNG is splitmix64 (Vigna's public-domain finalizer), one stream per
path seeded directly with the 64-bit path seed; doubles use the top 53
bits. Chosen for bit-for-bit reproducibility independent of numpy's
generator versioning.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# edge kinds
SOURCE = 0      # zero-age delivery from the source
HONEST = 1      # keep the higher claimed stamp
OUT_COIN = 2    # tampered node sends; prob p: stamp now (accepted), else stamp 0 (dropped)
IN_COIN = 3     # tampered node receives; prob q: stamp 0 (dropped), else stamp now (accepted)
STAMP_NOW = 4   # pre-thinned tampered edge or relay feed: stamp now, always accepted

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_DNORM = 1.1102230246251565e-16  # 2**-53


@njit(inline="always")
def _next_u64(state):
    s = state + _GAMMA
    z = s
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return s, z ^ (z >> np.uint64(31))


@njit(inline="always")
def _next_double(state):
    s, z = _next_u64(state)
    return s, (z >> np.uint64(11)) * _DNORM


@njit(cache=True, nogil=True)
def run_path(n_state, src, dst, kind, rate_cumsum, p, q,
             horizon, warmup, seed, probe_node):
    """Simulate one path; returns per-node mean ages and diagnostics.

    State per node: claimed stamp U, true generation time Ubar, segment
    start, accumulated integral of (t - Ubar) over (warmup, horizon].
    ``probe_node`` >= 0 additionally records every (time, Ubar) change of
    that node, starting with the t=0 initial state.
    """
    u = np.zeros(n_state)
    ubar = np.zeros(n_state)
    seg = np.zeros(n_state)
    acc = np.zeros(n_state)
    total_rate = rate_cumsum[-1]

    probe_cap = 1024
    probe_t = np.empty(probe_cap)
    probe_v = np.empty(probe_cap)
    probe_len = 0
    if probe_node >= 0:
        probe_t[0] = 0.0
        probe_v[0] = 0.0
        probe_len = 1

    state = np.uint64(seed)
    t = 0.0
    events = np.int64(0)
    events_post = np.int64(0)
    untainted_increases = np.int64(0)
    state_violations = np.int64(0)

    while True:
        state, x = _next_double(state)
        # x in [0,1); 1-x in (0,1] keeps the log finite
        t = t - np.log(1.0 - x) / total_rate
        if t > horizon:
            break
        events += 1
        if t > warmup:
            events_post += 1
        state, x = _next_double(state)
        e = np.searchsorted(rate_cumsum, x * total_rate, side="right")
        if e >= rate_cumsum.shape[0]:
            e = rate_cumsum.shape[0] - 1
        k = kind[e]
        j = dst[e]

        if k == SOURCE:
            new_u = t
            new_ubar = t
        elif k == HONEST:
            i = src[e]
            if u[i] <= u[j]:
                continue  # ties keep the resident packet
            if ubar[i] < ubar[j] and u[i] == ubar[i]:
                untainted_increases += 1
            new_u = u[i]
            new_ubar = ubar[i]
        else:
            if k == OUT_COIN:
                state, x = _next_double(state)
                if x >= p:
                    continue  # stamp dropped to 0: never beats the resident stamp
            elif k == IN_COIN:
                state, x = _next_double(state)
                if x < q:
                    continue
            i = src[e]
            new_u = t
            new_ubar = ubar[i]

        if new_u > t or new_ubar > new_u:
            state_violations += 1

        a = seg[j]
        if a < warmup:
            a = warmup
        if t > a:
            acc[j] += (t - a) * (0.5 * (t + a) - ubar[j])
        seg[j] = t
        u[j] = new_u
        ubar[j] = new_ubar

        if j == probe_node:
            if probe_len == probe_cap:
                probe_cap *= 2
                grown_t = np.empty(probe_cap)
                grown_v = np.empty(probe_cap)
                grown_t[:probe_len] = probe_t
                grown_v[:probe_len] = probe_v
                probe_t = grown_t
                probe_v = grown_v
            probe_t[probe_len] = t
            probe_v[probe_len] = new_ubar
            probe_len += 1

    for j in range(n_state):
        a = seg[j]
        if a < warmup:
            a = warmup
        if horizon > a:
            acc[j] += (horizon - a) * (0.5 * (horizon + a) - ubar[j])

    mean_age = acc / (horizon - warmup)
    return (mean_age, events, events_post, untainted_increases, state_violations,
            u, ubar, probe_t[:probe_len], probe_v[:probe_len])
