"""Inner loops for Monte Carlo simulation and exhaustive path enumeration.

Each kernel has a numba version (``*_nb``) and a vectorised numpy version
(``*_np``) with identical semantics.  The simulators draw from the same
counter-keyed SplitMix64 streams, so both backends return bit-identical
per-path results for a given seed.

State indices are 0, 1, 2 for the step values 1, 0, -1.
"""
import numpy as np

from ._accel import njit, resolve_backend

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
ONE = np.uint64(1)
INV53 = 1.0 / 9007199254740992.0

STEP_VALUES = np.array([1, 0, -1], dtype=np.int64)

OUT_UPPER = 1
OUT_LOWER = -1
OUT_TRUNCATED = 0


def cumulative_rows(P):
    """Cumulative row sums for inverse-CDF sampling.

    Trailing categories with zero mass are forced to close at exactly 1.0
    so rounding can never select an impossible transition.
    """
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    cum = np.empty((P.shape[0], 2))
    for i, row in enumerate(P):
        c0 = row[0]
        c1 = row[0] + row[1]
        if row[2] == 0.0:
            c1 = 1.0
            if row[1] == 0.0:
                c0 = 1.0
        cum[i, 0] = c0
        cum[i, 1] = c1
    return cum


# ---------------------------------------------------------------- RNG

@njit(cache=True, inline="always")
def _mix_nb(z):
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


def _mix_np(z):
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


def path_seeds(seed, start, n):
    """Seeds of paths ``start .. start+n-1``: successive SplitMix64(seed) outputs."""
    idx = np.arange(start, start + n, dtype=np.uint64) + ONE
    with np.errstate(over="ignore"):
        return _mix_np(np.uint64(seed) + idx * GAMMA)


# ---------------------------------------------------------------- simulate

@njit(cache=True, nogil=True)
def _simulate_nb(init_cum, cum, upper, lower, seed, start, n, step_cap, outcome, tau):
    for k in range(n):
        state = _mix_nb(seed + np.uint64(start + k + 1) * GAMMA)
        state += GAMMA
        u = np.float64(_mix_nb(state) >> S11) * INV53
        if u < init_cum[0]:
            s = 0
        elif u < init_cum[1]:
            s = 1
        else:
            s = 2
        pos = STEP_VALUES[s]
        steps = 1
        while lower < pos < upper and steps < step_cap:
            state += GAMMA
            u = np.float64(_mix_nb(state) >> S11) * INV53
            if u < cum[s, 0]:
                s = 0
            elif u < cum[s, 1]:
                s = 1
            else:
                s = 2
            pos += STEP_VALUES[s]
            steps += 1
        if pos >= upper:
            outcome[k] = OUT_UPPER
        elif pos <= lower:
            outcome[k] = OUT_LOWER
        else:
            outcome[k] = OUT_TRUNCATED
        tau[k] = steps


def _pick_np(c0, c1, u):
    return np.where(u < c0, 0, np.where(u < c1, 1, 2))


def _simulate_np(init_cum, cum, upper, lower, seed, start, n, step_cap, outcome, tau):
    with np.errstate(over="ignore"):
        state = path_seeds(seed, start, n) + GAMMA
        u = (_mix_np(state) >> S11).astype(np.float64) * INV53
        s = _pick_np(init_cum[0], init_cum[1], u)
        pos = STEP_VALUES[s]
        ids = np.arange(n)
        steps = 1
        while True:
            done = (pos >= upper) | (pos <= lower)
            if steps >= step_cap:
                done[:] = True
            if done.any():
                fin = ids[done]
                fpos = pos[done]
                outcome[fin] = np.where(fpos >= upper, OUT_UPPER,
                                        np.where(fpos <= lower, OUT_LOWER, OUT_TRUNCATED))
                tau[fin] = steps
                keep = ~done
                ids, state, s, pos = ids[keep], state[keep], s[keep], pos[keep]
            if ids.size == 0:
                break
            state = state + GAMMA
            u = (_mix_np(state) >> S11).astype(np.float64) * INV53
            s = _pick_np(cum[s, 0], cum[s, 1], u)
            pos = pos + STEP_VALUES[s]
            steps += 1


def simulate_paths(P, init, upper, lower, seed, start, n, step_cap, backend=None):
    """Simulate paths ``start .. start+n-1``.

    Returns ``(outcome, tau)``: outcome is +1 (hit ``upper``), -1 (hit
    ``lower``) or 0 (still inside after ``step_cap`` steps).
    """
    backend = resolve_backend(backend)
    cum = cumulative_rows(P)
    init_cum = cumulative_rows(np.asarray(init, dtype=np.float64)[None, :])[0]
    outcome = np.empty(n, dtype=np.int8)
    tau = np.empty(n, dtype=np.int64)
    if n == 0:
        return outcome, tau
    fn = _simulate_nb if backend == "numba" else _simulate_np
    fn(init_cum, cum, np.int64(upper), np.int64(lower), np.uint64(seed),
       np.int64(start), np.int64(n), np.int64(step_cap), outcome, tau)
    return outcome, tau


# ---------------------------------------------------------------- enumerate

@njit(cache=True, nogil=True)
def _enumerate_nb(P, init, upper, lower, horizon, budget):
    # Depth-first over live (not yet absorbed) nodes with an explicit stack.
    cap = 3 * horizon + 3
    st_pos = np.empty(cap, dtype=np.int64)
    st_last = np.empty(cap, dtype=np.int64)
    st_prob = np.empty(cap, dtype=np.float64)
    st_depth = np.empty(cap, dtype=np.int64)
    top = 0
    nodes = 0
    hit_up = 0.0
    hit_low = 0.0
    unresolved = 0.0
    for s in range(3):
        if init[s] > 0.0:
            nodes += 1
            pos = STEP_VALUES[s]
            if pos >= upper:
                hit_up += init[s]
            elif pos <= lower:
                hit_low += init[s]
            else:
                st_pos[top] = pos
                st_last[top] = s
                st_prob[top] = init[s]
                st_depth[top] = 1
                top += 1
    while top > 0:
        top -= 1
        pos = st_pos[top]
        last = st_last[top]
        prob = st_prob[top]
        depth = st_depth[top]
        if depth >= horizon:
            unresolved += prob
            continue
        for t in range(3):
            w = P[last, t]
            if w > 0.0:
                nodes += 1
                if nodes > budget:
                    return hit_up, hit_low, unresolved, nodes, True
                npos = pos + STEP_VALUES[t]
                if npos >= upper:
                    hit_up += prob * w
                elif npos <= lower:
                    hit_low += prob * w
                else:
                    st_pos[top] = npos
                    st_last[top] = t
                    st_prob[top] = prob * w
                    st_depth[top] = depth + 1
                    top += 1
    return hit_up, hit_low, unresolved, nodes, False


def _enumerate_np(P, init, upper, lower, horizon, budget):
    # Breadth-first, one level per iteration; no merging of equal states.
    nodes = 0
    hit_up = 0.0
    hit_low = 0.0
    start = np.flatnonzero(init > 0.0)
    nodes += start.size
    pos = STEP_VALUES[start]
    last = start
    prob = init[start]
    depth = 1
    while True:
        up = pos >= upper
        low = pos <= lower
        hit_up += prob[up].sum()
        hit_low += prob[low].sum()
        live = ~(up | low)
        pos, last, prob = pos[live], last[live], prob[live]
        if depth >= horizon or pos.size == 0:
            break
        weights = P[last]                       # (m, 3)
        mask = weights > 0.0
        parent, child = np.nonzero(mask)
        nodes += parent.size
        if nodes > budget:
            return hit_up, hit_low, prob.sum(), nodes, True
        pos = pos[parent] + STEP_VALUES[child]
        prob = prob[parent] * weights[parent, child]
        last = child
        depth += 1
    return hit_up, hit_low, prob.sum(), nodes, False


def enumerate_tree(P, init, upper, lower, horizon, budget, backend=None):
    """Return ``(mass_upper, mass_lower, mass_unresolved, nodes, over_budget)``."""
    backend = resolve_backend(backend)
    P = np.ascontiguousarray(P, dtype=np.float64)
    init = np.ascontiguousarray(init, dtype=np.float64)
    fn = _enumerate_nb if backend == "numba" else _enumerate_np
    up, low, unres, nodes, over = fn(P, init, np.int64(upper), np.int64(lower),
                                     np.int64(horizon), np.int64(budget))
    return float(up), float(low), float(unres), int(nodes), bool(over)
