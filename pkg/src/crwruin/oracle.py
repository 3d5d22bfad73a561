"""Ground truth for ruin problems, independent of any martingale argument.

Three routes:

* first-step analysis: an exact linear solve on the lattice of
  ``(position, last step)`` states;
* exhaustive enumeration of the path tree up to a horizon, giving a
  bracket on alpha;
* seeded Monte Carlo.

The stopping convention everywhere is ``tau = inf{k >= 1: S_k in {A, -B}}``
with ``S_1 = X_1``, so ``tau >= 1``.
"""
from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from ._accel import resolve_backend
from .chains import STATES, as_general, require_valid
from .errors import BudgetExceeded, NonAbsorbing, SingularSystem, ValidationError
from .problem import as_barriers

DEFAULT_STEP_CAP = 10**6
DEFAULT_BUDGET = 10**7
RESIDUAL_TOL = 1e-12


def _setup(chain, initial):
    require_valid(chain)
    P = as_general(chain).matrix
    init = chain.initial_vector() if initial is None else np.asarray(initial, dtype=float)
    if init.shape == (2,):
        init = np.array([init[0], 0.0, init[1]])
    if init.shape != (3,) or (init < -1e-12).any() or abs(init.sum() - 1.0) > 1e-12:
        raise ValidationError("initial must be a probability vector over (1, 0, -1)", field="initial")
    return P, np.clip(init, 0.0, None)


@dataclass(frozen=True)
class FirstStepResult:
    alpha: float
    expected_tau: Optional[float]
    residual: float
    n_states: int
    stuck_states: int


def first_step(chain, b, initial=None) -> FirstStepResult:
    """Solve both first-step systems (hitting probability and expected time).

    ``expected_tau`` is ``None`` when some reachable lattice state can never
    reach a barrier.
    """
    P, init = _setup(chain, initial)
    b = as_barriers(b)
    A, B = b.A, b.B
    npos = A + B - 1

    def index(v, s):
        return (v + B - 1) * 3 + s

    # Reachable lattice states from the first step.
    starts = [index(STATES[s], s) for s in range(3)
              if init[s] > 0.0 and -B < STATES[s] < A]
    succ = {}
    seen = set(starts)
    queue = deque(starts)
    while queue:
        i = queue.popleft()
        v, s = divmod(i, 3)
        v -= B - 1
        out = []
        for t in range(3):
            w = P[s, t]
            if w <= 0.0:
                continue
            nv = v + STATES[t]
            if nv >= A:
                out.append((w, "up"))
            elif nv <= -B:
                out.append((w, "down"))
            else:
                j = index(nv, t)
                out.append((w, j))
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
        succ[i] = out

    # States that can reach a barrier, by backward search.
    pred = {i: [] for i in succ}
    live = set()
    for i, out in succ.items():
        for _, j in out:
            if isinstance(j, str):
                live.add(i)
            else:
                pred[j].append(i)
    queue = deque(live)
    while queue:
        j = queue.popleft()
        for i in pred[j]:
            if i not in live:
                live.add(i)
                queue.append(i)

    order = sorted(live)
    pos = {k: n for n, k in enumerate(order)}
    n = len(order)
    M = np.eye(n)
    rhs = np.zeros((n, 2))
    rhs[:, 1] = 1.0
    for i in order:
        row = pos[i]
        for w, j in succ[i]:
            if j == "up":
                rhs[row, 0] += w
            elif j != "down" and j in pos:
                M[row, pos[j]] -= w
    if n:
        try:
            sol = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem("first-step system is singular",
                                 diagnostics={"n_states": n}) from exc
        residual = float(np.abs(M @ sol - rhs).max())
        if not residual < RESIDUAL_TOL * max(1.0, float(np.abs(sol).max())):
            raise SingularSystem("first-step solve residual too large",
                                 diagnostics={"residual": residual})
    else:
        sol = np.zeros((0, 2))
        residual = 0.0

    h = {i: sol[pos[i], 0] for i in order}
    g = {i: sol[pos[i], 1] for i in order}
    stuck = len(seen) - n

    alpha = 0.0
    etau = 1.0
    for s in range(3):
        if init[s] <= 0.0:
            continue
        v = STATES[s]
        if v >= A:
            alpha += init[s]
        elif v > -B:
            i = index(v, s)
            alpha += init[s] * h.get(i, 0.0)
            etau += init[s] * g.get(i, 0.0)
    return FirstStepResult(float(alpha), None if stuck else float(etau), residual, n, stuck)


def first_step_alpha(chain, b, initial=None) -> float:
    """P(S reaches A before -B) by first-step analysis."""
    return first_step(chain, b, initial).alpha


def first_step_etau(chain, b, initial=None) -> float:
    """E(tau) by first-step analysis; raises NonAbsorbing if it diverges."""
    res = first_step(chain, b, initial)
    if res.expected_tau is None:
        raise NonAbsorbing("some reachable state never reaches a barrier",
                           diagnostics={"stuck_states": res.stuck_states})
    return res.expected_tau


@dataclass(frozen=True)
class EnumerationResult:
    alpha_lower: float
    alpha_upper: float
    mass_unresolved: float
    mass_lower_barrier: float
    nodes: int

    def brackets(self, value, slack=1e-12) -> bool:
        return self.alpha_lower - slack <= value <= self.alpha_upper + slack


def enumerate_paths(chain, b, horizon: int, initial=None, budget: int = DEFAULT_BUDGET,
                    backend=None) -> EnumerationResult:
    """Expand every path up to ``horizon`` steps and bracket alpha."""
    if isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 1:
        raise ValidationError("horizon must be a positive integer", field="horizon")
    P, init = _setup(chain, initial)
    b = as_barriers(b)
    up, low, unres, nodes, over = kernels.enumerate_tree(P, init, b.A, -b.B, horizon, budget,
                                                         backend=backend)
    if over:
        raise BudgetExceeded(f"path tree exceeds {budget} nodes",
                             diagnostics={"nodes": nodes, "horizon": horizon})
    return EnumerationResult(up, up + unres, unres, low, nodes)


@dataclass(frozen=True)
class MonteCarloResult:
    alpha_hat: float
    tau_hat: float
    stderr_alpha: float
    stderr_tau: float
    n_paths: int
    seed: int
    truncated_paths: int
    diagnostics: dict = field(default_factory=dict, compare=True)

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "tau_hat": self.tau_hat,
            "stderr_alpha": self.stderr_alpha,
            "stderr_tau": self.stderr_tau,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "truncated_paths": self.truncated_paths,
            "diagnostics": dict(self.diagnostics),
        }


def simulate(chain, b, n_paths: int, seed: int, step_cap: int = DEFAULT_STEP_CAP,
             initial=None, partitions: int = 1, workers: int = 1,
             backend=None) -> MonteCarloResult:
    """Seeded Monte Carlo estimate of alpha and E(tau).

    Path ``i`` always consumes the same random stream, so the result does
    not depend on ``partitions``, ``workers`` or the backend.  Truncated
    paths (still inside after ``step_cap`` steps) are excluded from the
    estimates and counted.
    """
    if n_paths < 1:
        raise ValidationError("n_paths must be >= 1", field="paths")
    if step_cap < 1:
        raise ValidationError("step_cap must be >= 1", field="step_cap")
    if partitions < 1:
        raise ValidationError("partitions must be >= 1", field="partitions")
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must be a 64-bit unsigned integer", field="seed")
    P, init = _setup(chain, initial)
    b = as_barriers(b)
    backend = resolve_backend(backend)

    edges = np.linspace(0, n_paths, partitions + 1).astype(np.int64)
    chunks = [(int(lo), int(hi - lo)) for lo, hi in zip(edges[:-1], edges[1:])]

    def run(chunk):
        start, n = chunk
        return kernels.simulate_paths(P, init, b.A, -b.B, seed, start, n, step_cap, backend)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    outcome = np.concatenate([o for o, _ in parts])
    tau = np.concatenate([t for _, t in parts])

    ok = outcome != kernels.OUT_TRUNCATED
    n_ok = int(ok.sum())
    truncated = n_paths - n_ok
    if n_ok:
        hits = int((outcome == kernels.OUT_UPPER).sum())
        alpha_hat = hits / n_ok
        t = tau[ok].astype(np.float64)
        tau_hat = float(t.mean())
        stderr_alpha = float(np.sqrt(alpha_hat * (1.0 - alpha_hat) / n_ok))
        stderr_tau = float(t.std(ddof=1) / np.sqrt(n_ok)) if n_ok > 1 else 0.0
    else:
        alpha_hat = tau_hat = stderr_alpha = stderr_tau = float("nan")
    return MonteCarloResult(
        alpha_hat=float(alpha_hat),
        tau_hat=tau_hat,
        stderr_alpha=stderr_alpha,
        stderr_tau=stderr_tau,
        n_paths=n_paths,
        seed=int(seed),
        truncated_paths=truncated,
        diagnostics={"partitions": partitions, "rng": "splitmix64-per-path",
                     "step_cap": step_cap},
    )
