"""Martingales for payoff chains and the ruin values they imply.

Every martingale here has the form ``F(S_n, X_n, n)`` with free
coefficients fixed by requiring a zero conditional drift from each
predecessor state.  The exponential family

    M_n = lam ** (S_n + a X_n**2 + b X_n)

is solved in the variables ``(x, y, z) = (lam, lam**a, lam**b)``, where
the three drift equations become Laurent polynomials.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .chains import (
    STATES,
    GeneralChain,
    SymmetricDelayChain,
    TwoStateChain,
    as_general,
    require_valid,
    stationary_delay,
)
from .errors import DegenerateDrift, DomainError, NoConvergence, SingularSystem, SolverError
from .problem import RuinSolution, as_barriers

ZERO_DRIFT_TOL = 1e-9
ROOT_TOL = 1e-10
TRIVIAL_TOL = 1e-6
ALPHA_AGREEMENT = 1e-9
START_XS = tuple(round(0.1 * k, 10) for k in range(1, 31) if k != 10)
# Tried only after START_XS; strongly drifting chains have lam far from 1.
EXTRA_XS = (4.0, 6.0, 10.0, 20.0, 50.0, 100.0, 1e3, 1e4, 0.05, 0.02, 0.01, 1e-3, 1e-4)

_S = np.array(STATES, dtype=float)


@dataclass(frozen=True)
class DriftCoefficients:
    """E(X_n | X_{n-1}) = intercept + slope * X_{n-1} + square * X_{n-1}**2.

    ``second`` holds the same three coefficients for E(X_n**2 | X_{n-1}).
    """

    slope: float
    intercept: float
    square: float = 0.0
    second: tuple = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class QuadraticCoeffs:
    """M_n = S_n**2 + a S_n X_n + b X_n**2 - c n."""

    a: float
    b: float
    c: float
    residual: float = 0.0


@dataclass(frozen=True)
class AdditiveCoeffs:
    """M_n = S_n + a2 X_n**2 + a1 X_n - c n; ``c`` is the stationary drift."""

    a2: float
    a1: float
    c: float
    residual: float = 0.0


@dataclass(frozen=True)
class MartingaleParams:
    lam: float
    a: float
    b: float
    x: float
    y: float
    z: float
    residual: float
    iterations: int = 0
    start: float = float("nan")
    roots: tuple = field(default=(), compare=False)

    @property
    def reparam(self):
        return (self.x, self.y, self.z)


def _moments(P):
    m1 = P @ _S
    m2 = P @ (_S ** 2)
    return m1, m2


def _basis_coeffs(values):
    # values over states (1, 0, -1) -> (const, x coef, x**2 coef)
    up, mid, down = values
    return (mid, (up - down) / 2.0, (up + down) / 2.0 - mid)


def drift_coefficients(chain) -> DriftCoefficients:
    require_valid(chain)
    if isinstance(chain, TwoStateChain):
        return DriftCoefficients(chain.p + chain.q - 1.0, chain.p - chain.q)
    if isinstance(chain, SymmetricDelayChain):
        p, q, r = chain.p, chain.q, chain.r
        return DriftCoefficients(2.0 * p + r - 1.0, 0.0, 0.0, (1.0 - q, 0.0, q - r))
    m1, m2 = _moments(chain.matrix)
    c0, c1, c2 = _basis_coeffs(m1)
    return DriftCoefficients(c1, c0, c2, _basis_coeffs(m2))


def quadratic_coeffs_two_state(p: float) -> QuadraticCoeffs:
    """Coefficients for the symmetric two-state walk (P(stay) = p on both sides).

    The compensator is returned in ``c``; ``b`` is zero because X_n**2 = 1.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p={p} must lie in (0, 1)", field="p")
    k = 2.0 * p - 1.0
    # (2 + a) k = a ;  1 + a = comp
    M = np.array([[1.0 - k, 0.0], [1.0, -1.0]])
    rhs = np.array([2.0 * k, -1.0])
    a, comp = np.linalg.solve(M, rhs)
    return QuadraticCoeffs(float(a), 0.0, float(comp), float(np.abs(M @ [a, comp] - rhs).max()))


def quadratic_coeffs_delay(chain: SymmetricDelayChain) -> QuadraticCoeffs:
    require_valid(chain)
    p, q, r = chain.p, chain.q, chain.r
    if not 2.0 - 2.0 * p - r > 0.0 or not 1.0 + r - q > 0.0:
        raise DomainError("degenerate symmetric delay chain", field="p")
    k = 2.0 * p + r - 1.0
    # (2 + a) k = a ;  (1 + a + b)(q - r) = b ;  (1 + a + b)(1 - q) = c
    M = np.array([
        [1.0 - k, 0.0, 0.0],
        [q - r, q - r - 1.0, 0.0],
        [1.0 - q, 1.0 - q, -1.0],
    ])
    rhs = np.array([2.0 * k, -(q - r), -(1.0 - q)])
    sol = np.linalg.solve(M, rhs)
    return QuadraticCoeffs(*map(float, sol), float(np.abs(M @ sol - rhs).max()))


def additive_coeffs(chain) -> AdditiveCoeffs:
    """Solve for M_n = S_n + a2 X_n**2 + a1 X_n - c n with zero one-step drift."""
    require_valid(chain)
    P = as_general(chain).matrix
    m1, m2 = _moments(P)
    # a2 (m2(s) - s^2) + a1 (m1(s) - s) - c = -m1(s)
    M = np.column_stack([m2 - _S ** 2, m1 - _S, -np.ones(3)])
    rhs = -m1
    if np.linalg.matrix_rank(M, tol=1e-12) < 3:
        raise SingularSystem("additive martingale system is singular",
                             diagnostics={"matrix": M.tolist()})
    sol = np.linalg.solve(M, rhs)
    return AdditiveCoeffs(*map(float, sol), float(np.abs(M @ sol - rhs).max()))


# ---------------------------------------------------------------- exponential

def _reachable(P, init):
    seen = {s for s in range(3) if init[s] > 0.0}
    stack = list(seen)
    while stack:
        s = stack.pop()
        for t in range(3):
            if P[s, t] > 0.0 and t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def exponential_system(chain, reachable=None):
    """Return ``(F, J)``: residual map ``F(v) = E(Y|s) - 1`` and its Jacobian.

    Equations for unreachable states are replaced by gauge conditions
    (``y = 1`` for state 0, ``z = 1`` for +-1) because those states never
    condition a step and the corresponding exponent is not identified.
    """
    g = as_general(chain)
    p, p0, e1 = g.p, g.p0, max(1.0 - g.p - g.p0, 0.0)
    r1, r, e0 = g.r1, g.r, max(1.0 - g.r - g.r1, 0.0)
    q, q0, e2 = g.q, g.q0, max(1.0 - g.q - g.q0, 0.0)
    reach = {0, 1, 2} if reachable is None else set(reachable)

    def F(v):
        x, y, z = v
        out = np.array([
            p * x + p0 / (y * z) + e1 / (z * z * x) - 1.0,
            r1 * x * y * z + r + e0 * y / (z * x) - 1.0,
            e2 * z * z * x + q0 * z / y + q / x - 1.0,
        ])
        if 1 not in reach:
            out[1] = y - 1.0
        if 0 not in reach or 2 not in reach:
            idx = 0 if 0 not in reach else 2
            out[idx] = z - 1.0
        return out

    def J(v):
        x, y, z = v
        out = np.array([
            [p - e1 / (z * z * x * x), -p0 / (y * y * z), -p0 / (y * z * z) - 2.0 * e1 / (z ** 3 * x)],
            [r1 * y * z - e0 * y / (z * x * x), r1 * x * z + e0 / (z * x), r1 * x * y - e0 * y / (z * z * x)],
            [e2 * z * z - q / (x * x), -q0 * z / (y * y), 2.0 * e2 * z * x + q0 / y],
        ])
        if 1 not in reach:
            out[1] = (0.0, 1.0, 0.0)
        if 0 not in reach or 2 not in reach:
            idx = 0 if 0 not in reach else 2
            out[idx] = (0.0, 0.0, 1.0)
        return out

    return F, J


def _newton(F, J, v0, max_iter=100):
    v = np.array(v0, dtype=float)
    f = F(v)
    norm = float(np.abs(f).max())
    it = 0
    for it in range(1, max_iter + 1):
        if norm < 1e-15:
            break
        try:
            step = np.linalg.solve(J(v), -f)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        t = 1.0
        accepted = False
        while t > 1e-6:
            cand = v + t * step
            if np.all(cand > 0.0):
                fc = F(cand)
                nc = float(np.abs(fc).max())
                if np.isfinite(nc) and nc < norm:
                    v, f, norm = cand, fc, nc
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
    return v, norm, it


def solve_exponential(chain) -> MartingaleParams:
    """Find a non-trivial root (lam != 1) of the exponential drift system.

    Damped Newton from the starts ``x in START_XS`` with ``y = z = 1``, then
    from ``EXTRA_XS`` if none succeeded.  The first start (in order) that
    converges to an admissible root wins; every distinct admissible root
    found is kept in ``roots``.
    """
    require_valid(chain)
    return _solve_exponential(as_general(chain))


@functools.lru_cache(maxsize=1024)
def _solve_exponential(g: GeneralChain) -> MartingaleParams:
    P = g.matrix
    init = g.initial_vector()
    reach = _reachable(P, init)

    try:
        drift = additive_coeffs(g).c
    except SolverError:
        drift = None
    if drift is not None and abs(drift) < ZERO_DRIFT_TOL:
        raise DegenerateDrift("zero stationary drift: only lam = 1 solves the system",
                              diagnostics={"drift": drift})

    F, J = exponential_system(g, reach)
    roots = []
    best = math.inf
    first = None
    for x0 in START_XS + EXTRA_XS:
        if first is not None and x0 in EXTRA_XS:
            break
        v, norm, it = _newton(F, J, (x0, 1.0, 1.0))
        best = min(best, norm)
        if norm < ROOT_TOL and abs(v[0] - 1.0) > TRIVIAL_TOL and np.all(v > 0.0):
            if not any(np.abs(v - w).max() < 1e-8 for w, _, _ in roots):
                roots.append((v, norm, it))
                if first is None:
                    first = (v, norm, it, x0)
    if first is None:
        diag = {"best_residual": best, "starts": len(START_XS + EXTRA_XS), "drift": drift}
        raise NoConvergence("no non-trivial root of the exponential system found", diag)
    v, norm, it, x0 = first
    x, y, z = map(float, v)
    lx = math.log(x)
    return MartingaleParams(
        lam=x, a=math.log(y) / lx, b=math.log(z) / lx, x=x, y=y, z=z,
        residual=norm, iterations=it, start=x0,
        roots=tuple(tuple(map(float, w)) for w, _, _ in roots),
    )


def exponential_start_value(params, init) -> float:
    """E(M_1) = sum_s init(s) * x**s * y**(s**2) * z**s."""
    x, y, z = params if isinstance(params, tuple) else params.reparam
    return float(sum(w * x ** s * y ** (s * s) * z ** s for w, s in zip(init, STATES)))


def _alpha_exponential(xyz, init, A, B):
    x, y, z = xyz
    m1 = exponential_start_value(xyz, init)
    top = x ** A * y * z
    bottom = x ** (-B) * y / z
    return (m1 - bottom) / (top - bottom), m1


def ruin_general(chain, b) -> RuinSolution:
    """Ruin probability of a general chain by optional stopping.

    Non-zero drift: exponential martingale (E tau from the additive one).
    Zero drift: the additive martingale alone gives alpha; E tau is left
    to the first-step oracle.
    """
    require_valid(chain)
    g = as_general(chain)
    b = as_barriers(b)
    A, B = b.A, b.B
    init = g.initial_vector()

    try:
        add = additive_coeffs(g)
    except SingularSystem:
        add = None

    if add is not None and abs(add.c) < ZERO_DRIFT_TOL:
        g1, gm1 = add.a2 + add.a1, add.a2 - add.a1
        m1 = float(sum(w * (s + add.a2 * s * s + add.a1 * s) for w, s in zip(init, STATES)))
        alpha = (m1 - (-B + gm1)) / (A + g1 + B - gm1)
        return RuinSolution(alpha, 1.0 - alpha, None, "martingale:additive",
                            {"a2": add.a2, "a1": add.a1, "drift": add.c, "E_M1": m1,
                             "residual": add.residual})

    params = solve_exponential(g)
    alpha, m1 = _alpha_exponential(params.reparam, init, A, B)
    for root in params.roots[1:]:
        other, _ = _alpha_exponential(root, init, A, B)
        if abs(other - alpha) > ALPHA_AGREEMENT:
            raise SolverError("distinct exponential roots give different alpha",
                              diagnostics={"alphas": [alpha, other], "roots": list(params.roots)})
    diag = {"lambda": params.lam, "a": params.a, "b": params.b,
            "x": params.x, "y": params.y, "z": params.z,
            "residual": params.residual, "iterations": params.iterations,
            "n_roots": len(params.roots), "E_M1": m1}
    etau = None
    if add is not None:
        beta = 1.0 - alpha
        stopped = alpha * (A + add.a2 + add.a1) + beta * (-B + add.a2 - add.a1)
        start = float(sum(w * (s + add.a2 * s * s + add.a1 * s) for w, s in zip(init, STATES)))
        etau = (stopped - start + add.c) / add.c
        diag["drift"] = add.c
    return RuinSolution(alpha, 1.0 - alpha, etau, "martingale:exponential", diag)


# ---------------------------------------------------------------- OST E(tau)

def etau_quadratic_symmetric(p: float, b) -> float:
    """E tau for the symmetric two-state walk from the quadratic martingale."""
    from .analytic import ruin_symmetric

    b = as_barriers(b)
    co = quadratic_coeffs_two_state(p)
    alpha = ruin_symmetric(p, b)
    beta = 1.0 - alpha
    m1 = 1.0 + co.a - co.c
    stopped = b.A ** 2 * alpha + b.B ** 2 * beta + co.a * (b.A * alpha + b.B * beta)
    return (stopped - m1) / co.c


def etau_quadratic_delay(chain: SymmetricDelayChain, b) -> float:
    """E tau for the symmetric delay walk from the quadratic martingale."""
    from .analytic import ruin_symmetric_delays

    b = as_barriers(b)
    co = quadratic_coeffs_delay(chain)
    alpha = ruin_symmetric_delays(chain.p, chain.r, b)
    beta = 1.0 - alpha
    ex2 = 1.0 - stationary_delay(chain)[1]
    m1 = (1.0 + co.a + co.b) * ex2 - co.c
    stopped = b.A ** 2 * alpha + b.B ** 2 * beta + co.a * (b.A * alpha + b.B * beta) + co.b
    # E(M_tau) = stopped - c E(tau)
    return (stopped - m1) / co.c


# ---------------------------------------------------------------- checking

def additive_martingale(co: AdditiveCoeffs):
    return lambda S, X, n: S + co.a2 * X * X + co.a1 * X - co.c * n


def quadratic_martingale(co: QuadraticCoeffs):
    return lambda S, X, n: S * S + co.a * S * X + co.b * X * X - co.c * n


def exponential_martingale(params: MartingaleParams):
    x, y, z = params.reparam
    return lambda S, X, n: x ** S * y ** (X * X) * z ** X


def one_step_defect(P, M, states=(1, 0, -1), s_range=10, n=5, relative=False) -> float:
    """Max over lattice points of |E(M_{n+1} | S_n, X_n) - M_n|.

    ``states`` restricts the predecessor values (for two-state chains pass
    ``(1, -1)``).  With ``relative=True`` the defect is divided by |M_n|.
    """
    P = np.asarray(P, dtype=float)
    worst = 0.0
    for s in states:
        i = STATES.index(s)
        for S in range(-s_range, s_range + 1):
            now = M(S, s, n)
            nxt = sum(P[i, j] * M(S + t, t, n + 1) for j, t in enumerate(STATES) if P[i, j] > 0.0)
            d = abs(nxt - now)
            if relative:
                d /= abs(now)
            worst = max(worst, d)
    return worst
