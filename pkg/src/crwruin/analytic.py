"""Closed-form ruin probabilities and expected absorption times.

All formulas assume the chain starts from its stationary law.  ``alpha``
is the probability that the walk reaches ``A`` before ``-B``.
"""
from __future__ import annotations

import math

from .chains import (
    SymmetricDelayChain,
    TwoStateChain,
    require_valid,
    stationary_two_state,
)
from .errors import DegenerateLambda, DomainError
from .problem import Barriers, RuinSolution, as_barriers

__all__ = [
    "Barriers",
    "RuinSolution",
    "ruin_symmetric",
    "etau_symmetric",
    "ruin_asymmetric",
    "etau_asymmetric",
    "asymmetric_ost_residual",
    "ruin_symmetric_delays",
    "etau_symmetric_delays",
    "ruin_two_pattern",
    "ruin_iid",
    "solve",
]

LAMBDA_TOL = 1e-10


def _open_prob(name, p):
    if not 0.0 < p < 1.0:
        raise DomainError(f"{name}={p} must lie in (0, 1)", field=name)


def ruin_symmetric(p: float, b) -> float:
    """Symmetric two-state walk (P(1->1) = P(-1->-1) = p)."""
    _open_prob("p", p)
    b = as_barriers(b)
    k = 1.0 / (1.0 - p)
    return (b.B - 1 + 0.5 * k) / (b.A + b.B - 2 + k)


def etau_symmetric(p: float, b) -> float:
    _open_prob("p", p)
    b = as_barriers(b)
    A, B = b.A, b.B
    return A * B * (1.0 - p) / p + (A + B) * (2.0 * p - 1.0) / (2.0 * p)


def _two_state(chain: TwoStateChain):
    require_valid(chain)
    _two_state_stationary_only(chain)
    if abs(chain.p - chain.q) < LAMBDA_TOL:
        raise DegenerateLambda("p == q: use ruin_symmetric / etau_symmetric", field="q")
    return chain.p, chain.q


def ruin_asymmetric(chain: TwoStateChain, b) -> float:
    """Asymmetric two-state walk via the exponential martingale with base q/p."""
    p, q = _two_state(chain)
    b = as_barriers(b)
    lam = q / p
    lam_a = math.sqrt((1.0 - p) * p / ((1.0 - q) * q))   # (q/p)**a
    start = math.sqrt((1.0 - q) * (1.0 - p)) / (2.0 - p - q) * (math.sqrt(q / p) + math.sqrt(p / q))
    low = lam ** (-b.B) / lam_a
    high = lam ** b.A * lam_a
    return (low - start) / (low - high)


def asymmetric_ost_residual(chain: TwoStateChain, b, alpha: float, etau: float) -> float:
    """E(M_1) - E(M_tau) for the additive martingale; zero at the true (alpha, E tau)."""
    p, q = _two_state(chain)
    b = as_barriers(b)
    beta = 1.0 - alpha
    m1 = (p - q) / (2.0 - p - q)
    m_tau = ((2.0 - p - q) * (b.A * alpha - b.B * beta)
             + (p + q - 1.0) * (alpha - beta)
             - (p - q) * (etau - 1.0))
    return m1 - m_tau


def etau_asymmetric(chain: TwoStateChain, b, alpha: float | None = None) -> float:
    """Solve the optional-stopping identity of the additive martingale for E tau."""
    p, q = _two_state(chain)
    b = as_barriers(b)
    if alpha is None:
        alpha = ruin_asymmetric(chain, b)
    beta = 1.0 - alpha
    m1 = (p - q) / (2.0 - p - q)
    stopped = (2.0 - p - q) * (b.A * alpha - b.B * beta) + (p + q - 1.0) * (alpha - beta)
    return 1.0 + (stopped - m1) / (p - q)


def _delay(chain_or_p, r=None):
    if isinstance(chain_or_p, SymmetricDelayChain):
        chain = chain_or_p
    else:
        chain = SymmetricDelayChain(chain_or_p, 0.0, r)
    require_valid(chain)
    return chain


def ruin_symmetric_delays(p: float, r: float, b) -> float:
    """Symmetric walk with delays; the delay persistence q plays no role."""
    chain = _delay(p, r)
    b = as_barriers(b)
    k = 1.0 / (2.0 - 2.0 * chain.p - chain.r)
    return (b.B - 1 + k) / (b.A + b.B - 2 + 2.0 * k)


def etau_symmetric_delays(chain: SymmetricDelayChain, b) -> float:
    chain = _delay(chain)
    b = as_barriers(b)
    p, q, r = chain.p, chain.q, chain.r
    s = 2.0 * p + r
    if s <= 0.0:
        raise DomainError("2p + r = 0: the walk never moves", field="p")
    A, B = b.A, b.B
    return (A * B * (1.0 + r - q) * (2.0 - s) / ((1.0 - q) * s)
            + (A + B) * (s - 1.0) * (1.0 + r - q) / ((1.0 - q) * s)
            + (q - r) * r / ((1.0 - q) * (1.0 + r - q)))


def ruin_two_pattern(b) -> float:
    """HH-versus-TH payoff walk on a fair coin."""
    b = as_barriers(b)
    return (b.B - 0.5) / (b.A + b.B)


def ruin_iid(p_up: float, b) -> float:
    """Textbook ruin probability for iid +-1 steps with P(+1) = p_up."""
    _open_prob("p_up", p_up)
    b = as_barriers(b)
    if abs(p_up - 0.5) < LAMBDA_TOL:
        return b.B / (b.A + b.B)
    rho = (1.0 - p_up) / p_up
    return (1.0 - rho ** b.B) / (1.0 - rho ** (b.A + b.B))


def solve(chain, b) -> RuinSolution:
    """Pick the closed form matching ``chain`` and bundle alpha and E tau."""
    b = as_barriers(b)
    if isinstance(chain, TwoStateChain):
        require_valid(chain)
        if abs(chain.p - chain.q) < LAMBDA_TOL:
            _two_state_stationary_only(chain)
            alpha = ruin_symmetric(chain.p, b)
            etau = etau_symmetric(chain.p, b)
            method = "closed-form:symmetric"
        else:
            alpha = ruin_asymmetric(chain, b)
            etau = etau_asymmetric(chain, b, alpha)
            method = "closed-form:asymmetric"
    elif isinstance(chain, SymmetricDelayChain):
        alpha = ruin_symmetric_delays(chain.p, chain.r, b)
        etau = etau_symmetric_delays(chain, b)
        method = "closed-form:symmetric-delay"
    else:
        raise DomainError("no closed form for general chains; use martingale.ruin_general",
                          field="type")
    return RuinSolution(alpha, 1.0 - alpha, etau, method)


def _two_state_stationary_only(chain):
    if chain.initial is not None:
        pi1, _ = stationary_two_state(chain)
        if abs(chain.initial[0] - pi1) > 1e-12:
            raise DomainError("closed forms require the stationary initial law", field="initial")
