"""Markov payoff chains over the step values {1, -1} and {1, 0, -1}.

Three-state vectors and matrices are always ordered ``(1, 0, -1)``; the
two-state form is ordered ``(1, -1)``.  Chains are plain frozen
dataclasses.  Construction does not validate; call :func:`validate` to get
a list of violations or :func:`require_valid` to raise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DomainError, ReducibleChain, ValidationError

TOL = 1e-12
STATES = (1, 0, -1)
STATES2 = (1, -1)

# Row used for the unreachable delay state when a two-state chain is
# embedded in the three-state family.  It has zero mean so the embedded
# drift coefficients reproduce the two-state ones.
_EMBED_DELAY_ROW = (0.5, 0.0, 0.5)


@dataclass(frozen=True)
class TwoStateChain:
    """Chain on ``{1, -1}`` with P(1->1) = p and P(-1->-1) = q.

    ``initial`` is ``(P(X1=1), P(X1=-1))``; ``None`` means stationary.
    """

    p: float
    q: float
    initial: Optional[tuple] = None

    @property
    def matrix2(self) -> np.ndarray:
        return np.array([[self.p, 1.0 - self.p], [1.0 - self.q, self.q]])

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.p, 0.0, 1.0 - self.p],
                list(_EMBED_DELAY_ROW),
                [1.0 - self.q, 0.0, self.q],
            ]
        )

    def initial_vector(self) -> np.ndarray:
        init = self.initial if self.initial is not None else stationary_two_state(self)
        return np.array([init[0], 0.0, init[1]])


@dataclass(frozen=True)
class SymmetricDelayChain:
    """Symmetric chain on ``{1, 0, -1}``.

    From +-1 the walk keeps its sign with probability p, pauses with
    probability r and flips with probability 1-p-r.  From 0 it stays with
    probability q and leaves to either side with (1-q)/2.  The initial law
    is always the stationary one.
    """

    p: float
    q: float
    r: float

    @property
    def matrix(self) -> np.ndarray:
        p, q, r = self.p, self.q, self.r
        flip = max(1.0 - p - r, 0.0)
        side = (1.0 - q) / 2.0
        return np.array([[p, r, flip], [side, q, side], [flip, r, p]])

    def initial_vector(self) -> np.ndarray:
        return np.array(stationary_delay(self))


@dataclass(frozen=True)
class GeneralChain:
    """Six-parameter chain on ``{1, 0, -1}`` with an arbitrary initial law.

    Rows of the transition matrix::

        from  1: (p,           p0, 1 - p - p0)
        from  0: (r1,          r,  1 - r - r1)
        from -1: (1 - q - q0,  q0, q)

    ``initial`` is ``(pi1, pi0, pi_minus1)``; ``None`` means stationary.
    """

    p: float
    p0: float
    r1: float
    r: float
    q: float
    q0: float
    initial: Optional[tuple] = None

    @classmethod
    def from_matrix(cls, matrix, initial=None) -> "GeneralChain":
        m = np.asarray(matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValidationError(f"matrix must be 3x3, got shape {m.shape}", field="matrix")
        init = None if initial is None else tuple(float(v) for v in initial)
        return cls(
            p=float(m[0, 0]), p0=float(m[0, 1]),
            r1=float(m[1, 0]), r=float(m[1, 1]),
            q=float(m[2, 2]), q0=float(m[2, 1]),
            initial=init,
        )

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.p, self.p0, max(1.0 - self.p - self.p0, 0.0)],
                [self.r1, self.r, max(1.0 - self.r - self.r1, 0.0)],
                [max(1.0 - self.q - self.q0, 0.0), self.q0, self.q],
            ]
        )

    def initial_vector(self) -> np.ndarray:
        if self.initial is None:
            return np.array(stationary_general(self))
        return np.array(self.initial, dtype=float)


Chain = Union[TwoStateChain, SymmetricDelayChain, GeneralChain]


def _in_range(name, value, lo, hi, *, lo_open=False, hi_open=False):
    if not isinstance(value, (int, float)) or math.isnan(value):
        return [f"{name} is not a number"]
    low_bad = value <= lo if lo_open else value < lo - TOL
    high_bad = value >= hi if hi_open else value > hi + TOL
    if low_bad or high_bad:
        return [f"{name} out of range"]
    return []


def _check_dist(name, init, size):
    if len(init) != size:
        return [f"{name} must have {size} entries"]
    out = []
    for i, v in enumerate(init):
        if not isinstance(v, (int, float)) or math.isnan(v) or v < -TOL:
            out.append(f"{name}[{i}] out of range")
    if not out and abs(sum(init) - 1.0) > TOL:
        out.append(f"{name} does not sum to 1")
    return out


def validate(chain) -> list:
    """Return a list of human-readable violations (empty when valid)."""
    v = []
    if isinstance(chain, TwoStateChain):
        v += _in_range("p", chain.p, 0.0, 1.0, lo_open=True, hi_open=True)
        v += _in_range("q", chain.q, 0.0, 1.0, lo_open=True, hi_open=True)
        if chain.initial is not None:
            v += _check_dist("initial", chain.initial, 2)
    elif isinstance(chain, SymmetricDelayChain):
        v += _in_range("p", chain.p, 0.0, 1.0, hi_open=True)
        v += _in_range("q", chain.q, 0.0, 1.0, hi_open=True)
        v += _in_range("r", chain.r, 0.0, 1.0, hi_open=True)
        if not v:
            v += _in_range("p+r", chain.p + chain.r, 0.0, 1.0)
    elif isinstance(chain, GeneralChain):
        for name in ("p", "p0", "r1", "r", "q", "q0"):
            v += _in_range(name, getattr(chain, name), 0.0, 1.0)
        if not v:
            v += _in_range("p+p0", chain.p + chain.p0, 0.0, 1.0)
            v += _in_range("r+r1", chain.r + chain.r1, 0.0, 1.0)
            v += _in_range("q+q0", chain.q + chain.q0, 0.0, 1.0)
        if chain.initial is not None:
            v += _check_dist("initial", chain.initial, 3)
    else:
        v.append(f"unknown chain type {type(chain).__name__}")
    return v


def require_valid(chain) -> None:
    violations = validate(chain)
    if violations:
        field = violations[0].split()[0]
        raise DomainError("; ".join(violations), field=field)


def stationary_two_state(chain: TwoStateChain) -> tuple:
    require_valid(chain)
    d = 2.0 - chain.p - chain.q
    return ((1.0 - chain.q) / d, (1.0 - chain.p) / d)


def stationary_delay(chain: SymmetricDelayChain) -> tuple:
    require_valid(chain)
    d = 1.0 + chain.r - chain.q
    side = (1.0 - chain.q) / (2.0 * d)
    return (side, chain.r / d, side)


def stationary_general(chain: GeneralChain) -> tuple:
    """Unique stationary vector of the 3x3 matrix by a linear solve.

    Raises ReducibleChain when the chain has more than one closed class.
    """
    require_valid(chain)
    return tuple(_stationary(chain.matrix))


def _stationary(P: np.ndarray) -> np.ndarray:
    n = P.shape[0]
    G = P.T - np.eye(n)
    if np.linalg.matrix_rank(G, tol=1e-10) != n - 1:
        raise ReducibleChain("chain has no unique stationary distribution")
    M = G.copy()
    M[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(M, rhs)
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    return pi / pi.sum()


def stationary(chain) -> tuple:
    """Stationary law of any chain type, over ``(1, 0, -1)``."""
    if isinstance(chain, TwoStateChain):
        a, b = stationary_two_state(chain)
        return (a, 0.0, b)
    if isinstance(chain, SymmetricDelayChain):
        return stationary_delay(chain)
    return stationary_general(chain)


def as_general(chain) -> GeneralChain:
    """Embed any chain in the general family, keeping its initial law."""
    if isinstance(chain, GeneralChain):
        return chain
    return GeneralChain.from_matrix(chain.matrix, tuple(chain.initial_vector()))


def mirror(chain: GeneralChain) -> GeneralChain:
    """Swap the roles of +1 and -1 (matrix and initial law)."""
    perm = [2, 1, 0]
    m = chain.matrix[np.ix_(perm, perm)]
    init = chain.initial_vector()[perm]
    return GeneralChain.from_matrix(m, tuple(init))


# ---------------------------------------------------------------- JSON

_FIELDS = {
    "two_state": {"type", "p", "q", "initial"},
    "symmetric_delay": {"type", "p", "q", "r"},
    "general": {"type", "matrix", "initial"},
}


def _number(obj, key):
    if key not in obj:
        raise ValidationError(f"missing field '{key}'", field=key)
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(f"field '{key}' must be a number", field=key)
    return float(val)


def _vector(obj, key, size):
    val = obj[key]
    if not isinstance(val, list) or len(val) != size:
        raise ValidationError(f"field '{key}' must be a list of {size} numbers", field=key)
    out = []
    for x in val:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ValidationError(f"field '{key}' must contain numbers", field=key)
        out.append(float(x))
    return tuple(out)


def chain_from_json(obj) -> Chain:
    """Build and validate a chain from its JSON object form."""
    if not isinstance(obj, dict):
        raise ValidationError("chain must be a JSON object", field="chain")
    kind = obj.get("type")
    if kind not in _FIELDS:
        raise ValidationError(f"unknown chain type {kind!r}", field="type")
    extra = sorted(set(obj) - _FIELDS[kind])
    if extra:
        raise ValidationError(f"unknown field '{extra[0]}'", field=extra[0])

    if kind == "two_state":
        init = _vector(obj, "initial", 2) if obj.get("initial") is not None else None
        chain = TwoStateChain(_number(obj, "p"), _number(obj, "q"), init)
    elif kind == "symmetric_delay":
        chain = SymmetricDelayChain(_number(obj, "p"), _number(obj, "q"), _number(obj, "r"))
    else:
        if "matrix" not in obj:
            raise ValidationError("missing field 'matrix'", field="matrix")
        rows = obj["matrix"]
        if not isinstance(rows, list) or len(rows) != 3:
            raise ValidationError("field 'matrix' must be 3 rows", field="matrix")
        m = [_vector({"matrix": row}, "matrix", 3) for row in rows]
        for i, row in enumerate(m):
            if abs(sum(row) - 1.0) > TOL:
                raise ValidationError(f"matrix row {i} does not sum to 1", field="matrix")
        init = _vector(obj, "initial", 3) if obj.get("initial") is not None else None
        chain = GeneralChain.from_matrix(m, init)

    violations = validate(chain)
    if violations:
        field = violations[0].split()[0].split("[")[0]
        raise ValidationError("; ".join(violations), field=field)
    return chain


def chain_to_json(chain) -> dict:
    if isinstance(chain, TwoStateChain):
        out = {"type": "two_state", "p": chain.p, "q": chain.q}
        if chain.initial is not None:
            out["initial"] = list(chain.initial)
        return out
    if isinstance(chain, SymmetricDelayChain):
        return {"type": "symmetric_delay", "p": chain.p, "q": chain.q, "r": chain.r}
    out = {"type": "general", "matrix": chain.matrix.tolist()}
    if chain.initial is not None:
        out["initial"] = list(chain.initial)
    return out
