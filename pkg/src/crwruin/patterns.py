"""Coin-flip pattern games: waiting times, races and payoff chains.

Occurrence questions are answered on the prefix automaton of the pattern
set (states are the proper prefixes; a flip moves to the longest suffix
that is still a prefix) by the same kind of absorbing linear solve used
for ruin problems.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chains import GeneralChain
from .errors import DomainError, NotMarkov, ValidationError

ALPHABET = "HT"


@dataclass(frozen=True)
class Pattern:
    symbols: str

    def __post_init__(self):
        if not self.symbols or any(c not in ALPHABET for c in self.symbols):
            raise ValidationError(f"pattern must be a nonempty string over H/T: {self.symbols!r}",
                                  field="pattern")

    def __len__(self):
        return len(self.symbols)

    def __str__(self):
        return self.symbols


def parse_pattern(text) -> Pattern:
    if isinstance(text, Pattern):
        return text
    if not isinstance(text, str):
        raise ValidationError("pattern must be a string", field="pattern")
    return Pattern(text.strip().upper())


@dataclass(frozen=True)
class PatternGame:
    """+1 for each occurrence of ``win_pattern``, -1 for ``lose_pattern``."""

    win_pattern: Pattern
    lose_pattern: Pattern
    coin_bias: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "win_pattern", parse_pattern(self.win_pattern))
        object.__setattr__(self, "lose_pattern", parse_pattern(self.lose_pattern))
        if self.win_pattern == self.lose_pattern:
            raise ValidationError("win and lose patterns must differ", field="pattern")
        _check_bias(self.coin_bias)


def _check_bias(bias, open_interval=False):
    ok = 0.0 < bias < 1.0 if open_interval else 0.0 <= bias <= 1.0
    if not ok:
        raise DomainError(f"coin_bias={bias} out of range", field="coin_bias")


def _symbol_prob(c, bias):
    return bias if c == "H" else 1.0 - bias


def expected_count(pat, n: int, coin_bias: float = 0.5) -> float:
    """Expected number of (possibly overlapping) occurrences in ``n`` flips."""
    pat = parse_pattern(pat)
    _check_bias(coin_bias)
    if n < len(pat):
        raise DomainError(f"n={n} shorter than the pattern", field="n")
    window = float(np.prod([_symbol_prob(c, coin_bias) for c in pat.symbols]))
    return (n - len(pat) + 1) * window


# ---------------------------------------------------------------- automaton

class _Automaton:
    def __init__(self, pats, bias):
        self.pats = [p.symbols for p in pats]
        prefixes = {""}
        for p in self.pats:
            prefixes.update(p[:k] for k in range(len(p)))
        self.states = sorted(prefixes, key=lambda s: (len(s), s))
        self.index = {s: i for i, s in enumerate(self.states)}
        self.bias = bias

    def step(self, state, c):
        """Return ``(next_state, completed)``; completed lists pattern indices."""
        w = state + c
        done = [i for i, p in enumerate(self.pats) if w.endswith(p)]
        if done:
            return None, done
        for k in range(len(w) + 1):
            if w[k:] in self.index:
                return w[k:], []
        raise AssertionError("empty prefix always matches")

    def solve(self, payoff):
        """Solve ``h = sum_c P(c) (payoff(done) if done else h(next))`` plus ``t`` (flip count)."""
        n = len(self.states)
        M = np.eye(n)
        rhs = np.zeros((n, 2))
        rhs[:, 1] = 1.0
        for i, s in enumerate(self.states):
            for c in ALPHABET:
                w = _symbol_prob(c, self.bias)
                if w == 0.0:
                    continue
                nxt, done = self.step(s, c)
                if done:
                    rhs[i, 0] += w * payoff(done)
                else:
                    M[i, self.index[nxt]] -= w
        try:
            sol = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise DomainError("pattern can never occur with this coin", field="coin_bias") from exc
        return sol[0, 0], sol[0, 1]


def waiting_time(pat, coin_bias: float = 0.5) -> float:
    """Expected number of flips until ``pat`` first appears."""
    pat = parse_pattern(pat)
    _check_bias(coin_bias)
    return float(_Automaton([pat], coin_bias).solve(lambda d: 0.0)[1])


def waiting_time_either(pats, coin_bias: float = 0.5) -> float:
    pats = [parse_pattern(p) for p in pats]
    if len(set(pats)) < 2:
        raise ValidationError("need at least two distinct patterns", field="pattern")
    _check_bias(coin_bias)
    return float(_Automaton(pats, coin_bias).solve(lambda d: 0.0)[1])


def ties_possible(win, lose) -> bool:
    """True when a single flip can complete both patterns (one is a suffix of the other)."""
    w, l = parse_pattern(win).symbols, parse_pattern(lose).symbols
    return w.endswith(l) or l.endswith(w)


@dataclass(frozen=True)
class RaceResult:
    p_win: float
    p_lose: float
    expected_flips: float
    ties_possible: bool


def race(win, lose, coin_bias: float = 0.5) -> RaceResult:
    """Race between two patterns; a flip completing both counts for ``lose``."""
    win, lose = parse_pattern(win), parse_pattern(lose)
    if win == lose:
        raise ValidationError("patterns must differ", field="pattern")
    _check_bias(coin_bias)
    auto = _Automaton([win, lose], coin_bias)
    p_win, flips = auto.solve(lambda done: 1.0 if done == [0] else 0.0)
    return RaceResult(float(p_win), float(1.0 - p_win), float(flips), ties_possible(win, lose))


def prob_first(win, lose, coin_bias: float = 0.5) -> float:
    """P(``win`` occurs strictly before ``lose``)."""
    return race(win, lose, coin_bias).p_win


# ---------------------------------------------------------------- payoff chain

def _payoff(game, window):
    if window == game.win_pattern.symbols:
        return 1
    if window == game.lose_pattern.symbols:
        return -1
    return 0


@dataclass(frozen=True)
class MarkovVerdict:
    is_markov: bool
    witness: Optional[tuple] = None   # (x_prev, x_now, x_next, P(next|now, prev), P(next|now))
    matrix: Optional[list] = None
    initial: Optional[tuple] = None


_IDX = {1: 0, 0: 1, -1: 2}


def markov_check(game: PatternGame, tol: float = 1e-12) -> MarkovVerdict:
    """Exact first-order Markov test of the payoff sequence of a length-2 game.

    Enumerates the law of four consecutive flips and compares
    P(X_{n+1} | X_n) with P(X_{n+1} | X_n, X_{n-1}).
    """
    if len(game.win_pattern) != 2 or len(game.lose_pattern) != 2:
        raise ValidationError("markov_check supports length-2 patterns only", field="pattern")
    bias = game.coin_bias
    _check_bias(bias, open_interval=True)
    three = np.zeros((3, 3, 3))
    for flips in itertools.product(ALPHABET, repeat=4):
        w = float(np.prod([_symbol_prob(c, bias) for c in flips]))
        s = "".join(flips)
        xs = [_IDX[_payoff(game, s[i:i + 2])] for i in range(3)]
        three[xs[0], xs[1], xs[2]] += w
    two = three.sum(axis=0)          # (X_n, X_{n+1})
    one = two.sum(axis=1)            # X_n
    trans = two / one[:, None]
    for a, b, c in itertools.product(range(3), repeat=3):
        mass = three[a, b].sum()
        if mass <= 0.0:
            continue
        cond2 = three[a, b, c] / mass
        if abs(cond2 - trans[b, c]) > tol:
            vals = (1, 0, -1)
            return MarkovVerdict(False, (vals[a], vals[b], vals[c], float(cond2), float(trans[b, c])))
    return MarkovVerdict(True, None, trans.tolist(), tuple(float(v) for v in one))


def build_payoff_chain(game: PatternGame) -> GeneralChain:
    """Payoff chain of a Markov length-2 game, started from the law of the first payoff."""
    verdict = markov_check(game)
    if not verdict.is_markov:
        raise NotMarkov(f"{game.win_pattern} vs {game.lose_pattern} payoffs are not Markov",
                        witness=verdict.witness)
    return GeneralChain.from_matrix(verdict.matrix, verdict.initial)


def pattern_facts(coin_bias: float = 0.5) -> dict:
    """The HH-versus-TH facts: waiting times and the race probability."""
    return {
        "waiting_time_HH": waiting_time("HH", coin_bias),
        "waiting_time_TH": waiting_time("TH", coin_bias),
        "waiting_time_either": waiting_time_either(["HH", "TH"], coin_bias),
        "prob_HH_before_TH": prob_first("HH", "TH", coin_bias),
    }
