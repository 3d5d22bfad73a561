import itertools

import numpy as np
import pytest

from crwruin import analytic, oracle, patterns
from crwruin.errors import DomainError, NotMarkov, ValidationError
from crwruin.patterns import (
    Pattern,
    PatternGame,
    build_payoff_chain,
    expected_count,
    markov_check,
    parse_pattern,
    prob_first,
    race,
    waiting_time,
    waiting_time_either,
)

from conftest import PATTERN_CHAIN

LEN2 = ["".join(p) for p in itertools.product("HT", repeat=2)]
LEN3 = ["".join(p) for p in itertools.product("HT", repeat=3)]


def brute_force(pats, horizon=400, bias=0.5):
    """Expand flip histories until one of ``pats`` appears (plain suffix test).

    Histories are merged on their last L-1 flips (L = longest pattern),
    which is all the future detection depends on.  Returns
    (E[flips] truncated at ``horizon``, P(pats[0] appears first), unresolved
    mass).  A flip completing both patterns counts as a loss for pats[0].
    """
    keep = max(len(p) for p in pats) - 1
    e_flips = 0.0
    p_first = 0.0
    live = {"": 1.0}
    for n in range(1, horizon + 1):
        nxt = {}
        for s, w in live.items():
            for c in "HT":
                t = s + c
                wt = w * (bias if c == "H" else 1 - bias)
                found = [p for p in pats if t.endswith(p)]
                if found:
                    e_flips += n * wt
                    if found == [pats[0]]:
                        p_first += wt
                else:
                    key = t[-keep:] if keep else ""
                    nxt[key] = nxt.get(key, 0.0) + wt
        live = nxt
    return e_flips, p_first, sum(live.values())


def overlap_sum(pat):
    return sum(2 ** k for k in range(1, len(pat) + 1) if pat[:k] == pat[-k:])


def test_parse_pattern():
    assert parse_pattern(" hT ") == Pattern("HT")
    for bad in ["", "HX", "12"]:
        with pytest.raises(ValidationError):
            parse_pattern(bad)
    with pytest.raises(ValidationError):
        parse_pattern(3)


@pytest.mark.parametrize("pat", ["HH", "TH"])
def test_expected_count_fair(pat):
    assert expected_count(pat, 5) == pytest.approx(1.0)
    # Independent: average occurrence count over all 2**5 sequences.
    total = sum(sum(1 for i in range(4) if "".join(s)[i:i + 2] == pat)
                for s in itertools.product("HT", repeat=5))
    assert total / 32 == pytest.approx(1.0)


def test_expected_count_biased_and_domain():
    assert expected_count("HH", 2, 0.3) == pytest.approx(0.09)
    with pytest.raises(DomainError):
        expected_count("HHH", 2)


def test_expected_count_linear_in_n():
    vals = [expected_count("HTT", n, 0.4) for n in range(3, 12)]
    assert np.diff(vals) == pytest.approx([0.4 * 0.6 * 0.6] * 8)


def test_waiting_times_facts():
    assert waiting_time("HH") == pytest.approx(6.0, abs=1e-12)
    assert waiting_time("TH") == pytest.approx(4.0, abs=1e-12)
    assert waiting_time("H") == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("pat", LEN2 + LEN3)
def test_waiting_time_overlap_identity(pat):
    assert waiting_time(pat) == pytest.approx(overlap_sum(pat), abs=1e-10)


def test_waiting_time_either():
    assert waiting_time_either(["HH", "TH"]) == pytest.approx(3.0, abs=1e-12)
    assert waiting_time_either(["H", "T"]) == pytest.approx(1.0, abs=1e-12)
    e, _, tail = brute_force(["HH", "TT"], horizon=60)
    assert tail < 1e-12
    assert waiting_time_either(["HH", "TT"]) == pytest.approx(e, abs=1e-9)
    with pytest.raises(ValidationError):
        waiting_time_either(["HH", "HH"])


def test_waiting_time_impossible_pattern():
    with pytest.raises(DomainError):
        waiting_time("HT", coin_bias=1.0)


def test_prob_first_fact():
    assert prob_first("HH", "TH") == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(ValidationError):
        prob_first("HH", "hh")


@pytest.mark.parametrize("win, lose", [(a, b) for a, b in itertools.permutations(LEN2, 2)])
def test_prob_first_against_brute_force(win, lose):
    _, p, tail = brute_force([win, lose], horizon=60)
    assert tail < 1e-9
    assert prob_first(win, lose) == pytest.approx(p, abs=1e-9)
    assert prob_first(win, lose) + prob_first(lose, win) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("bias", [0.3, 0.7])
def test_race_biased_against_brute_force(bias):
    e, p, tail = brute_force(["HTH", "THH"], bias=bias)
    rc = race("HTH", "THH", bias)
    assert tail < 1e-9
    assert rc.p_win == pytest.approx(p, abs=1e-8)
    assert rc.expected_flips == pytest.approx(e, abs=1e-8)


def test_race_ties_go_to_lose():
    rc = race("TH", "H")
    assert rc.ties_possible
    assert rc.p_win == pytest.approx(0.0, abs=1e-15)
    assert not race("HH", "TH").ties_possible


def test_game_validation():
    with pytest.raises(ValidationError):
        PatternGame("HH", "HH")
    with pytest.raises(DomainError):
        PatternGame("HH", "TH", 1.5)


def test_markov_check_verdicts():
    assert markov_check(PatternGame("HH", "TH")).is_markov
    v = markov_check(PatternGame("HH", "TT"))
    assert not v.is_markov
    prev, now, nxt, cond2, cond1 = v.witness
    assert abs(cond2 - cond1) > 0.1
    with pytest.raises(ValidationError):
        markov_check(PatternGame("HHH", "TH"))


def test_build_payoff_chain_hh_th():
    chain = build_payoff_chain(PatternGame("HH", "TH"))
    assert chain.matrix == pytest.approx(np.array(PATTERN_CHAIN), abs=1e-15)
    assert chain.initial_vector() == pytest.approx([0.25, 0.5, 0.25], abs=1e-15)
    assert oracle.first_step_alpha(chain, (1, 1)) == pytest.approx(0.25, abs=1e-12)


def test_build_payoff_chain_not_markov():
    with pytest.raises(NotMarkov) as info:
        build_payoff_chain(PatternGame("HH", "TT"))
    assert info.value.witness is not None


def coin_world_alpha(A, B):
    """Ruin of the HH/TH game computed on (wealth, last flip) directly from coin flips."""
    # value iteration; state after the first flip, wealth 0
    h = {}
    states = [(w, c) for w in range(-B + 1, A) for c in "HT"]
    for s in states:
        h[s] = 0.0
    for _ in range(4000):
        new = {}
        for w, c in states:
            v = 0.0
            for d in "HT":
                step = 1 if c + d == "HH" else (-1 if c + d == "TH" else 0)
                nw = w + step
                v += 0.5 * (1.0 if nw >= A else 0.0 if nw <= -B else h[(nw, d)])
            new[(w, c)] = v
        h = new
    return 0.5 * h[(0, "H")] + 0.5 * h[(0, "T")]


@pytest.mark.parametrize("A, B", list(itertools.product(range(1, 5), repeat=2)))
def test_payoff_chain_ruin_matches_formula(A, B):
    chain = build_payoff_chain(PatternGame("HH", "TH"))
    alpha = oracle.first_step_alpha(chain, (A, B))
    assert alpha == pytest.approx(analytic.ruin_two_pattern((A, B)), abs=1e-10)
    assert alpha == pytest.approx(coin_world_alpha(A, B), abs=1e-10)


def test_pattern_facts():
    facts = patterns.pattern_facts()
    assert facts == pytest.approx({"waiting_time_HH": 6.0, "waiting_time_TH": 4.0,
                                   "waiting_time_either": 3.0, "prob_HH_before_TH": 0.25}, abs=1e-12)
