"""Acceptance criteria, each at its stated tolerance.

Every test records one ``criterion N: PASS/FAIL`` line, printed in the
terminal summary (see conftest.py) as well as to stdout.
"""
import itertools
import json
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, REF_CHAIN
from crwruin import analytic, cli, martingale, oracle
from crwruin.chains import GeneralChain, SymmetricDelayChain, TwoStateChain, validate
from crwruin.patterns import PatternGame, build_payoff_chain

GRID = [k / 10 for k in range(1, 10)]
BARS = [(A, B) for A in range(1, 6) for B in range(1, 6)]


def verdict(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def ref_chain():
    return GeneralChain.from_matrix(REF_CHAIN, (0.0, 1.0, 0.0))


def delay_grid():
    for p, q, r in itertools.product(GRID, GRID, GRID):
        c = SymmetricDelayChain(p, q, r)
        if not validate(c):
            yield c


def test_criterion_1_pattern_facts(capsys):
    t = time.perf_counter()
    code = cli.main(["pattern", "--facts", "--format", "json"])
    elapsed = time.perf_counter() - t
    facts = json.loads(capsys.readouterr().out)["result"]["facts"]
    want = {"waiting_time_HH": 6.0, "waiting_time_TH": 4.0,
            "waiting_time_either": 3.0, "prob_HH_before_TH": 0.25}
    err = max(abs(facts[k] - v) for k, v in want.items())
    verdict(1, code == 0 and err <= 1e-12 and elapsed < 1.0,
            f"max error {err:.1e}, {elapsed:.3f} s")


def test_criterion_2_ref_chain():
    martingale._solve_exponential.cache_clear()
    t = time.perf_counter()
    g = ref_chain()
    params = martingale.solve_exponential(g)
    x, y, z = params.reparam
    # Rows of the exponential system, written out independently of the solver.
    (p, p0, _), (r1, r, _), (_, q0, q) = g.matrix
    e1, e0, e2 = 1 - p - p0, 1 - r1 - r, 1 - q - q0
    rows = [p * x + p0 / (y * z) + e1 / (z * z * x) - 1,
            r1 * x * y * z + r + e0 * y / (z * x) - 1,
            e2 * z * z * x + q0 * z / y + q / x - 1]
    res = max(abs(v) for v in rows)
    m1 = martingale.exponential_start_value(params, (0.0, 1.0, 0.0))
    a11 = martingale.ruin_general(g, (1, 1)).alpha
    closed = 0.0
    for A, B in itertools.product(range(1, 6), repeat=2):
        ref = ((18 / 13) * 1.3 ** B - 1) / ((20 / 13) * 1.3 ** (A + B) - 1)
        closed = max(closed, abs(martingale.ruin_general(g, (A, B)).alpha - ref))
    elapsed = time.perf_counter() - t
    ok = (abs(params.lam - 1.3) < 1e-10 and res < 1e-10 and abs(m1 - 1) <= 1e-12
          and abs(a11 - 0.5) <= 1e-12 and closed <= 1e-10 and elapsed < 1.0)
    verdict(2, ok, f"lambda {params.lam:.12f}, residual {res:.1e}, |E(M1)-1| {abs(m1 - 1):.1e}, "
                   f"|alpha(1,1)-1/2| {abs(a11 - 0.5):.1e}, closed-expression error {closed:.1e}, "
                   f"{elapsed:.3f} s")


def test_criterion_3_formula_oracle_grid():
    t = time.perf_counter()
    worst, count = 0.0, 0
    for p in GRID:
        for b in BARS:
            fs = oracle.first_step(TwoStateChain(p, p), b)
            worst = max(worst, abs(analytic.ruin_symmetric(p, b) - fs.alpha),
                        abs(analytic.etau_symmetric(p, b) - fs.expected_tau))
            count += 1
    for p, q in itertools.product(GRID, GRID):
        if abs(p - q) < 0.05:
            continue
        c = TwoStateChain(p, q)
        for b in BARS:
            fs = oracle.first_step(c, b)
            worst = max(worst, abs(analytic.ruin_asymmetric(c, b) - fs.alpha),
                        abs(analytic.etau_asymmetric(c, b) - fs.expected_tau))
            count += 1
    for c in delay_grid():
        for b in BARS:
            fs = oracle.first_step(c, b)
            worst = max(worst, abs(analytic.ruin_symmetric_delays(c.p, c.r, b) - fs.alpha),
                        abs(analytic.etau_symmetric_delays(c, b) - fs.expected_tau))
            count += 1
    elapsed = time.perf_counter() - t
    verdict(3, worst <= 1e-9 and elapsed < 30.0,
            f"{count} cases, max error {worst:.1e}, {elapsed:.2f} s")


def test_criterion_4_reductions():
    worst = 0.0
    for p in GRID:
        for b in BARS:
            worst = max(worst, abs(analytic.ruin_symmetric_delays(p, 0.0, b)
                                   - analytic.ruin_symmetric(p, b)))
            for q in GRID:
                worst = max(worst, abs(analytic.etau_symmetric_delays(SymmetricDelayChain(p, q, 0.0), b)
                                       - analytic.etau_symmetric(p, b)))
                if abs(q - (1 - p)) < 1e-12 and abs(p - 0.5) > 1e-9:
                    worst = max(worst, abs(analytic.ruin_asymmetric(TwoStateChain(p, q), b)
                                           - analytic.ruin_iid(p, b)))
    gut = 0
    for p, q in itertools.product(GRID, GRID):
        r = round(1 - 2 * p, 10)
        if abs(r - q) > 1e-12 or r <= 0:
            continue
        for A, B in BARS:
            c = SymmetricDelayChain(p, q, r)
            worst = max(worst, abs(analytic.etau_symmetric_delays(c, (A, B)) - A * B / (1 - q)))
            gut += 1
    verdict(4, worst <= 1e-10 and gut > 0, f"max error {worst:.1e} ({gut} Gut cases)")


def test_criterion_5_two_pattern():
    chain = build_payoff_chain(PatternGame("HH", "TH"))
    worst = 0.0
    for A, B in itertools.product(range(1, 5), repeat=2):
        worst = max(worst, abs(analytic.ruin_two_pattern((A, B))
                               - oracle.first_step_alpha(chain, (A, B))))
    co = martingale.additive_coeffs(chain)
    coeff = max(abs(co.a2 - 1), abs(co.a1), abs(co.c))
    verdict(5, worst <= 1e-10 and coeff <= 1e-12,
            f"alpha error {worst:.1e}, coefficients (a2, a1, c) = ({co.a2 + 0.0:g}, {co.a1 + 0.0:g}, {co.c + 0.0:g})")


def test_criterion_6_martingale_suite():
    tol = 1e-12
    worst = {}

    def track(name, d):
        worst[name] = max(worst.get(name, 0.0), d)

    two = (1, -1)
    for p, q in itertools.product(GRID, GRID):
        c = TwoStateChain(p, q)
        track("additive two-state", martingale.one_step_defect(
            c.matrix, martingale.additive_martingale(martingale.additive_coeffs(c)), states=two))
        if abs(p - q) >= 0.05:
            params = martingale.solve_exponential(c)
            track("exponential two-state", martingale.one_step_defect(
                c.matrix, martingale.exponential_martingale(params), states=two, relative=True))
    for p in GRID:
        co = martingale.quadratic_coeffs_two_state(p)
        track("quadratic two-state", martingale.one_step_defect(
            TwoStateChain(p, p).matrix, martingale.quadratic_martingale(co), states=two))
    for c in delay_grid():
        co = martingale.quadratic_coeffs_delay(c)
        track("quadratic delay", martingale.one_step_defect(c.matrix, martingale.quadratic_martingale(co)))
    g = ref_chain()
    params = martingale.solve_exponential(g)
    track("exponential reference chain", martingale.one_step_defect(
        g.matrix, martingale.exponential_martingale(params)))
    pc = build_payoff_chain(PatternGame("HH", "TH"))
    track("additive pattern chain", martingale.one_step_defect(
        pc.matrix, martingale.additive_martingale(martingale.additive_coeffs(pc))))
    rng = np.random.default_rng(7)
    for _ in range(50):
        rc = GeneralChain.from_matrix(rng.dirichlet(np.ones(3), size=3))
        track("additive general", martingale.one_step_defect(
            rc.matrix, martingale.additive_martingale(martingale.additive_coeffs(rc))))
        try:
            params = martingale.solve_exponential(rc)
        except martingale.DegenerateDrift:
            continue
        track("exponential general", martingale.one_step_defect(
            rc.matrix, martingale.exponential_martingale(params), relative=True))
    bad = {k: v for k, v in worst.items() if not v < tol}
    verdict(6, not bad, f"max defect {max(worst.values()):.1e} over {len(worst)} families"
                        + (f"; failing {bad}" if bad else ""))


MC_CASES = [
    (TwoStateChain(0.6, 0.6), (3, 2), 1),
    (TwoStateChain(0.7, 0.4), (2, 3), 2),
    (TwoStateChain(0.2, 0.5), (4, 4), 3),
    (SymmetricDelayChain(0.5, 0.3, 0.2), (2, 2), 4),
    (SymmetricDelayChain(0.3, 0.6, 0.4), (3, 1), 5),
    (SymmetricDelayChain(0.1, 0.2, 0.7), (2, 4), 6),
    (GeneralChain.from_matrix(REF_CHAIN, (0.0, 1.0, 0.0)), (3, 2), 7),
    (GeneralChain(0.7, 0.1, 0.2, 0.1, 0.6, 0.2), (2, 1), 8),
    (GeneralChain(0.2, 0.3, 0.3, 0.3, 0.3, 0.2), (3, 3), 9),
    (GeneralChain(0.5, 0.2, 0.1, 0.5, 0.4, 0.3), (5, 2), 10),
]


def test_criterion_7_monte_carlo():
    t = time.perf_counter()
    worst_z, identical = 0.0, True
    for chain, b, seed in MC_CASES:
        fs = oracle.first_step(chain, b)
        mc = oracle.simulate(chain, b, 10**6, seed)
        assert mc.truncated_paths == 0
        worst_z = max(worst_z, abs(mc.alpha_hat - fs.alpha) / mc.stderr_alpha,
                      abs(mc.tau_hat - fs.expected_tau) / mc.stderr_tau)
        identical &= oracle.simulate(chain, b, 10**6, seed) == mc
    elapsed = time.perf_counter() - t
    verdict(7, worst_z <= 4.0 and identical and elapsed < 60.0,
            f"{len(MC_CASES)} cases, worst |z| {worst_z:.2f}, reruns identical {identical}, "
            f"{elapsed:.1f} s")


ENUM_CASES = [
    (build_payoff_chain(PatternGame("HH", "TH")), (1, 1), 24),
    (GeneralChain.from_matrix(REF_CHAIN, (0.0, 1.0, 0.0)), (1, 1), 16),
    (TwoStateChain(0.8, 0.7), (2, 2), 24),
    (SymmetricDelayChain(0.8, 0.1, 0.1), (1, 2), 15),
    (GeneralChain(0.7, 0.1, 0.2, 0.1, 0.6, 0.2), (2, 1), 18),
]


def test_criterion_8_enumeration_bracket():
    ok, worst_mass = True, 0.0
    for chain, b, horizon in ENUM_CASES:
        en = oracle.enumerate_paths(chain, b, horizon)
        worst_mass = max(worst_mass, en.mass_unresolved)
        ok &= en.brackets(oracle.first_step_alpha(chain, b)) and en.mass_unresolved < 1e-6
    verdict(8, ok, f"{len(ENUM_CASES)} cases, max unresolved mass {worst_mass:.1e}")
