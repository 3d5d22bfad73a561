"""Compare the numba and numpy backends on the two hot kernels.

    python benchmarks/bench_simulate.py [--paths N] [--repeat K]

Times Monte Carlo simulation and path-tree enumeration on a few chains,
after one warm-up call per backend so numba compile time is excluded
(it is reported separately).  Also checks that both backends return
identical simulation results.  Enumeration sums path masses in a
different order on each backend (depth-first vs level-wise), so there
the largest absolute difference is shown instead.
"""
import argparse
import time

from crwruin import oracle
from crwruin._accel import HAVE_NUMBA, NUMBA_DISABLED
from crwruin.chains import GeneralChain, SymmetricDelayChain, TwoStateChain

CASES = [
    ("two-state p=.7 q=.4", TwoStateChain(0.7, 0.4), (5, 5)),
    ("delay p=.3 q=.6 r=.4", SymmetricDelayChain(0.3, 0.6, 0.4), (5, 5)),
    ("general (reference chain)", GeneralChain.from_matrix(
        [[1 / 2, 1 / 4, 1 / 4], [1 / 3, 1 / 3, 1 / 3], [1 / 8, 1 / 8, 3 / 4]], (0, 1, 0)), (8, 4)),
]
ENUM = (GeneralChain(0.7, 0.1, 0.2, 0.1, 0.6, 0.2), (2, 1), 18)


def best_of(fn, repeat):
    out, times = None, []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return out, min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA or NUMBA_DISABLED:
        raise SystemExit("numba unavailable or disabled; nothing to compare")

    t = time.perf_counter()
    oracle.simulate(*CASES[0][1:], n_paths=10, seed=0, backend="numba")
    oracle.enumerate_paths(ENUM[0], ENUM[1], 3, backend="numba")
    print(f"numba warm-up (compile): {time.perf_counter() - t:.2f} s\n")

    print(f"{'kernel':34} {'numpy s':>9} {'numba s':>9} {'speedup':>8}  identical")
    for name, chain, b in CASES:
        res = {}
        for backend in ("numpy", "numba"):
            res[backend] = best_of(lambda: oracle.simulate(chain, b, args.paths, seed=1,
                                                           backend=backend), args.repeat)
        same = res["numpy"][0] == res["numba"][0]
        tn, tb = res["numpy"][1], res["numba"][1]
        print(f"{'simulate ' + name:34} {tn:9.3f} {tb:9.3f} {tn / tb:7.1f}x  {same}")

    chain, b, horizon = ENUM
    res = {}
    for backend in ("numpy", "numba"):
        res[backend] = best_of(lambda: oracle.enumerate_paths(chain, b, horizon, backend=backend),
                               args.repeat)
    a, c = res["numpy"][0], res["numba"][0]
    diff = max(abs(a.alpha_lower - c.alpha_lower), abs(a.mass_unresolved - c.mass_unresolved),
               abs(a.mass_lower_barrier - c.mass_lower_barrier))
    tn, tb = res["numpy"][1], res["numba"][1]
    label = f"enumerate h={horizon} ({res['numba'][0].nodes} nodes)"
    print(f"{label:34} {tn:9.3f} {tb:9.3f} {tn / tb:7.1f}x  diff {diff:.0e}")


if __name__ == "__main__":
    main()
