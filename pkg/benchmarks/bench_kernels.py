"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times the simplex kernel on a NOMA LP of the default grid and the
brute-force enumeration on a small instance, once per available backend,
and checks that both backends return identical results.
"""

import argparse
import statistics
import time

import numpy as np

from gridsched import _kernels
from gridsched.exact import solve_p0_bruteforce
from gridsched.grid import GridSpec
from gridsched.harness import Scenario, make_instance
from gridsched.lp import build_p1, solve_lp


def _time(fn, repeat):
    out, times = None, []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    lp = build_p1(make_instance(Scenario(q_kbps=(128.0,) * 5, tau_ms=(1.0,) * 5, n_embb=5), 0)).lp
    # 5x3 grid: shapes 1 and 2 only fit, 14 blocks, the brute-force limit
    small = make_instance(Scenario(grid=GridSpec(5, 3, 1.25, 6 / 11), q_kbps=(200.0, 200.0), tau_ms=(1.25, 1.25),
                                   n_embb=2), 0)
    print(f"P1 LP: {lp.shape[0]} rows x {lp.shape[1]} columns; brute force: {small.n_blocks} blocks, "
          f"{small.n_services} services")

    results = {}
    for name in sorted(_kernels.BACKENDS):
        sol, t_lp = _time(lambda: solve_lp(lp, backend=name), args.repeat)
        bf, t_bf = _time(lambda: solve_p0_bruteforce(small, backend=name), args.repeat)
        results[name] = (sol, bf, t_lp, t_bf)
        print(f"{name:>7}: simplex {t_lp * 1e3:9.1f} ms ({sol.iterations} pivots)   "
              f"brute force {t_bf * 1e3:9.1f} ms ({bf.info['leaves']} leaves)")

    if len(results) == 2:
        (s_py, b_py, lp_py, bf_py), (s_cy, b_cy, lp_cy, bf_cy) = results["python"], results["cython"]
        same = np.array_equal(s_py.x, s_cy.x) and b_py.assignments == b_cy.assignments
        print(f"speedup: simplex {lp_py / lp_cy:.1f}x, brute force {bf_py / bf_cy:.1f}x; "
              f"identical results: {same}")
    else:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
