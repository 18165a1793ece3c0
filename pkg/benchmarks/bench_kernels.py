"""Compare the compiled and pure-Python kernels on representative workloads.

Usage::

    python benchmarks/bench_kernels.py [--repeat N] [--quick]

Each workload runs through the public API with the backend switched by
``bindeblur._core.use_backend``; results are checked to agree before the
timings are printed.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from bindeblur import _core
from bindeblur.directional import line_sum_system
from bindeblur.feasibility import IntegerSystem, SearchBudget, solve_dfs, solve_with_margins
from bindeblur.lattice import SolverConfig, solve_integer_system
from bindeblur.lines import canonical_directions
from bindeblur.oracle import brute_force_recover
from bindeblur.spectral import Band, BinaryMatrix, dft_on


def lll_workload():
    x = BinaryMatrix.random(29, 29, 420, 1)
    spec = dft_on(x, Band.square(5))
    dc = max(canonical_directions(29, spec.band), key=lambda d: d.m_count)
    sys = line_sum_system(spec, dc)

    def run():
        return tuple(solve_integer_system(sys, SolverConfig(), offset=[14] * 29).x)
    return "lll 29 line sums", run


def dfs_workload():
    rng = np.random.default_rng(5)
    a = rng.integers(-3, 4, size=(6, 18)).astype(float)
    x = rng.integers(0, 2, size=18)
    sys = IntegerSystem(a, a @ x, np.zeros(18, np.int64), np.ones(18, np.int64))

    def run():
        res = solve_dfs(sys, SearchBudget())
        return res.status, res.nodes
    return "dfs 18 binary vars", run


def margin_workload():
    x = BinaryMatrix.random(5, 7, 17, 2)
    spec = dft_on(x, Band.four_coefficient())
    m = np.arange(1, 6)[:, None]
    n = np.arange(1, 8)[None, :]
    w = np.exp(2j * np.pi * (m / 5 + n / 7)).ravel()
    a = np.vstack([w.real, w.imag])
    b = np.array([spec[1, 1].real, spec[1, 1].imag])

    def run():
        res = solve_with_margins(5, 7, x.row_sums(), x.col_sums(), a, b, SearchBudget(),
                                 row_tol=np.full(2, 1e-6))
        return res.status, tuple(res.x)
    return "margin 5x7", run


def gray_workload():
    x = BinaryMatrix.random(4, 5, 9, 3)
    spec = dft_on(x, Band.square(1))

    def run():
        return frozenset(brute_force_recover(spec))
    return "gray-code 2^20", run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="skip the slow exhaustive workload")
    args = ap.parse_args(argv)
    backends = sorted(_core.available_backends())
    if "cython" not in backends:
        print("compiled extension not built; only the Python backend is timed")
    workloads = [lll_workload(), dfs_workload(), margin_workload()]
    if not args.quick:
        workloads.append(gray_workload())
    print(f"{'workload':<22}" + "".join(f"{b:>12}" for b in backends) + "     speedup")
    for name, run in workloads:
        times, results = {}, {}
        for b in backends:
            with _core.use_backend(b):
                samples = []
                for _ in range(args.repeat):
                    t0 = time.perf_counter()
                    results[b] = run()
                    samples.append(time.perf_counter() - t0)
            times[b] = statistics.median(samples)
        if len({repr(r) for r in results.values()}) != 1:
            raise SystemExit(f"{name}: backends disagree: {results}")
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<22}" + "".join(f"{times[b]:>11.4f}s" for b in backends) + f"{speed:>11.1f}x")


if __name__ == "__main__":
    main()
