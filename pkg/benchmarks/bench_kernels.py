"""Compare the compiled and pure-Python decision-diagram cores.

    python benchmarks/bench_kernels.py [--repeat 3] [--json]

Each workload runs in a fresh package per repetition; the best time is kept.
"""

from __future__ import annotations

import argparse
import json
import time

from ddequiv.checker import StrategyKind, check_g_i_g, check_simulation
from ddequiv.circuit import inject_errors, random_circuit
from ddequiv.dd import new_package
from ddequiv.kernel import available_backends


def build_matrices(pkg):
    for seed in range(20):
        pkg.build_matrix(random_circuit(7, 30, seed))


def unitarity(pkg):
    for seed in range(20):
        u = pkg.build_matrix(random_circuit(5, 30, seed))
        pkg.is_identity(pkg.multiply(u, pkg.adjoint(u)))


def simulation_study(pkg):
    for seed in range(20):
        c = random_circuit(8, 100, seed)
        check_simulation(c, inject_errors(c, 1, seed), 16, seed, pkg=pkg)


def lookahead_check(pkg):
    for seed in range(5):
        c = random_circuit(7, 80, seed)
        check_g_i_g(c, c, StrategyKind.LOOKAHEAD, pkg=pkg)


WORKLOADS = {
    "build 20x(7q,30g)": build_matrices,
    "U*U^dag 20x(5q,30g)": unitarity,
    "sim study 20x16 (8q,100g)": simulation_study,
    "lookahead 5x(7q,80g)": lookahead_check,
}


def time_workload(fn, backend: str, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        pkg = new_package(backend)
        t0 = time.perf_counter()
        fn(pkg)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)
    backends = available_backends()
    rows = []
    for name, fn in WORKLOADS.items():
        times = {b: time_workload(fn, b, args.repeat) for b in backends}
        rows.append({"workload": name, **{f"t_{b}": round(t, 4) for b, t in times.items()}})
        if "c" in times:
            rows[-1]["speedup"] = round(times["python"] / times["c"], 2)
    if args.json:
        print(json.dumps({"backends": backends, "rows": rows}, indent=2))
        return 0
    if "c" not in backends:
        print("compiled core not available; timing the Python core only")
    head = f"{'workload':28s}" + "".join(f"{'t_' + b:>12s}" for b in backends)
    print(head + ("     speedup" if "c" in backends else ""))
    for r in rows:
        line = f"{r['workload']:28s}" + "".join(f"{r['t_' + b]:12.3f}" for b in backends)
        if "speedup" in r:
            line += f"{r['speedup']:11.2f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
