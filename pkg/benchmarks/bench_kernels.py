"""Compare the compiled and pure-Python trial kernels.

    python3 benchmarks/bench_kernels.py [--repeat R]

Each workload runs once per backend with the same RNG stream; the outputs
must agree exactly, and the table reports wall time and the speedup.
"""
import argparse
import time

import numpy as np

from eqmem import curie_weiss as cw
from eqmem import toric_code as tc
from eqmem._rng import trial_rng
from eqmem.kernels import available_backends, load_backend


def workloads():
    chain = cw.build_chain(cw.CWParams(20, 1.0, 1.0))
    up, down = chain.up_rate, chain.down_rate
    lattice = tc.build_lattice(8)
    adj, inc, cutmask = lattice.kernel_tables()
    p = 0.05
    return {
        "birth-death exit, N=20, 200 trials": lambda k: [
            k.bd_exit_time(up, down, 20, 10, trial_rng(1, i)) for i in range(200)],
        "walk escape, L=64, 2000 trials": lambda k: [
            k.walk_escape(64.0**2, trial_rng(2, i)) for i in range(2000)],
        "toric run, k=8, 2e5 events": lambda k: k.toric_run(
            adj, inc, cutmask, lattice.n_vertices, p, 1.0, trial_rng(3, 0),
            200_000, 0.0, np.inf, False),
    }


def best_time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = {name: load_backend(name) for name in available_backends()}
    if "cython" not in backends:
        print("compiled extension not built; only the Python backend is available")
    print(f"{'workload':40s} " + " ".join(f"{n:>10s}" for n in backends) + "    speedup")
    for label, job in workloads().items():
        times, outputs = {}, {}
        for name, mod in backends.items():
            times[name], outputs[name] = best_time(lambda: job(mod), args.repeat)
        ref = outputs["python"]
        assert all(str(o) == str(ref) for o in outputs.values()), f"{label}: outputs differ"
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:40s} " + " ".join(f"{times[n]:9.4f}s" for n in backends)
              + f"  {speedup:8.1f}x")


if __name__ == "__main__":
    main()
