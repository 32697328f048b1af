"""Time the numba and numpy batch-evaluation kernels on generated instances.

    python benchmarks/bench_kernels.py --tasks 50 --candidates 500 --batch 205
"""

import argparse
import statistics
import time

import numpy as np

from pwss import _kernels
from pwss.model import TP
from pwss.workbench.generator import GeneratorSpec, generate_instance


def best_of(fn, repeats: int) -> tuple[float, float]:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--tasks", type=int, default=50)
    ap.add_argument("--candidates", type=int, default=500)
    ap.add_argument("--qc", type=int, default=3)
    ap.add_argument("--ic", type=int, default=500)
    ap.add_argument("--batch", type=int, nargs="+", default=[205, 65536])
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = GeneratorSpec(args.tasks, args.candidates, num_qc=args.qc, num_ic=args.ic,
                         tc=frozenset({TP.C, TP.CR}), seed=args.seed)
    cp = generate_instance(spec).compiled
    rng = np.random.default_rng(args.seed)
    backends = ["numpy"] + (["numba"] if _kernels.NUMBA_AVAILABLE else [])
    print(f"instance: {args.tasks} tasks x {args.candidates} candidates, "
          f"{args.qc} QoS bounds, {args.ic} interservice constraints")

    for batch in args.batch:
        genes = np.stack([rng.integers(m, size=batch) for m in cp.pool_sizes], axis=1)
        ref = None
        row = []
        for backend in backends:
            out = _kernels.evaluate(cp, genes, backend)  # warm-up, compiles on first use
            if ref is None:
                ref = out
            else:
                assert all(np.array_equal(a, b) for a, b in zip(ref, out)), "backends disagree"
            best, median = best_of(lambda: _kernels.evaluate(cp, genes, backend), args.repeats)
            row.append((backend, best, median))
        for backend, best, median in row:
            rate = batch / best
            print(f"batch {batch:>7}  {backend:<6} best {best * 1e3:9.3f} ms  "
                  f"median {median * 1e3:9.3f} ms  {rate:12,.0f} evals/s")
        if len(row) == 2:
            print(f"batch {batch:>7}  speedup {row[0][1] / row[1][1]:.1f}x")


if __name__ == "__main__":
    main()
