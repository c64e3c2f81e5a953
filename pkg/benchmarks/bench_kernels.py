"""Compiled vs numpy kernels on the workloads that dominate a run.

    python benchmarks/bench_kernels.py [--repeat 5] [--samples 4000] [--json out.json]

batch_counts is the Monte Carlo IDS inner loop (S configurations x K energies);
transfer is the per-energy call inside the Floquet root finder; propagate is
the shooting step of the cell solver.  Every timing is the best of --repeat
runs, and the counts are checked to be identical between the two backends.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from rdmlab import kernels
from rdmlab.model import DisplacementDistribution, SingleSitePotential, sample_displacements


def workloads(samples, L=45, K=7):
    q = SingleSitePotential.well()
    dist = DisplacementDistribution.symmetric_bernoulli(q.d_max)
    om = sample_displacements(dist, L, 0, 0, samples)
    E = np.linspace(-6.78, -5.0, K)
    rng = np.random.default_rng(1)
    v = rng.uniform(-20, 20, 3 * L)
    l = rng.uniform(0.05, 0.5, 3 * L)
    return {
        f"batch_counts D ({samples}x{L}, {K} energies)":
            lambda m: m.batch_counts(q.values, q.lengths, q.d_max, om, E, kernels.BC_DIRICHLET),
        f"batch_counts N ({samples}x{L}, {K} energies)":
            lambda m: m.batch_counts(q.values, q.lengths, q.d_max, om, E, kernels.BC_NEUMANN),
        f"transfer x200 ({3 * L} pieces)":
            lambda m: [m.transfer(v, l, -3.0 + 0.01 * i) for i in range(200)],
        f"propagate x200 ({3 * L} pieces)":
            lambda m: [m.propagate(v, l, -3.0 + 0.01 * i, 0.0, 1.0) for i in range(200)],
    }, (q, om, E)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--samples", type=int, default=4000)
    ap.add_argument("--json", help="also write the timings here")
    args = ap.parse_args(argv)

    names = kernels.available()
    if "cython" not in names:
        print("compiled extension not built; only the numpy backend is available", file=sys.stderr)
    mods = {n: kernels.load(n) for n in names}
    work, (q, om, E) = workloads(args.samples)

    if len(mods) == 2:
        for bc in (kernels.BC_DIRICHLET, kernels.BC_NEUMANN):
            a = mods["cython"].batch_counts(q.values, q.lengths, q.d_max, om, E, bc)[0]
            b = mods["python"].batch_counts(q.values, q.lengths, q.d_max, om, E, bc)[0]
            if not np.array_equal(a, b):
                raise SystemExit("backends disagree on batch_counts")

    results = {}
    print(f"{'workload':<42}" + "".join(f"{n:>12}" for n in names) + "     speedup")
    for label, fn in work.items():
        row = {}
        for n, m in mods.items():
            fn(m)  # warm-up
            row[n] = min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat))
        results[label] = row
        speed = row["python"] / row["cython"] if "cython" in row else float("nan")
        print(f"{label:<42}" + "".join(f"{row[n]:>11.4f}s" for n in names) + f"{speed:>11.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"backends": names, "timings_s": results}, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
