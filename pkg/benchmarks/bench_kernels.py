"""Compare the compiled and pure-Python integrator kernels.

    python benchmarks/bench_kernels.py            # kernel timings
    python benchmarks/bench_kernels.py --study    # plus a small convergence study per backend
"""

import argparse
import time
import timeit

import numpy as np

import sepca.scheme
from sepca import _backend
from sepca.harness import ExperimentConfig, ProblemSpec, run_convergence_study
from sepca.noise import path_for

PROBLEMS = {
    "exp1 (alpha=3)": (1.5, 1.0, 3.0, 0.5, 0.5, 1.0, 1.0),
    "exp2 (alpha=5)": (1.0, 1.0, 5.0, 4.5, 4.5, 3.0, 3.0),
    "linear": (1.0, 0.0, 1.0, -1.0, 0.5, 0.3, 0.1),
}


def bench_kernels(backends, steps, repeat):
    dB = np.ascontiguousarray(path_for(1, 0, 0, 1, 1, steps).increments[:, 0])
    print(f"{'problem':<16}{'backend':<9}{'steps':>9}{'best [ms]':>12}{'ns/step':>10}")
    base = {}
    for name, (x0, *coef) in PROBLEMS.items():
        for bname, mod in backends.items():
            t = min(timeit.repeat(lambda: mod.simulate_polylin(x0, dB, steps, *coef, True), number=1, repeat=repeat))
            base.setdefault(name, {})[bname] = t
            print(f"{name:<16}{bname:<9}{steps:>9}{1e3 * t:>12.2f}{1e9 * t / steps:>10.1f}")
    if "cython" in backends:
        for name, t in base.items():
            print(f"speedup {name}: {t['python'] / t['cython']:.1f}x")


def bench_study(backends):
    cfg = ExperimentConfig(
        ProblemSpec.poly(3, 0.5, 1.0, 1.5), levels=(256, 512, 1024), reference_level=2**14, blocks=2, per_block=25
    )
    for bname, mod in backends.items():
        sepca.scheme.kernels = mod
        t0 = time.perf_counter()
        rep = run_convergence_study(cfg)
        print(f"study on {bname:<7}: {time.perf_counter() - t0:7.2f}s  eps={[f'{e:.3e}' for e in rep.tables[0].eps]}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2**16)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--study", action="store_true")
    args = ap.parse_args()
    backends = _backend.available_backends()
    print(f"default backend: {_backend.BACKEND}; available: {sorted(backends)}")
    bench_kernels(backends, args.steps, args.repeat)
    if args.study:
        bench_study(backends)


if __name__ == "__main__":
    main()
