"""Compare the compiled and numpy expression kernels on one realistic batch.

The batch is every coefficient of [L, L] for a random 2-vector on a 7-dimensional
chart, which is the kind of program the bracket checks compile.

    python3 benchmarks/bench_vm.py --points 20000 --repeat 5
"""
import argparse
import time

import numpy as np

from oddgeom.expr import Chart, Sampler, available_backends, set_backend
from oddgeom.exterior import schouten
from oddgeom.generators import random_kvector


def build(dim: int, seed: int):
    ch = Chart(("t",) + tuple(f"x{i}" for i in range(1, dim)))
    L = random_kvector(ch, 2, np.random.default_rng(seed), degree=3)
    LL = schouten(L, L)
    exprs = [LL.expr_at(I) for I in sorted(LL.coeffs)]
    return ch, ch.program(exprs)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=7)
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    ch, prog = build(args.dim, args.seed)
    pts = Sampler.uniform(ch, seed=args.seed, count=args.points).points
    print(f"program: {len(prog)} instructions, {args.points} points, dim {args.dim}")
    results = {}
    for name in available_backends():
        set_backend(name)
        prog.run(pts[:8])  # warm up
        results[name] = (best_of(lambda: prog.run(pts), args.repeat), prog.run(pts))
        print(f"{name:>9}: {results[name][0] * 1e3:9.2f} ms")
    if len(results) == 2:
        (tc, vc), (tp, vp) = results["compiled"], results["python"]
        print(f"speedup: {tp / tc:.2f}x  max |diff| = {np.max(np.abs(vc - vp)):.2e}")
    else:
        print("compiled kernel not built; only the python backend ran")


if __name__ == "__main__":
    main()
