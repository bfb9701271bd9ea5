"""Compare the numba kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--batch 2000] [--steps 1000] [--repeat 3]

Both paths are called through the public dispatchers with ``use_numba`` forced,
so one process measures both.  The first numba call (compilation) is excluded.
"""

import argparse
import time

import numpy as np

from liectrl import kernels
from liectrl._accel import HAVE_NUMBA
from liectrl.catalog import FIXTURES


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(batch, steps, seed):
    rng = np.random.default_rng(seed)
    for name in ("sl2_ex_ii", "rolling_sphere"):
        sys, r = FIXTURES[name]()
        r = r.for_system(sys)
        bs = r.control_matrices(sys)
        m = sys.n_controls
        g0s = np.repeat(np.eye(r.size)[None], batch, axis=0)
        hs = np.full((batch, steps), 1.0 / steps)
        us = rng.uniform(-1, 1, size=(batch, steps, m))
        durs = rng.dirichlet(np.ones(8), size=batch)
        vals = rng.uniform(-1, 1, size=(batch, 8, m))
        yield name, {
            "rk4_batch": lambda nb, a=(g0s, r.y0, bs, hs, us, r.starts, r.sizes, r.flags): kernels.rk4_batch(
                *a, use_numba=nb
            ),
            "exact_batch": lambda nb, a=(np.eye(r.size), r.y0, bs, durs, vals): kernels.exact_batch(
                *a, use_numba=nb
            ),
        }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--batch", type=int, default=2000)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"batch={args.batch} steps={args.steps} best of {args.repeat}")
    print(f"{'system':<16}{'kernel':<13}{'numba s':>10}{'numpy s':>10}{'speedup':>9}{'max diff':>11}")
    for name, kerns in cases(args.batch, args.steps, args.seed):
        for kname, fn in kerns.items():
            fn(True)  # compile
            a, b = fn(True), fn(False)
            a = a[0] if isinstance(a, tuple) else a
            b = b[0] if isinstance(b, tuple) else b
            t_nb = best_of(lambda: fn(True), args.repeat)
            t_np = best_of(lambda: fn(False), args.repeat)
            diff = float(np.abs(a - b).max())
            print(f"{name:<16}{kname:<13}{t_nb:>10.3f}{t_np:>10.3f}{t_np / t_nb:>9.2f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
