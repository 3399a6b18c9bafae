"""Compiled theta kernel against the pure-Python one.

    python3 benchmarks/bench_theta.py [--points 20000] [--repeat 3]

Both kernels are evaluated on the same reduced points; the script reports the
best-of-repeat time per call and the largest disagreement between them.
"""

import argparse
import time

import numpy as np

from rmlax import _theta_py

try:
    from rmlax import _theta_core
except ImportError:
    _theta_core = None


def _points(n, tau, seed):
    rng = np.random.default_rng(seed)
    re = rng.uniform(-0.5, 0.5, n)
    im = rng.uniform(-0.5, 0.5, n) * tau.imag
    return [complex(a, b) for a, b in zip(re, im)]


def _time(fn, pts, tau, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for z in pts:
            fn(z, tau)
        best = min(best, time.perf_counter() - t0)
    return best / len(pts)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    for tau in (1j, 0.8j, 0.3 + 0.9j, 0.15j):
        pts = _points(args.points, tau, args.seed)
        py = _time(_theta_py.theta_jet, pts, tau, args.repeat)
        line = f"tau={tau!s:>12}  python {py * 1e6:8.2f} us/call"
        if _theta_core is not None:
            c = _time(_theta_core.theta_jet, pts, tau, args.repeat)
            diff = 0.0
            for z in pts[:2000]:
                a = np.array(_theta_py.theta_jet(z, tau))
                b = np.array(_theta_core.theta_jet(z, tau))
                diff = max(diff, float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a)))))
            line += f"  compiled {c * 1e6:8.2f} us/call  speedup {py / c:6.1f}x  max rel diff {diff:.1e}"
        else:
            line += "  (compiled kernel not built)"
        print(line)


if __name__ == "__main__":
    main()
