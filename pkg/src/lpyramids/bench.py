"""Timing comparison of the compiled and numpy kernel backends.

Run with ``python -m lpyramids.bench``. Each case is timed on every available
backend and the results are checked to agree before timing is reported.
"""

import argparse
import time

import numpy as np

from ._backend import available_backends, get_backend
from .kernels import UNDERFLOW_FLOOR

GAUSSIAN = (0, 2.0, 1.0)


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(scale=1):
    rng = np.random.default_rng(0)
    xs = rng.random((16 * scale, 1))
    grid = np.linspace(-2, 3, 4001 * scale)[:, None]
    sig = 1.0 / 2.0 ** np.arange(10)
    resid = rng.standard_normal((10, xs.shape[0]))
    pts = rng.random((400 * scale, 3))
    yield "extend 1-D grid", lambda b: b.extend(grid, xs, sig, resid, *GAUSSIAN, UNDERFLOW_FLOOR)
    yield "kernel_rows 3-D", lambda b: b.kernel_rows(pts, pts, 0.1, *GAUSSIAN, UNDERFLOW_FLOOR)
    yield "sq_distances 3-D", lambda b: b.sq_distances(pts, pts)


def run(scale=1, repeat=5):
    names = available_backends()
    rows = []
    for label, fn in cases(scale):
        outs = {b: fn(get_backend(b)) for b in names}
        ref = outs[names[0]]
        ref = ref[0] if isinstance(ref, tuple) else ref
        for b in names[1:]:
            other = outs[b][0] if isinstance(outs[b], tuple) else outs[b]
            np.testing.assert_allclose(other, ref, rtol=1e-12, atol=1e-14)
        times = {b: _time(lambda: fn(get_backend(b)), repeat) for b in names}
        rows.append((label, times))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(prog="python -m lpyramids.bench", description="compare kernel backends")
    ap.add_argument("--scale", type=int, default=1, help="problem size multiplier")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = available_backends()
    print(f"{'case':<20}" + "".join(f"{b:>12}" for b in names) + ("    speedup" if len(names) > 1 else ""))
    for label, times in run(args.scale, args.repeat):
        line = f"{label:<20}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in names)
        if "cython" in times and "python" in times:
            line += f"{times['python'] / times['cython']:>10.1f}x"
        print(line)


if __name__ == "__main__":
    main()
