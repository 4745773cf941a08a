"""Time the numba and numpy kernels on a training-sized stack.

    python3 benchmarks/bench_kernels.py [--batch 8] [--channels 12] [--size 64] [--repeat 5]

Prints one CSV row per (operation, backend) with the best time in
milliseconds and the numpy/numba ratio.
"""
import argparse
import time

import numpy as np

from semiscale import _accel, _loops
from semiscale.semiconv import convolve_fast_quadratic_morphological
from semiscale.semifield import TropicalMax


def best_time(fn, repeat):
    fn()  # warm up (jit compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--channels", type=int, default=12)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    B, C, N, K = args.batch, args.channels, args.size, 2 * args.radius + 1
    x = rng.normal(size=(B, C, N, N))
    g = rng.normal(size=x.shape)
    k = -rng.uniform(0, 2, size=(C, K, K))
    kl = rng.uniform(0, 1, size=(C, K, K))
    v = rng.uniform(-1, 1, size=(C, 2))
    mode = _loops.REPLICATE
    _, arg = _loops.morph_forward(x, k, mode, 1.0)
    lse_out = _loops.lse_forward(x, k, 1.0, mode)
    field = rng.uniform(-5, 5, (256, 256))

    ops = {
        "morph_forward": lambda: _loops.morph_forward(x, k, mode, 1.0),
        "morph_backward": lambda: _loops.morph_backward(g, arg, K, mode),
        "linear_forward": lambda: _loops.linear_forward(x, kl, mode),
        "linear_backward": lambda: _loops.linear_backward(g, x, kl, mode),
        "lse_forward": lambda: _loops.lse_forward(x, k, 1.0, mode),
        "lse_backward": lambda: _loops.lse_backward(g, x, k, 1.0, lse_out, mode),
        "shift_forward": lambda: _loops.shift_forward(x, v),
        "shift_backward": lambda: _loops.shift_backward(g, x, v),
        "quadratic_dilation_256": lambda: convolve_fast_quadratic_morphological(TropicalMax(), 1.0, np.eye(2), field),
    }
    backends = ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]
    prev = _accel.backend()
    print("operation,backend,best_ms,numpy_over_numba")
    try:
        for name, fn in ops.items():
            ms = {}
            for b in backends:
                _accel.set_backend(b)
                ms[b] = 1e3 * best_time(fn, args.repeat)
            for b in backends:
                ratio = ms["numpy"] / ms["numba"] if "numba" in ms else float("nan")
                print(f"{name},{b},{ms[b]:.3f},{ratio:.2f}")
    finally:
        _accel.set_backend(prev)


if __name__ == "__main__":
    main()
