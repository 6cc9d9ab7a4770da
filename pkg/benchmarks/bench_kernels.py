"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once first so compilation (or cache loading) stays out
of the numbers. Prints best-of-N microseconds per call and the ratio.
"""
import argparse
import timeit

import numpy as np

from pinchmeta.kernels import get_backend
from pinchmeta.policy import MlpSpec, init_params


def cases():
    rng = np.random.default_rng(0)
    px = rng.uniform(0, 5, 100_000)
    py = rng.uniform(1, 6, 100_000)
    px10k, py10k = px[:10_000].copy(), py[:10_000].copy()
    spec = MlpSpec()
    theta = init_params(spec, 1)
    sizes = spec.sizes
    feat = np.array([0.4, 0.5, 0.3, 0.6, 0.7])
    pil_x, pil_y = px[:10].copy(), py[:10].copy()
    k0 = 1.6e6
    return {
        "outage_count (1e5)": lambda k: k.outage_count(px, py, 2.5, 9.0, 16.0, 3.0),
        "secrecy_stats (1e5)": lambda k: k.secrecy_stats(px, py, 2.5, 9.0, 16.0, 0.4, 0.5),
        "rates (1e5)": lambda k: k.rates(px, py, 2.5, 9.0, 16.0),
        "kth_largest_dist2 (1e4)": lambda k: k.kth_largest_dist2(px10k, py10k, 2.5, 9.0, 501),
        "secrecy_value_grad (1e4)": lambda k: k.secrecy_value_grad(px10k, py10k, 1.0, 4.0, 2.5,
                                                                   9.0, k0, 1e-5),
        "policy_forward": lambda k: k.policy_forward(theta, sizes, feat),
        "policy_loss_grad (10 pilots)": lambda k: k.policy_loss_grad(
            theta, sizes, feat, pil_x, pil_y, 1.0, 4.0, 5.0, 9.0, k0, 1.0, 2.0, 0.5, 0.5, 0.05),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    nb, npy = get_backend("numba"), get_backend("numpy")
    print(f"{'kernel':32s} {'numba us':>10s} {'numpy us':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        row = []
        for backend in (nb, npy):
            fn(backend)
            t = timeit.Timer(lambda: fn(backend))
            n, _ = t.autorange()
            row.append(min(t.repeat(args.repeat, n)) / n * 1e6)
        print(f"{name:32s} {row[0]:10.1f} {row[1]:10.1f} {row[1] / row[0]:8.2f}x")


if __name__ == "__main__":
    main()
