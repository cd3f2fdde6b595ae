"""Time the compiled and pure-Python simulation loops on the same reward tables.

    python benchmarks/bench_kernels.py [--horizon T] [--repeat N]
"""

import argparse
import time

import numpy as np

from global_bandits import kernels
from global_bandits.reward_model import three_arm_example


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    py, cy = kernels.python_backend, kernels.compiled_backend
    if cy is None:
        raise SystemExit("compiled extension not available; reinstall with Cython present")
    model = three_arm_example()
    rng = np.random.default_rng(0)
    X = (rng.random((args.horizon, 3)) < np.array([0.23, 0.48, 0.36])).astype(float)
    cases = {
        "wagp_gp": lambda b: b.run_wagp_gp(model, X, 0),
        "wagp_gp+record": lambda b: b.run_wagp_gp(model, X, 0, True),
        "windowed_wagp": lambda b: b.run_windowed_wagp(model, X, 0, 100),
        "ucb1": lambda b: b.run_ucb1(X),
    }
    print(f"T={args.horizon}, best of {args.repeat}")
    print(f"{'kernel':<16}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}  same output")
    for name, call in cases.items():
        tp = best_of(lambda: call(py), args.repeat)
        tc = best_of(lambda: call(cy), args.repeat)
        a, b = call(py), call(cy)
        a, b = (a,) if isinstance(a, np.ndarray) else a, (b,) if isinstance(b, np.ndarray) else b
        same = all((x is None and y is None) or np.array_equal(x, y) for x, y in zip(a, b))
        print(f"{name:<16}{tp:>12.4f}{tc:>12.5f}{tp / tc:>9.0f}x  {same}")


if __name__ == "__main__":
    main()
