"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so this works whichever one the package
selected at import time.  The outputs are compared before timing.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from optrta import _pykernels as py

try:
    from optrta import _ckernels as cy
except ImportError:
    cy = None


def cases():
    rng = np.random.default_rng(0)
    n, m = 200, 2
    delta = rng.integers(0, n, size=(n, m)).astype(np.int64)
    reward = rng.random((n, m))
    prob = rng.random((40, m, 40))
    prob /= prob.sum(axis=2, keepdims=True)
    r40 = rng.random((40, m))
    dub = np.array([60.0, 0.0, np.pi / 2, 10.0])
    air = np.array([80.0, 0.0, 100.0, np.pi / 2, 0.0, 20.0])
    return {
        "rk4 dubins 1000 steps": lambda k: k.rk4(1, dub, np.array([1 / 6, 0.0]), 1e-3, 1000),
        "rk4 air 1000 steps": lambda k: k.rk4(2, air, np.array([0.25, 0.0, 0.0]), 1e-3, 1000),
        "value iteration det n=200": lambda k: k.value_iteration_det(delta, reward, 0.9, 1e-12, 10**6),
        "value iteration prob n=40": lambda k: k.value_iteration_prob(prob, r40, 0.9, 1e-12, 10**6),
        "enclose period dubins": lambda k: k.enclose_period(
            1, dub - 0.1, dub + 0.1, np.array([0.1, -0.5]), np.array([0.2, 0.5]), 0.005, 40, 1e-9
        ),
    }


def _first(x):
    return x[0] if isinstance(x, tuple) else x


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if cy is None:
        print("compiled extension not built; only the Python backend is timed")
    print(f"{'kernel':32s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        if cy is not None:
            a, b = np.asarray(_first(fn(py))), np.asarray(_first(fn(cy)))
            if not np.allclose(a, b, rtol=1e-12, atol=1e-12):
                raise SystemExit(f"{name}: backends disagree (max diff {np.max(np.abs(a - b)):.3e})")
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{name:32s} {tp:10.3f}")
            continue
        tc = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:32s} {tp:10.3f} {tc:10.3f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
