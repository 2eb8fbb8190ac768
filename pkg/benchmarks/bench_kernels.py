"""Compare the compiled kernels with the numpy fallback.

Run ``python3 benchmarks/bench_kernels.py``.  Kernel timings call both
implementations in-process; the end-to-end rows run a GCU direct solve in
subprocesses with and without ``COVFUSE_PURE_PYTHON``.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from covfuse import _pykernels
from covfuse.verify import random_estimate

try:
    from covfuse import _kernels
except ImportError:
    _kernels = None

END_TO_END = """
import time, numpy as np
from covfuse import kernels
from covfuse.union import gcu_direct
from covfuse.verify import random_estimate
rng = np.random.default_rng(7)
cases = [[random_estimate(rng, 3) for _ in range(4)] for _ in range({count})]
t = time.perf_counter()
for es in cases:
    gcu_direct(es)
print(kernels.BACKEND, (time.perf_counter() - t) / len(cases))
"""


def _cases(seed: int):
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.uniform(0.1, 3.0, 3))
    g = rng.normal(size=3)
    es = [random_estimate(rng, 3) for _ in range(4)]
    means = np.ascontiguousarray([e.mean for e in es])
    covs = np.ascontiguousarray([e.cov for e in es])
    params = np.concatenate([means.mean(axis=0), rng.normal(scale=0.2, size=5)])
    S = np.eye(7) * 3.0 + 0.1 * np.ones((7, 7))
    G = rng.normal(size=(15, 7, 7))
    G = 0.5 * (G + G.transpose(0, 2, 1))
    return {
        "rank1_lmax": lambda k: k.rank1_lmax(lam, g, 2.0, 3.0),
        "min_inflation": lambda k: k.min_inflation(lam, g, 1e-8, 1e-12),
        "gcu_objective": lambda k: k.gcu_objective(params, means, covs, 1e-8, 1e-12),
        "logdet_barrier": lambda k: k.logdet_barrier(S, G),
    }


def _per_call(fn, number: int) -> float:
    return min(timeit.repeat(fn, number=number, repeat=5)) / number


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--number", type=int, default=2000, help="calls per timing repeat")
    ap.add_argument("--solves", type=int, default=1, help="GCU solves per end-to-end run")
    args = ap.parse_args(argv)
    print(f"{'kernel':<16}{'python (us)':>14}{'compiled (us)':>16}{'speedup':>10}")
    for name, call in _cases(0).items():
        py = _per_call(lambda: call(_pykernels), args.number) * 1e6
        if _kernels is None:
            print(f"{name:<16}{py:>14.2f}{'n/a':>16}{'':>10}")
            continue
        cc = _per_call(lambda: call(_kernels), args.number) * 1e6
        print(f"{name:<16}{py:>14.2f}{cc:>16.2f}{py / cc:>10.1f}")
    print()
    for pure in ("1", "0"):
        env = dict(os.environ, COVFUSE_PURE_PYTHON=pure)
        out = subprocess.run(
            [sys.executable, "-c", END_TO_END.format(count=args.solves)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"gcu_direct (m=4, n=3) backend={out[0]:<9} {float(out[1]):.3f} s/solve")
    return 0


if __name__ == "__main__":
    sys.exit(main())
