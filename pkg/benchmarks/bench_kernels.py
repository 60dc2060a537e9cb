"""Time the numba kernels against their numpy fallbacks.

Usage:
    python3 benchmarks/bench_kernels.py [--repeats 5] [--end-to-end]

Each kernel pair is called directly, so one process measures both paths.
``--end-to-end`` also times a partial SVD in two subprocesses, one with
PSVD_DISABLE_NUMBA=1.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from psvd import _kernels as K


def best_of(fn, setup, repeats):
    """Best wall time in ms of ``fn(*setup())`` over ``repeats`` calls."""
    best = float("inf")
    for _ in range(repeats):
        args = setup()
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def projection_case(n, k, seed=0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    Q = np.ascontiguousarray(Q)
    r = rng.standard_normal(n)
    return lambda: (Q, k, r.copy(), np.empty(k))


def hestenes_case(m, n, seed=0):
    A = np.random.default_rng(seed).standard_normal((m, n))
    return lambda: (np.ascontiguousarray(A.T).copy(), np.eye(n), 1e-14, 0.0, 30)


def eigh_case(n, seed=0):
    S0 = np.random.default_rng(seed).standard_normal((n, n))
    S0 = S0 + S0.T
    return lambda: (S0.copy(), np.eye(n), 1e-14, 1e-15 * np.linalg.norm(S0), 30)


CASES = [
    ("project_fused 2000x200", K.project_fused_nb, K.project_fused_np, projection_case(2000, 200)),
    ("project_loop 2000x200", K.project_loop_nb, K.project_loop_np, projection_case(2000, 200)),
    ("hestenes 120x60", K.hestenes_nb, K.hestenes_np, hestenes_case(120, 60)),
    ("hestenes 300x150", K.hestenes_nb, K.hestenes_np, hestenes_case(300, 150)),
    ("jacobi_eigh 60", K.jacobi_eigh_nb, K.jacobi_eigh_np, eigh_case(60)),
]

E2E = """
import time, numpy as np
from psvd import svd_above_threshold
from psvd.bench import gaussian_matrix
A = gaussian_matrix(600, 400, 0)
svd_above_threshold(A[:20, :20], 1.0)
t0 = time.perf_counter()
r = svd_above_threshold(A, 40.0)
print((time.perf_counter() - t0) * 1e3, r.S.size)
"""


def end_to_end():
    rows = []
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, PSVD_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True,
                             text=True, check=True)
        ms, count = out.stdout.split()
        rows.append((label, float(ms), int(count)))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)
    if not K._HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1

    print(f"{'kernel':<26}{'numba ms':>11}{'numpy ms':>11}{'numpy/numba':>13}")
    for name, nb, np_fn, setup in CASES:
        nb(*setup())  # compile outside the timing
        t_nb = best_of(nb, setup, args.repeats)
        t_np = best_of(np_fn, setup, args.repeats)
        print(f"{name:<26}{t_nb:>11.3f}{t_np:>11.3f}{t_np / t_nb:>13.2f}")

    if args.end_to_end:
        print()
        print("svd_above_threshold 600x400, thr 40")
        for label, ms, count in end_to_end():
            print(f"  {label:<8}{ms:>10.1f} ms  {count} values")
    return 0


if __name__ == "__main__":
    sys.exit(main())
