"""Benchmark harnesses: reorthogonalization modes and warm-started block Lanczos.

Random test matrices come from :func:`gaussian_matrix`: numpy's PCG64 bit
generator seeded with the integer seed, turned into standard normals by
``Generator.standard_normal`` (ziggurat method), filled row by row.  Another
implementation using any seeded 64-bit generator and a correct normal
transform produces matrices with the same distribution, not the same bits.
"""

import time

import numpy as np

from .blws import BlwsOptions, bl_svd
from .errors import ContractError, PsvdError, ValidationError
from .lanczos import FUSED, LOOP, ReorthPolicy, extend_bidiagonalization, init_bidiagonalization
from .linops import DenseOperator
from .report import RunReport

REORTH_EQUIV_TOL = 1e-13


def gaussian_matrix(m, n, seed):
    """``m x n`` standard-normal matrix from ``PCG64(seed)``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.standard_normal((m, n))


def _bidiagonalize(op, K, mode, seed):
    state = init_bidiagonalization(op, seed=seed)
    t0 = time.perf_counter()
    extend_bidiagonalization(state, K, ReorthPolicy(mode=mode))
    elapsed = time.perf_counter() - t0
    return state, elapsed


def run_bench_reorth(m, n, K, seed=0, repeats=1):
    """Bidiagonalize one random matrix to ``K`` steps under both reorth modes.

    Returns ``(fused_report, loop_report)``.  Both carry the speedup ratio
    (vector-loop time over fused-block time, best of ``repeats``) in their
    ``timing`` field.  Raises :class:`PsvdError` if the coefficients of the
    two modes differ by more than 1e-13 relative to the largest one.
    """
    m, n, K = int(m), int(n), int(K)
    if K < 1 or min(m, n) < K:
        raise ContractError(f"need 1 <= K <= min(m, n), got m={m}, n={n}, K={K}")
    if repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {repeats}")
    op = DenseOperator(gaussian_matrix(m, n, seed))
    # compile both kernels outside the timed region
    small = DenseOperator(gaussian_matrix(4, 4, 0))
    for mode in (FUSED, LOOP):
        _bidiagonalize(small, 3, mode, 0)

    states, times = {}, {FUSED: [], LOOP: []}
    for _ in range(repeats):
        for mode in (FUSED, LOOP):
            states[mode], dt = _bidiagonalize(op, K, mode, seed)
            times[mode].append(dt)
    best = {mode: min(ts) for mode, ts in times.items()}

    coef = {mode: np.concatenate([s.alphas, s.betas]) for mode, s in states.items()}
    diff = float(np.max(np.abs(coef[FUSED] - coef[LOOP])))
    scale = float(max(np.max(np.abs(coef[FUSED])), 1.0))
    if diff > REORTH_EQUIV_TOL * scale:
        raise PsvdError(f"reorthogonalization modes disagree: max coefficient gap {diff:.3e}")
    ratio = best[LOOP] / best[FUSED] if best[FUSED] > 0 else float("inf")

    inputs = dict(m=m, n=n, K=K, seed=int(seed), repeats=int(repeats))
    reports = []
    for mode in (FUSED, LOOP):
        s = states[mode]
        reports.append(RunReport(
            command="bench-reorth", inputs=dict(inputs, mode=mode),
            iterations=s.k, matvecs=s.matvecs, wall_time_ms=1e3 * best[mode],
            extra=dict(mode=mode, alphas=list(s.alphas), betas=list(s.betas),
                       max_coef_diff=diff, relative_coef_diff=diff / scale),
            timing=dict(speedup_ratio=ratio, fused_over_loop=1.0 / ratio if ratio else 0.0),
        ))
    return reports[0], reports[1]


def run_bench_warmstart(m, n, k, T, drift, seed=0, opts=None):
    """Top-``k`` SVDs of ``A_t = A + (t/T) drift E``, ``t = 0..T-1``.

    ``A`` and ``E`` are seeded Gaussian matrices with ``||E||_F = ||A||_F``.
    Each step is solved once with the warm state threaded from the previous
    step and once cold.  Returns ``(warm_report, cold_report)``.
    """
    m, n, k, T = int(m), int(n), int(k), int(T)
    if T < 1:
        raise ValidationError(f"T must be >= 1, got {T}")
    if not 1 <= k <= min(m, n):
        raise ContractError(f"k must lie in [1, {min(m, n)}], got {k}")
    if not (np.isfinite(drift) and drift >= 0):
        raise ValidationError(f"drift must be finite and non-negative, got {drift}")
    opts = BlwsOptions(seed=seed) if opts is None else opts
    A = gaussian_matrix(m, n, seed)
    E = gaussian_matrix(m, n, seed + 1)
    E *= np.linalg.norm(A) / np.linalg.norm(E)

    inputs = dict(m=m, n=n, k=k, T=T, drift=float(drift), seed=int(seed))
    out = []
    for mode in ("warm", "cold"):
        warm = None
        steps, passes = [], []
        unconverged = False
        t0 = time.perf_counter()
        for t in range(T):
            op = DenseOperator(A + (t / T) * drift * E)
            res, new_warm = bl_svd(op, k, warm if mode == "warm" else None, opts)
            if mode == "warm":
                warm = new_warm
            steps.append(res.matvec_count)
            passes.append(res.restarts)
            unconverged |= not res.converged
        elapsed = time.perf_counter() - t0
        out.append(RunReport(
            command="bench-warmstart", inputs=dict(inputs, mode=mode),
            singular_values=res.S, iterations=sum(passes), matvecs=sum(steps),
            wall_time_ms=1e3 * elapsed, unconverged=unconverged,
            extra=dict(mode=mode, matvecs_per_step=steps, passes_per_step=passes),
        ))
    return out[0], out[1]
