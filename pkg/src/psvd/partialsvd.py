"""Partial SVD drivers on top of the Lanczos bidiagonalization.

``svd_top_k`` returns a fixed number of leading triplets.  ``svd_above_threshold``
returns every singular triplet whose value exceeds a threshold, growing the
Krylov subspace adaptively until a converged Ritz value falls below it.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ContractError, ValidationError
from .lanczos import DEFAULT_POLICY, extend_bidiagonalization, init_bidiagonalization
from .linops import FunctionOperator, aslinearoperator, orthonormalize_block
from .smallsvd import svd_bidiagonal, svd_dense

# converged[j] needs bound <= tol * max(value_j, FLOOR_FRACTION * value_0)
FLOOR_FRACTION = 1e-3
MAX_GROWTH = 100


@dataclass
class ThresholdOptions:
    initial_K: int = 16
    tol: float = 1e-8
    max_K: Optional[int] = None
    seed: Optional[int] = 0

    def cap(self, op):
        kmax = min(op.shape)
        cap = kmax if self.max_K is None else min(int(self.max_K), kmax)
        if self.initial_K < 1 or cap < 1:
            raise ValidationError("initial_K and max_K must be >= 1")
        if self.tol <= 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        return cap


@dataclass
class RitzSet:
    """Ritz approximations from the current bidiagonal projection.

    ``left``/``right`` are the singular vectors of the projected matrix, in
    Lanczos-basis coordinates.
    """

    values: np.ndarray
    bounds: np.ndarray
    converged: np.ndarray
    neig: int
    minsv: Optional[float]
    n_leading: int
    left: np.ndarray
    right: np.ndarray
    exact: bool


@dataclass
class PartialSVD:
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    bounds: np.ndarray
    matvec_count: int
    work_size: int
    truncated: bool = False
    converged: bool = True
    trace: List[int] = field(default_factory=list)
    restarts: int = 0

    @property
    def rank(self):
        return int(self.S.shape[0])


def ritz_from_state(state, tol):
    """Ritz values, residual bounds and convergence flags of a bidiagonalization.

    If ``V`` spans the whole domain, the ``(K+1) x K`` matrix carries the exact
    singular values and every bound is zero.  Otherwise the leading ``K x K``
    block is used: with ``B_K = P S Q^T``, the pair ``(U_K p_j, V_K q_j)`` has
    residual ``||A v - s u|| = beta_{K+1} |q_j[K-1]|`` and ``A^T u = s v``
    exactly.
    """
    K = state.k
    if K == 0:
        raise ContractError("bidiagonalization has no completed steps")
    alphas = np.asarray(state.alphas)
    betas = np.asarray(state.betas[1:K + 1])
    n = state.op.cols
    beta_next = float(betas[-1])
    full = K == n and state.U.shape[1] == K + 1 and beta_next > 0.0
    res = svd_bidiagonal(alphas, betas, square=not full)
    values = res.S
    if full:
        bounds = np.zeros(K)
        exact = True
    else:
        bounds = beta_next * np.abs(res.V[K - 1, :])
        exact = beta_next == 0.0
    floor = FLOOR_FRACTION * values[0]
    converged = bounds <= tol * np.maximum(values, floor)
    neig = int(converged.sum())
    minsv = float(values[converged].min()) if neig else None
    lead = neig if converged.all() else int(np.argmin(converged))
    return RitzSet(values=values, bounds=bounds, converged=converged, neig=neig,
                   minsv=minsv, n_leading=lead, left=res.U, right=res.V, exact=exact)


def update_subspace_size(K, neig, n_above, cap):
    """Next bidiagonal size: grow toward the count still above threshold.

    ``min(K + 100, max(K + 2, round(n_above * K / neig)))`` when some Ritz
    values have converged, ``2 K`` otherwise; the result is clamped to ``cap``.
    Rounding is half-up.
    """
    K, neig, n_above, cap = int(K), int(neig), int(n_above), int(cap)
    if neig > 0:
        scaled = (2 * n_above * K + neig) // (2 * neig)
        new = min(K + MAX_GROWTH, max(2 + K, scaled))
    else:
        new = 2 * K
    return min(new, cap)


def _triplets(state, ritz, idx):
    idx = np.asarray(idx, dtype=np.intp)
    P = ritz.left
    U = state.U[:, :P.shape[0]]
    return U @ P[:, idx], state.V @ ritz.right[:, idx]


@dataclass
class _Run:
    """One pass of the threshold loop on a single Lanczos sequence."""

    state: object
    ritz: RitzSet
    keep: List[int]
    minsv: float
    trace: List[int]
    K: int

    @property
    def truncated(self):
        return self.minsv >= self._svthr and not self.state.complete


def _threshold_loop(op, svthr, opts, policy, rng, cap):
    K = min(opts.initial_K, cap)
    state = init_bidiagonalization(op, rng=rng)
    minsv = svthr + 1.0
    trace = []
    while True:
        extend_bidiagonalization(state, K, policy)
        ritz = ritz_from_state(state, opts.tol)
        trace.append(K)
        # smallest value of the run of converged values from the top; a
        # converged value further down cannot end the loop on its own
        if ritz.n_leading > 0:
            minsv = float(ritz.values[ritz.n_leading - 1])
        if minsv < svthr or K >= cap:
            break
        n_above = int(np.count_nonzero(ritz.values > svthr))
        K = update_subspace_size(K, ritz.neig, n_above, cap)
    keep = [j for j in range(ritz.n_leading) if ritz.values[j] > svthr]
    run = _Run(state=state, ritz=ritz, keep=keep, minsv=minsv, trace=trace, K=K)
    run._svthr = svthr
    return run


def _deflated(op, U, S, V):
    """``A - U diag(S) V^T`` as an implicit operator."""
    m, n = op.shape
    return FunctionOperator(m, n,
                            lambda x: op.matvec(x) - U @ (S * (V.T @ x)),
                            lambda y: op.rmatvec(y) - V @ (S * (U.T @ y)))


def _rayleigh_ritz(op, V, rng):
    """Triplets of ``op`` from the right subspace spanned by ``V``.

    ``A Q = U S W^T`` gives ``A v = s u`` exactly for ``v = Q w``; the
    returned bounds are the remaining residuals ``||A^T u - s v||``.
    """
    Q, _, _ = orthonormalize_block(V, rng=rng)
    small = svd_dense(op.matmat(Q))
    U, S, Vr = small.U, small.S, Q @ small.V
    bounds = np.linalg.norm(op.rmatmat(U) - Vr * S, axis=0)
    return U, S, Vr, bounds, 2 * Q.shape[1]


def _complete(op, svthr_of, first, opts, policy, rng, cap, select):
    """Deflation check after the main loop.

    A single Krylov sequence sees each (near-)repeated singular value once,
    so copies of a tight cluster can be missing.  The loop is rerun on
    ``A - U S V^T``; anything it finds above the current cutoff and above
    the deflation noise is merged by a Rayleigh-Ritz step, until a round
    finds nothing new.
    """
    U, S, V, bounds = first
    matvecs, trace, rounds, truncated = 0, [], 0, False
    kmax = min(op.shape)
    while S.size and S.size < kmax:
        noise = float(np.linalg.norm(bounds))
        cutoff = svthr_of(S)
        run = _threshold_loop(_deflated(op, U, S, V), cutoff, opts, policy, rng, cap)
        rounds += 1
        matvecs += run.state.matvecs
        trace.extend(run.trace)
        new = [j for j in run.keep if run.ritz.values[j] > 10.0 * noise]
        truncated |= run.truncated
        if not new:
            break
        _, Vn = _triplets(run.state, run.ritz, new)
        U, S, V, bounds, mv = _rayleigh_ritz(op, np.hstack([V, Vn]), rng)
        matvecs += mv
        idx = select(S)
        U, S, V, bounds = U[:, idx], S[idx], V[:, idx], bounds[idx]
    return (U, S, V, bounds), matvecs, trace, rounds, truncated


def svd_above_threshold(op, svthr, opts=None, policy=DEFAULT_POLICY):
    """All singular triplets of ``op`` with value strictly above ``svthr``."""
    op = aslinearoperator(op)
    if not math.isfinite(svthr) or svthr < 0:
        raise ValidationError(f"threshold must be a finite non-negative number, got {svthr}")
    opts = ThresholdOptions() if opts is None else opts
    cap = opts.cap(op)
    rng = np.random.default_rng(opts.seed)
    run = _threshold_loop(op, svthr, opts, policy, rng, cap)
    U, V = _triplets(run.state, run.ritz, run.keep)
    found = (U, run.ritz.values[run.keep].copy(), V, run.ritz.bounds[run.keep].copy())
    matvecs, trace, rounds, truncated = run.state.matvecs, list(run.trace), 0, run.truncated
    if not truncated and not run.state.complete:
        found, mv, tr, rounds, truncated = _complete(
            op, lambda S: svthr, found, opts, policy, rng, cap,
            lambda S: np.flatnonzero(S > svthr))
        matvecs += mv
        trace += tr
    U, S, V, bounds = found
    return PartialSVD(U=U, S=S, V=V, bounds=bounds, matvec_count=matvecs,
                      work_size=max(trace), truncated=truncated, converged=not truncated,
                      trace=trace, restarts=rounds)


def svd_top_k(op, k, opts=None, policy=DEFAULT_POLICY):
    """The ``k`` leading singular triplets of ``op``."""
    op = aslinearoperator(op)
    kmax = min(op.shape)
    if not 1 <= k <= kmax:
        raise ContractError(f"k must lie in [1, {kmax}], got {k}")
    opts = ThresholdOptions() if opts is None else opts
    cap = max(opts.cap(op), k)
    K = min(max(2 * k, opts.initial_K), cap)
    rng = np.random.default_rng(opts.seed)
    state = init_bidiagonalization(op, rng=rng)
    trace = []
    while True:
        extend_bidiagonalization(state, K, policy)
        ritz = ritz_from_state(state, opts.tol)
        trace.append(K)
        if ritz.n_leading >= k or K >= cap:
            break
        K = update_subspace_size(K, ritz.neig, k, cap)

    done = ritz.n_leading >= k
    idx = list(range(k))
    U, V = _triplets(state, ritz, idx)
    found = (U, ritz.values[idx].copy(), V, ritz.bounds[idx].copy())
    matvecs, rounds = state.matvecs, 0
    if done and not state.complete:
        # a missed copy only matters if it is larger than the k-th value
        # beyond the accuracy the values are computed to
        margin = opts.tol * float(found[1][0])
        found, mv, tr, rounds, truncated = _complete(
            op, lambda S: float(S[min(k, S.size) - 1]) + margin, found, opts, policy, rng,
            cap, lambda S: np.arange(min(k, S.size)))
        matvecs += mv
        trace += tr
        done = not truncated
    U, S, V, bounds = found
    return PartialSVD(U=U, S=S, V=V, bounds=bounds, matvec_count=matvecs, work_size=max(trace),
                      truncated=not done, converged=done, trace=trace, restarts=rounds)
