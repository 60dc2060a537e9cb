"""Block Lanczos with warm start.

For a sequence of slowly changing matrices, the dominant subspace of one
matrix is an excellent starting block for the next.  ``bl_svd`` and
``bl_evd`` accept the :class:`WarmState` returned by the previous call and
hand back an updated one.

Each pass of ``bl_svd`` extends a basis ``[V_keep, V_0]`` by ``s`` block
Golub-Kahan steps::

    U_j     = orth(A V_j    against all earlier U blocks)
    V_{j+1} = orth(A^T U_j  against all earlier V blocks)

then does Rayleigh-Ritz on ``H = U^T A V``.  ``A v = s u`` holds for every
Ritz pair by construction, and ``A^T u - s v`` only involves the
component of ``A^T U_s`` outside the basis, so all residuals cost one block
product.  Restarts are thick: the leading ``b`` Ritz pairs are kept and
that outside component becomes the next ``V_0``.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ContractError, ValidationError
from .linops import aslinearoperator, orthonormalize_block
from .partialsvd import PartialSVD
from .smallsvd import eigh_jacobi, svd_dense


@dataclass
class WarmState:
    """Orthonormal ``n x b`` block carried between calls."""

    block: np.ndarray
    rank_hint: int
    generation: int = 0


@dataclass
class BlwsOptions:
    steps: int = 3
    block_size: Optional[int] = None
    tol: float = 1e-6
    max_restarts: int = 10
    seed: Optional[int] = 0

    def resolve(self, k, dim):
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.max_restarts < 1:
            raise ValidationError(f"max_restarts must be >= 1, got {self.max_restarts}")
        if self.tol <= 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        b = k if self.block_size is None else int(self.block_size)
        if b < k:
            raise ValidationError(f"block_size {b} is smaller than k={k}")
        b = min(b, dim)
        # the accumulated block basis must fit in the smaller dimension
        steps = max(0, min(self.steps, dim // b - 1))
        return b, steps


@dataclass
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    matvec_count: int
    restarts: int
    converged: bool
    trace: List[float] = field(default_factory=list)


def _start_block(n, b, warm, rng):
    if warm is not None:
        W = np.asarray(warm.block, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != n:
            raise ContractError(f"warm block must have {n} rows, got shape {W.shape}")
        W = W[:, :b]
        if W.shape[1] < b:
            W = np.hstack([W, rng.standard_normal((n, b - W.shape[1]))])
    else:
        W = rng.standard_normal((n, b))
    Q, _, _ = orthonormalize_block(W, rng=rng)
    return Q


def _layout(b, steps, dim):
    """Kept Ritz count and block steps that fit in ``dim`` columns."""
    keep = min(2 * b, dim - b)
    steps = max(0, min(steps, (dim - keep) // b - 1))
    return keep, steps


def _project_out(Z, Q):
    for _ in range(2):
        Z = Z - Q @ (Q.T @ Z)
    return Z


def bl_svd(op, k, warm=None, opts=None):
    """Top-``k`` singular triplets by thick-restarted block Lanczos.

    Returns ``(PartialSVD, WarmState)``.  Hitting ``max_restarts`` is not an
    error; the result then has ``converged=False``.
    """
    op = aslinearoperator(op)
    m, n = op.shape
    kmax = min(m, n)
    if not 1 <= k <= kmax:
        raise ContractError(f"k must lie in [1, {kmax}], got {k}")
    opts = BlwsOptions() if opts is None else opts
    b, steps = opts.resolve(k, kmax)
    keep, steps = _layout(b, steps, kmax)
    rng = np.random.default_rng(opts.seed)

    Vn = _start_block(n, b, warm, rng)
    Vk, Uk, AVk = np.zeros((n, 0)), np.zeros((m, 0)), np.zeros((m, 0))
    matvecs = 0
    trace = []
    passes = 0
    while True:
        passes += 1
        Vb, Ub, AV = np.hstack([Vk, Vn]), Uk, [AVk]
        Vcur = Vn
        for j in range(steps + 1):
            AVj = op.matmat(Vcur)
            matvecs += b
            AV.append(AVj)
            Ucur, _, _ = orthonormalize_block(AVj, rng=rng, basis=Ub)
            Ub = np.hstack([Ub, Ucur])
            Z = op.rmatmat(Ucur)
            matvecs += b
            if j == steps:
                break
            Vcur, _, _ = orthonormalize_block(Z, rng=rng, basis=Vb)
            Vb = np.hstack([Vb, Vcur])
        AV = np.hstack(AV)
        small = svd_dense(Ub.T @ AV)
        S = small.S
        F = _project_out(Z, Vb)
        res = np.linalg.norm(F @ small.U[-b:, :k], axis=0)
        scale = S[0] if S[0] > 0 else 1.0
        trace.append(float(res.max() / scale))
        converged = bool(np.all(res <= opts.tol * scale))
        if converged or passes >= opts.max_restarts:
            break
        Vk = Vb @ small.V[:, :keep]
        Uk = Ub @ small.U[:, :keep]
        AVk = AV @ small.V[:, :keep]
        Vn, _, _ = orthonormalize_block(F, rng=rng, basis=Vk)

    Ur = Ub @ small.U[:, :max(k, b)]
    Vr = Vb @ small.V[:, :max(k, b)]
    result = PartialSVD(U=Ur[:, :k], S=S[:k].copy(), V=Vr[:, :k], bounds=res,
                        matvec_count=matvecs, work_size=Vb.shape[1], truncated=False,
                        converged=converged, trace=trace, restarts=passes)
    gen = 0 if warm is None else warm.generation
    new_warm = WarmState(block=np.ascontiguousarray(Vr[:, :b]), rank_hint=b, generation=gen + 1)
    return result, new_warm


def _check_symmetric(op, rng, trials=3, rtol=1e-10):
    if op.rows != op.cols:
        raise ValidationError(f"operator must be square, got {op.shape}")
    for _ in range(trials):
        x = rng.standard_normal(op.cols)
        y = rng.standard_normal(op.cols)
        ax, ay = op.matvec(x), op.matvec(y)
        lhs, rhs = float(ax @ y), float(x @ ay)
        scale = np.linalg.norm(ax) * np.linalg.norm(y) + np.linalg.norm(x) * np.linalg.norm(ay)
        if abs(lhs - rhs) > rtol * max(scale, np.finfo(float).tiny):
            raise ValidationError(
                f"operator is not symmetric: <Ax,y>={lhs:.6e} but <x,Ay>={rhs:.6e}")


def bl_evd(op, k, warm=None, opts=None):
    """``k`` eigenpairs of largest magnitude of a symmetric operator."""
    op = aslinearoperator(op)
    opts = BlwsOptions() if opts is None else opts
    rng = np.random.default_rng(opts.seed)
    _check_symmetric(op, np.random.default_rng(None if opts.seed is None else opts.seed + 1))
    n = op.rows
    if not 1 <= k <= n:
        raise ContractError(f"k must lie in [1, {n}], got {k}")
    b, steps = opts.resolve(k, n)
    keep, steps = _layout(b, steps, n)

    Xn = _start_block(n, b, warm, rng)
    Xk, AXk = np.zeros((n, 0)), np.zeros((n, 0))
    matvecs = 0
    trace = []
    passes = 0
    while True:
        passes += 1
        Xb, AX = np.hstack([Xk, Xn]), [AXk]
        Xcur = Xn
        for j in range(steps + 1):
            AXj = op.matmat(Xcur)
            matvecs += b
            AX.append(AXj)
            if j == steps:
                break
            Xcur, _, _ = orthonormalize_block(AXj, rng=rng, basis=Xb)
            Xb = np.hstack([Xb, Xcur])
        AX = np.hstack(AX)
        T = Xb.T @ AX
        w, Z = eigh_jacobi(0.5 * (T + T.T))
        Xr = Xb @ Z
        AXr = AX @ Z
        res = np.linalg.norm(AXr[:, :k] - Xr[:, :k] * w[:k], axis=0)
        scale = abs(w[0]) if w[0] != 0 else 1.0
        trace.append(float(res.max() / scale))
        converged = bool(np.all(res <= opts.tol * scale))
        if converged or passes >= opts.max_restarts:
            break
        Xk = Xr[:, :keep]
        AXk = AXr[:, :keep]
        Xn, _, _ = orthonormalize_block(_project_out(AXj, Xb), rng=rng, basis=Xk)

    pairs = EigenPairs(values=w[:k].copy(), vectors=Xr[:, :k].copy(), residuals=res,
                       matvec_count=matvecs, restarts=passes, converged=converged, trace=trace)
    gen = 0 if warm is None else warm.generation
    return pairs, WarmState(block=np.ascontiguousarray(Xr[:, :b]), rank_hint=b,
                            generation=gen + 1)
