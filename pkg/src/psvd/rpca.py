"""Singular value thresholding and Robust PCA by inexact ALM.

``rpca_ialm`` splits ``D`` into low-rank ``L`` plus sparse ``E`` by solving

    min ||L||_* + lambda ||E||_1   subject to   D = L + E

with the inexact augmented Lagrange multiplier iteration::

    L  <- svt(D - E + Y/mu, 1/mu)
    E  <- soft_threshold(D - L + Y/mu, lambda/mu)
    Y  <- Y + mu (D - L - E)
    mu <- min(rho mu, mu_max)

Every iteration needs a partial SVD of a matrix that barely changed since
the previous one, which is what the ``blws`` backend exploits.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .blws import BlwsOptions, WarmState, bl_svd
from .errors import ContractError, ValidationError
from .linops import as_dense, aslinearoperator
from .partialsvd import ThresholdOptions, svd_above_threshold

THRESHOLD = "threshold"
BLWS = "blws"
BACKENDS = (THRESHOLD, BLWS)


def soft_threshold(x, tau):
    """Elementwise shrinkage ``sign(x) * max(|x| - tau, 0)``."""
    if not tau >= 0:
        raise ContractError(f"tau must be non-negative, got {tau}")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


@dataclass
class SvtResult:
    X: np.ndarray
    warm: Optional[WarmState]
    rank: int
    matvecs: int
    singular_values: np.ndarray


def svt_detail(A, tau, backend=THRESHOLD, warm=None, tol=None, seed=0, initial_rank=8):
    """Singular value thresholding with bookkeeping (rank, matvecs, kept values)."""
    if not tau > 0:
        raise ContractError(f"tau must be positive, got {tau}")
    if backend not in BACKENDS:
        raise ValidationError(f"unknown SVT backend {backend!r}; expected one of {BACKENDS}")
    op = aslinearoperator(A)
    m, n = op.shape
    if backend == THRESHOLD:
        opts = ThresholdOptions(seed=seed, tol=1e-8 if tol is None else tol)
        res = svd_above_threshold(op, tau, opts)
        U, S, V, matvecs = res.U, res.S, res.V, res.matvec_count
    else:
        kmax = min(m, n)
        k = min(kmax, max(1, warm.rank_hint if warm is not None else initial_rank))
        bopts = BlwsOptions(tol=1e-6 if tol is None else tol, seed=seed)
        matvecs = 0
        while True:
            res, warm = bl_svd(op, k, warm, bopts)
            matvecs += res.matvec_count
            # a value at or below tau among the k computed ones certifies
            # that nothing above tau was missed
            if res.S[-1] <= tau or k == kmax:
                break
            k = min(kmax, 2 * k)
        keep = res.S > tau
        U, S, V = res.U[:, keep], res.S[keep], res.V[:, keep]
        warm = WarmState(block=warm.block, rank_hint=min(kmax, int(keep.sum()) + 1),
                         generation=warm.generation)
    X = (U * (S - tau)) @ V.T
    return SvtResult(X=X, warm=warm, rank=int(S.shape[0]), matvecs=int(matvecs),
                     singular_values=S.copy())


def svt(A, tau, backend=THRESHOLD, warm=None, **kwargs):
    """Proximal operator of ``tau * ||.||_*``: shrink every singular value by
    ``tau`` and drop those that do not exceed it.

    Returns ``(X, warm)``; ``warm`` is passed through unchanged by the
    threshold backend.
    """
    r = svt_detail(A, tau, backend=backend, warm=warm, **kwargs)
    return r.X, r.warm


@dataclass
class RpcaOptions:
    lam: Union[float, str] = "auto"
    rho: float = 1.5
    mu0: Optional[float] = None
    mu_max_factor: float = 1e7
    tol: float = 1e-7
    max_iter: int = 500
    backend: str = THRESHOLD
    seed: int = 0
    svt_tol: Optional[float] = None

    def check(self):
        if not self.rho > 1:
            raise ValidationError(f"rho must exceed 1, got {self.rho}")
        if not self.tol > 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.backend not in BACKENDS:
            raise ValidationError(f"unknown backend {self.backend!r}")
        if self.lam != "auto" and not (isinstance(self.lam, (int, float)) and self.lam > 0):
            raise ValidationError(f"lambda must be 'auto' or positive, got {self.lam!r}")


@dataclass
class RpcaResult:
    L: np.ndarray
    E: np.ndarray
    Y: np.ndarray
    mu: float
    iterations: int
    converged: bool
    lam: float
    history: List[dict] = field(default_factory=list)

    @property
    def matvecs(self):
        return sum(h["matvecs"] for h in self.history)


def spectral_norm_estimate(D, steps=10, seed=0):
    """``||D||_2`` from a few power iterations on ``D^T D``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(D.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(steps):
        w = D @ v
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        v = D.T @ w
        v /= np.linalg.norm(v)
    return max(est, float(np.linalg.norm(D @ v)))


def rpca_ialm(D, opts=None):
    """Robust PCA of ``D``; returns an :class:`RpcaResult`."""
    opts = RpcaOptions() if opts is None else opts
    opts.check()
    D = as_dense(D, "D")
    m, n = D.shape
    lam = 1.0 / math.sqrt(max(m, n)) if opts.lam == "auto" else float(opts.lam)
    normD = float(np.linalg.norm(D))
    if normD == 0.0:
        Z = np.zeros((m, n))
        hist = [dict(iter=1, residual=0.0, rank=0, matvecs=0, threshold=0.0, mu=0.0)]
        return RpcaResult(L=Z, E=Z.copy(), Y=Z.copy(), mu=0.0, iterations=1,
                          converged=True, lam=lam, history=hist)

    norm2 = spectral_norm_estimate(D, seed=opts.seed)
    mu = 1.25 / norm2 if opts.mu0 is None else float(opts.mu0)
    mu_max = mu * opts.mu_max_factor
    Y = D / max(norm2, float(np.abs(D).max()) / lam)
    E = np.zeros((m, n))
    warm = None
    history = []
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        r = svt_detail(D - E + Y / mu, 1.0 / mu, backend=opts.backend, warm=warm,
                       tol=opts.svt_tol, seed=opts.seed)
        L, warm = r.X, r.warm
        E = soft_threshold(D - L + Y / mu, lam / mu)
        Z = D - L - E
        Y += mu * Z
        resid = float(np.linalg.norm(Z)) / normD
        history.append(dict(iter=it, residual=resid, rank=r.rank, matvecs=r.matvecs,
                            threshold=1.0 / mu, mu=mu))
        if resid <= opts.tol:
            converged = True
            break
        mu = min(opts.rho * mu, mu_max)
    return RpcaResult(L=L, E=E, Y=Y, mu=mu, iterations=it, converged=converged,
                      lam=lam, history=history)
