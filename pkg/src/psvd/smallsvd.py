"""Dense SVD of small matrices by one-sided Jacobi.

This is both the inner solver for the projected bidiagonal problems and the
reference solver the test-suite compares the iterative drivers against.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractError, ConvergenceError, ValidationError

MAX_SWEEPS = 30
ROTATION_TOL = 1e-14
NEGLIGIBLE = 1e-15


@dataclass
class SvdResult:
    """Thin SVD ``A = U @ diag(S) @ V.T`` with ``S`` descending."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    sweeps: int = 0

    def reconstruct(self):
        return (self.U * self.S) @ self.V.T


def svd_dense(A, max_sweeps=MAX_SWEEPS, tol=ROTATION_TOL):
    """Thin SVD of a dense matrix.

    Wide inputs are handled through the transpose; inputs with more than
    twice as many rows as columns are first reduced by a thin QR.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or min(A.shape) < 1:
        raise ContractError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix contains NaN or Inf")
    m, n = A.shape
    if m < n:
        res = svd_dense(A.T, max_sweeps=max_sweeps, tol=tol)
        return SvdResult(U=res.V, S=res.S, V=res.U, sweeps=res.sweeps)
    if m > 2 * n:
        Q, R = np.linalg.qr(A)
        res = _jacobi_tall(R, max_sweeps, tol)
        return SvdResult(U=Q @ res.U, S=res.S, V=res.V, sweeps=res.sweeps)
    return _jacobi_tall(A, max_sweeps, tol)


def _jacobi_tall(A, max_sweeps, tol):
    m, n = A.shape
    W = np.ascontiguousarray(A.T, dtype=np.float64).copy()
    Vt = np.eye(n)
    # inner products below (eps-level * ||A||_F)^2 are rounding noise
    abs_tol = (NEGLIGIBLE * float(np.linalg.norm(W))) ** 2
    sweeps, converged, off = _kernels.hestenes(W, Vt, tol, abs_tol, max_sweeps)
    S = np.sqrt(np.einsum("ij,ij->i", W, W))
    order = np.argsort(-S, kind="stable")
    S = S[order]
    W = W[order]
    V = np.ascontiguousarray(Vt[order].T)
    U = _left_vectors(W, S, m)
    res = SvdResult(U=U, S=S, V=V, sweeps=int(sweeps))
    if not converged:
        raise ConvergenceError(
            f"one-sided Jacobi did not converge in {max_sweeps} sweeps "
            f"(largest off-diagonal cosine {off:.3e})", best=res)
    return res


def _left_vectors(W, S, m):
    """Normalize the rotated columns; complete the basis where sigma ~ 0."""
    n = W.shape[0]
    U = np.zeros((m, n))
    smax = S[0] if n else 0.0
    floor = max(smax * 1e-300, np.finfo(float).tiny)
    rng = np.random.default_rng(12345)
    for j in range(n):
        if S[j] > floor and S[j] > smax * 1e-15:
            w = W[j] / S[j]
        else:
            w = rng.standard_normal(m)
        # tiny sigma means a direction polluted by rounding; clean it against
        # the better-determined columns before it
        for _ in range(2):
            w -= U[:, :j] @ (U[:, :j].T @ w)
        nrm = np.linalg.norm(w)
        while nrm < 0.5:
            w = rng.standard_normal(m)
            for _ in range(2):
                w -= U[:, :j] @ (U[:, :j].T @ w)
            nrm = np.linalg.norm(w)
        U[:, j] = w / nrm
    return U


def assemble_bidiagonal(alphas, betas):
    """Dense ``(K+1) x K`` lower bidiagonal: alphas on the diagonal, betas below."""
    alphas = np.asarray(alphas, dtype=np.float64)
    betas = np.asarray(betas, dtype=np.float64)
    if alphas.ndim != 1 or betas.shape != alphas.shape:
        raise ContractError(
            f"need len(betas) == len(alphas), got {betas.shape} and {alphas.shape}")
    K = alphas.shape[0]
    if K < 1:
        raise ContractError("bidiagonal needs at least one step")
    B = np.zeros((K + 1, K))
    idx = np.arange(K)
    B[idx, idx] = alphas
    B[idx + 1, idx] = betas
    return B


def svd_bidiagonal(alphas, betas, square=False):
    """SVD of the lower bidiagonal ``B`` with ``B[j, j] = alphas[j]`` and
    ``B[j+1, j] = betas[j]``.

    By default ``B`` is ``(K+1) x K``.  With ``square=True`` only its leading
    ``K x K`` block is used (the last beta is ignored).
    """
    B = assemble_bidiagonal(alphas, betas)
    if square:
        B = B[:-1]
    return svd_dense(B)


def eigh_jacobi(S, max_sweeps=MAX_SWEEPS, tol=ROTATION_TOL):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi.

    Returns ``(w, Z)`` with eigenvalues ``w`` sorted by decreasing magnitude
    and orthonormal eigenvectors in the columns of ``Z``.
    """
    S = np.array(S, dtype=np.float64, order="C", copy=True)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] < 1:
        raise ContractError(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValidationError("matrix contains NaN or Inf")
    n = S.shape[0]
    S = 0.5 * (S + S.T)
    Z = np.eye(n)
    abs_tol = 1e-15 * float(np.linalg.norm(S))
    sweeps, converged, off = _kernels.jacobi_eigh(S, Z, tol, abs_tol, max_sweeps)
    w = np.diag(S).copy()
    order = np.lexsort((-w, -np.abs(w)))
    w, Z = w[order], np.ascontiguousarray(Z[:, order])
    if not converged:
        raise ConvergenceError(
            f"symmetric Jacobi did not converge in {max_sweeps} sweeps", best=(w, Z))
    return w, Z
