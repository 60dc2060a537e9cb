"""Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization.

The recurrence, with ``v_0 = 0``::

    r_i     = A^T u_i - beta_i v_{i-1},   r_i <- reorth(r_i, V)
    alpha_i = ||r_i||,                    v_i = r_i / alpha_i
    p_i     = A v_i - alpha_i u_i,        p_i <- reorth(p_i, U)
    beta_{i+1} = ||p_i||,                 u_{i+1} = p_i / beta_{i+1}

so that ``A V_k = U_{k+1} B_k`` with ``B_k`` the ``(k+1) x k`` lower
bidiagonal matrix holding ``alpha`` on the diagonal and ``beta_2..beta_{k+1}``
below it.

A coefficient at or below ``1e-13 * ||A||`` (running estimate) is a
breakdown: an invariant subspace was found.  The coefficient is stored as an
exact zero and the recurrence continues from a random unit vector orthogonal
to the current basis, so ``B`` splits into independent blocks and repeated
singular values are still reachable.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractError, ValidationError
from .linops import aslinearoperator

BREAKDOWN_RTOL = 1e-13

FUSED = "fused-block"
LOOP = "vector-loop"


@dataclass(frozen=True)
class ReorthPolicy:
    """How new Lanczos vectors are reorthogonalized.

    ``fused-block`` forms all projection coefficients in one pass over the
    basis; ``vector-loop`` projects one basis vector at a time.  ``passes``
    Gram-Schmidt passes always run; with ``passes == 1`` a second one runs
    when the norm drops below ``eta`` times its value before the pass.
    """

    mode: str = FUSED
    passes: int = 2
    eta: float = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        if self.mode not in (FUSED, LOOP):
            raise ValidationError(f"unknown reorthogonalization mode {self.mode!r}")
        if self.passes not in (1, 2, 3):
            raise ValidationError(f"passes must be 1, 2 or 3, got {self.passes}")
        if not 0.0 < self.eta <= 1.0:
            raise ValidationError(f"eta must lie in (0, 1], got {self.eta}")


DEFAULT_POLICY = ReorthPolicy()


def _project(policy):
    return _kernels.project_fused if policy.mode == FUSED else _kernels.project_loop


def _reorth_inplace(r, Q, k, policy, coef):
    """Orthogonalize ``r`` against ``Q[:, :k]`` in place; return its new norm."""
    nrm = float(np.sqrt(r @ r))
    if k == 0:
        return nrm
    project = _project(policy)
    for _ in range(policy.passes):
        project(Q, k, r, coef)
        before, nrm = nrm, float(np.sqrt(r @ r))
    if policy.passes == 1 and nrm < policy.eta * before:
        project(Q, k, r, coef)
        nrm = float(np.sqrt(r @ r))
    return nrm


def reorth(r, basis, policy=DEFAULT_POLICY):
    """Return ``(r_orth, ||r_orth||)`` with ``r_orth`` orthogonal to ``basis``.

    ``basis`` is an ``n x k`` matrix with orthonormal columns (``k`` may be 0).
    """
    r = np.array(r, dtype=np.float64, copy=True)
    Q = np.ascontiguousarray(basis, dtype=np.float64)
    if Q.ndim != 2 or r.ndim != 1 or Q.shape[0] != r.shape[0]:
        raise ContractError(
            f"basis of shape {Q.shape} does not match vector of shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise ValidationError("vector contains NaN or Inf")
    coef = np.empty(max(Q.shape[1], 1))
    nrm = _reorth_inplace(r, Q, Q.shape[1], policy, coef)
    return r, nrm


class GKLState:
    """Resumable bidiagonalization state.

    Owned by one caller at a time.  ``U`` and ``V`` are views on internal
    row-major buffers and stay valid until the next extension.
    """

    def __init__(self, op, u1, beta1, rng):
        self.op = op
        m, n = op.shape
        self.kmax = min(m, n)
        cap = min(self.kmax, 32)
        self._U = np.zeros((m, cap + 1))
        self._V = np.zeros((n, cap))
        self._U[:, 0] = u1
        self._coef = np.empty(cap + 1)
        self._nu = 1
        self.alphas = []
        self.betas = [float(beta1)]
        self.k = 0
        self.breakdowns = []
        self.anorm = 0.0
        self.matvecs = 0
        self.rng = rng

    @property
    def i(self):
        """Index of the next step (1-based, as in the recurrence)."""
        return self.k + 1

    @property
    def U(self):
        return self._U[:, :self._nu]

    @property
    def V(self):
        return self._V[:, :self.k]

    @property
    def breakdown(self):
        return bool(self.breakdowns)

    @property
    def complete(self):
        """True when ``V`` spans the whole domain or ``U`` the whole range."""
        m, n = self.op.shape
        return self.k == n or self._nu == m

    def bidiagonal(self):
        """``B`` with ``A V = U B``: ``(k+1) x k``, or ``k x k`` when no
        further left vector exists."""
        B = np.zeros((self._nu, self.k))
        idx = np.arange(self.k)
        B[idx, idx] = self.alphas
        sub = idx[idx + 1 < self._nu]
        B[sub + 1, sub] = self.betas[1:1 + sub.size]
        return B

    def _grow(self, need_v):
        cap = self._V.shape[1]
        if need_v <= cap:
            return
        new = min(self.kmax, max(need_v, 2 * cap))
        V = np.zeros((self._V.shape[0], new))
        V[:, :cap] = self._V
        U = np.zeros((self._U.shape[0], new + 1))
        U[:, :cap + 1] = self._U
        self._V, self._U = V, U
        self._coef = np.empty(new + 1)

    def _random_unit(self, Q, k, policy):
        while True:
            w = self.rng.standard_normal(Q.shape[0])
            nrm = _reorth_inplace(w, Q, k, ReorthPolicy(policy.mode, 2), self._coef)
            if nrm > 1e-8:
                return w / nrm

    def _step(self, policy):
        m, n = self.op.shape
        j = self.k
        self._grow(j + 1)
        U, V, coef = self._U, self._V, self._coef
        tol = BREAKDOWN_RTOL

        r = np.array(self.op.rmatvec(U[:, j]), dtype=np.float64)
        self.matvecs += 1
        self.anorm = max(self.anorm, float(np.sqrt(r @ r)))
        if j > 0:
            r -= self.betas[j] * V[:, j - 1]
        alpha = _reorth_inplace(r, V, j, policy, coef)
        if alpha <= tol * self.anorm:
            self.breakdowns.append(("alpha", j + 1))
            alpha = 0.0
            r = self._random_unit(V, j, policy)
        else:
            r /= alpha
        V[:, j] = r
        self.alphas.append(alpha)

        p = np.array(self.op.matvec(V[:, j]), dtype=np.float64)
        self.matvecs += 1
        self.anorm = max(self.anorm, float(np.sqrt(p @ p)))
        p -= alpha * U[:, j]
        beta = _reorth_inplace(p, U, j + 1, policy, coef)
        self.k += 1
        if beta <= tol * self.anorm:
            self.breakdowns.append(("beta", j + 1))
            self.betas.append(0.0)
            if j + 1 < m:
                U[:, j + 1] = self._random_unit(U, j + 1, policy)
                self._nu = j + 2
            else:
                self._nu = j + 1
        else:
            U[:, j + 1] = p / beta
            self.betas.append(beta)
            self._nu = j + 2

    def residual(self):
        """Frobenius norm of ``A V - U B`` (test and diagnostic helper)."""
        AV = self.op.matmat(self.V) if self.k else np.zeros((self.op.rows, 0))
        return float(np.linalg.norm(AV - self.U @ self.bidiagonal()))


def init_bidiagonalization(op, p0=None, seed=None, rng=None):
    """Start a bidiagonalization from ``p0`` (a seeded random vector if omitted)."""
    op = aslinearoperator(op)
    if rng is None:
        rng = np.random.default_rng(seed)
    if p0 is None:
        p0 = rng.standard_normal(op.rows)
    p0 = np.asarray(p0, dtype=np.float64)
    if p0.shape != (op.rows,):
        raise ContractError(f"p0 must have shape ({op.rows},), got {p0.shape}")
    if not np.all(np.isfinite(p0)):
        raise ValidationError("p0 contains NaN or Inf")
    beta1 = float(np.linalg.norm(p0))
    if beta1 == 0.0:
        raise ValidationError("starting vector p0 must be nonzero")
    return GKLState(op, p0 / beta1, beta1, rng)


def extend_bidiagonalization(state, K_target, policy=DEFAULT_POLICY):
    """Run the recurrence until ``K_target`` steps have been taken."""
    if K_target > state.kmax:
        raise ContractError(
            f"K_target={K_target} exceeds min(rows, cols)={state.kmax}")
    while state.k < K_target:
        state._step(policy)
    return state
