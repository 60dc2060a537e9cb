"""Hot inner loops, compiled with numba when available.

Every kernel exists twice: a numba ``@njit`` version written as explicit
loops, and a pure-numpy version.  Set ``PSVD_DISABLE_NUMBA=1`` before
importing psvd to force the numpy path (or when numba is not installed the
numpy path is used automatically).  Both paths are importable directly as
``*_nb`` / ``*_np`` so they can be tested and benchmarked against each other.

Array layout: every 2-D array handed to these kernels is C-ordered
(row-major) float64.  Bases are stored as ``n x capacity`` arrays whose
first ``k`` columns are live, so one row of a basis is contiguous.
"""

import math
import os

import numpy as np

try:
    from numba import njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    _HAVE_NUMBA = False

USING_NUMBA = _HAVE_NUMBA and os.environ.get(
    "PSVD_DISABLE_NUMBA", "").strip().lower() not in ("1", "true", "yes", "on")


def _jit(fn):
    if not _HAVE_NUMBA:
        return fn
    return njit(cache=True, nogil=True)(fn)


# --------------------------------------------------------------------------
# Classical Gram-Schmidt projection:  r <- r - Q[:, :k] (Q[:, :k]^T r)
# --------------------------------------------------------------------------

def _project_fused_py(Q, k, r, coef):
    n = r.shape[0]
    for j in range(k):
        coef[j] = 0.0
    # one sweep over the rows of Q builds all k coefficients at once
    for i in range(n):
        ri = r[i]
        for j in range(k):
            coef[j] += Q[i, j] * ri
    for i in range(n):
        acc = r[i]
        for j in range(k):
            acc -= Q[i, j] * coef[j]
        r[i] = acc


def _project_loop_py(Q, k, r, coef):
    n = r.shape[0]
    for j in range(k):
        s = 0.0
        for i in range(n):
            s += Q[i, j] * r[i]
        coef[j] = s
    for j in range(k):
        cj = coef[j]
        for i in range(n):
            r[i] -= Q[i, j] * cj


project_fused_nb = _jit(_project_fused_py)
project_loop_nb = _jit(_project_loop_py)


def project_fused_np(Q, k, r, coef):
    Qk = Q[:, :k]
    coef[:k] = Qk.T @ r
    r -= Qk @ coef[:k]


def project_loop_np(Q, k, r, coef):
    for j in range(k):
        coef[j] = Q[:, j] @ r
    for j in range(k):
        r -= coef[j] * Q[:, j]


# --------------------------------------------------------------------------
# One-sided (Hestenes) Jacobi.  W holds the columns of A as its rows
# (W = A^T, r x m), Vt accumulates the right rotations (r x r, rows).
# Pairs whose inner product is at most abs_tol are left alone: both columns
# are then at rounding level and their angle carries no information.
# Returns (sweeps, converged, last_off).
# --------------------------------------------------------------------------

def _hestenes_py(W, Vt, tol, abs_tol, max_sweeps):
    r = W.shape[0]
    m = W.shape[1]
    sweeps = 0
    off = 0.0
    while sweeps < max_sweeps:
        sweeps += 1
        off = 0.0
        rotated = False
        for p in range(r - 1):
            for q in range(p + 1, r):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    wp = W[p, i]
                    wq = W[q, i]
                    alpha += wp * wp
                    beta += wq * wq
                    gamma += wp * wq
                if alpha == 0.0 or beta == 0.0 or abs(gamma) <= abs_tol:
                    continue
                rel = abs(gamma) / math.sqrt(alpha * beta)
                if rel > off:
                    off = rel
                if rel <= tol:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                for i in range(m):
                    wp = W[p, i]
                    wq = W[q, i]
                    W[p, i] = c * wp - s * wq
                    W[q, i] = s * wp + c * wq
                for i in range(r):
                    vp = Vt[p, i]
                    vq = Vt[q, i]
                    Vt[p, i] = c * vp - s * vq
                    Vt[q, i] = s * vp + c * vq
        if not rotated:
            return sweeps, True, off
    return sweeps, False, off


hestenes_nb = _jit(_hestenes_py)


def _round_robin(r):
    """Tournament schedule: r-1 rounds (r padded to even) of disjoint pairs."""
    R = r + (r % 2)
    players = list(range(R))
    rounds = []
    for _ in range(R - 1):
        ps, qs = [], []
        for i in range(R // 2):
            a, b = players[i], players[R - 1 - i]
            if a < r and b < r:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def hestenes_np(W, Vt, tol, abs_tol, max_sweeps):
    r = W.shape[0]
    if r < 2:
        return 1, True, 0.0
    rounds = _round_robin(r)
    sweeps = 0
    off = 0.0
    while sweeps < max_sweeps:
        sweeps += 1
        off = 0.0
        rotated = False
        for ps, qs in rounds:
            if ps.size == 0:
                continue
            P = W[ps]
            Q = W[qs]
            alpha = np.einsum("ij,ij->i", P, P)
            beta = np.einsum("ij,ij->i", Q, Q)
            gamma = np.einsum("ij,ij->i", P, Q)
            live = (alpha > 0.0) & (beta > 0.0) & (np.abs(gamma) > abs_tol)
            rel = np.zeros_like(gamma)
            rel[live] = np.abs(gamma[live]) / np.sqrt(alpha[live] * beta[live])
            if rel.size:
                off = max(off, float(rel.max()))
            need = rel > tol
            if not need.any():
                continue
            rotated = True
            ps, qs = ps[need], qs[need]
            g = gamma[need]
            zeta = (beta[need] - alpha[need]) / (2.0 * g)
            t = np.copysign(1.0, zeta) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = (1.0 / np.hypot(1.0, t))[:, None]
            s = c * t[:, None]
            P, Q = P[need], Q[need]
            W[ps] = c * P - s * Q
            W[qs] = s * P + c * Q
            Vp, Vq = Vt[ps], Vt[qs]
            Vt[ps] = c * Vp - s * Vq
            Vt[qs] = s * Vp + c * Vq
        if not rotated:
            return sweeps, True, off
    return sweeps, False, off


# --------------------------------------------------------------------------
# Cyclic two-sided Jacobi for symmetric matrices.  S is overwritten with a
# (numerically) diagonal matrix, Z accumulates eigenvectors as columns.
# Off-diagonal entries at or below abs_tol are treated as zero.
# --------------------------------------------------------------------------

def _jacobi_eigh_py(S, Z, tol, abs_tol, max_sweeps):
    n = S.shape[0]
    sweeps = 0
    off = 0.0
    while sweeps < max_sweeps:
        sweeps += 1
        off = 0.0
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = S[p, q]
                scale = math.sqrt(abs(S[p, p] * S[q, q]))
                if abs(apq) <= abs_tol:
                    continue
                rel = abs(apq) / scale if scale > 0.0 else math.inf
                if rel > off:
                    off = rel
                if rel <= tol:
                    continue
                rotated = True
                theta = (S[q, q] - S[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                for k in range(n):
                    skp = S[k, p]
                    skq = S[k, q]
                    S[k, p] = c * skp - s * skq
                    S[k, q] = s * skp + c * skq
                for k in range(n):
                    spk = S[p, k]
                    sqk = S[q, k]
                    S[p, k] = c * spk - s * sqk
                    S[q, k] = s * spk + c * sqk
                S[p, q] = 0.0
                S[q, p] = 0.0
                for k in range(n):
                    zkp = Z[k, p]
                    zkq = Z[k, q]
                    Z[k, p] = c * zkp - s * zkq
                    Z[k, q] = s * zkp + c * zkq
        if not rotated:
            return sweeps, True, off
    return sweeps, False, off


jacobi_eigh_nb = _jit(_jacobi_eigh_py)


def jacobi_eigh_np(S, Z, tol, abs_tol, max_sweeps):
    n = S.shape[0]
    sweeps = 0
    off = 0.0
    while sweeps < max_sweeps:
        sweeps += 1
        off = 0.0
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = S[p, q]
                if abs(apq) <= abs_tol:
                    continue
                scale = math.sqrt(abs(S[p, p] * S[q, q]))
                rel = abs(apq) / scale if scale > 0.0 else math.inf
                off = max(off, rel)
                if rel <= tol:
                    continue
                rotated = True
                theta = (S[q, q] - S[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                colp, colq = S[:, p].copy(), S[:, q].copy()
                S[:, p] = c * colp - s * colq
                S[:, q] = s * colp + c * colq
                rowp, rowq = S[p, :].copy(), S[q, :].copy()
                S[p, :] = c * rowp - s * rowq
                S[q, :] = s * rowp + c * rowq
                S[p, q] = S[q, p] = 0.0
                zp, zq = Z[:, p].copy(), Z[:, q].copy()
                Z[:, p] = c * zp - s * zq
                Z[:, q] = s * zp + c * zq
        if not rotated:
            return sweeps, True, off
    return sweeps, False, off


if USING_NUMBA:
    project_fused = project_fused_nb
    project_loop = project_loop_nb
    hestenes = hestenes_nb
    jacobi_eigh = jacobi_eigh_nb
else:
    project_fused = project_fused_np
    project_loop = project_loop_np
    hestenes = hestenes_np
    jacobi_eigh = jacobi_eigh_np
