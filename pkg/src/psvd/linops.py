"""Operators, dense-matrix validation and block orthonormalization.

Dense matrices are plain ``numpy.ndarray`` objects, float64, C-ordered
(row-major).  :func:`as_dense` is the single entry point that enforces this
and rejects non-finite data; every kernel in the package assumes that layout.
"""

import numpy as np

from .errors import ContractError, ValidationError

__all__ = [
    "as_dense",
    "LinearOperator",
    "DenseOperator",
    "FunctionOperator",
    "aslinearoperator",
    "apply",
    "apply_adjoint",
    "orthonormalize_block",
    "adjoint_mismatch",
]


def as_dense(a, name="matrix"):
    """Return ``a`` as a finite, C-ordered, read-only float64 2-D array."""
    arr = np.array(a, dtype=np.float64, order="C", copy=True)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf")
    arr.flags.writeable = False
    return arr


def _as_vector(x, n, name):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise ContractError(f"{name} must have shape ({n},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError(f"{name} contains NaN or Inf")
    return x


class LinearOperator:
    """Abstract real ``rows x cols`` operator.

    Subclasses implement ``_matvec`` (``A @ x``) and ``_rmatvec``
    (``A.T @ y``).  Block products default to column-by-column application.
    Instances are treated as immutable once built.
    """

    def __init__(self, rows, cols):
        rows, cols = int(rows), int(cols)
        if rows < 1 or cols < 1:
            raise ValidationError(f"operator shape must be positive, got {(rows, cols)}")
        self.rows = rows
        self.cols = cols

    @property
    def shape(self):
        return (self.rows, self.cols)

    def _matvec(self, x):
        raise NotImplementedError

    def _rmatvec(self, y):
        raise NotImplementedError

    def matvec(self, x):
        return self._matvec(_as_vector(x, self.cols, "x"))

    def rmatvec(self, y):
        return self._rmatvec(_as_vector(y, self.rows, "y"))

    def matmat(self, X):
        """``A @ X`` for an ``cols x b`` block."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != self.cols:
            raise ContractError(f"block must have {self.cols} rows, got {X.shape}")
        return self._matmat(X)

    def rmatmat(self, Y):
        """``A.T @ Y`` for an ``rows x b`` block."""
        Y = np.asarray(Y, dtype=np.float64)
        if Y.ndim != 2 or Y.shape[0] != self.rows:
            raise ContractError(f"block must have {self.rows} rows, got {Y.shape}")
        return self._rmatmat(Y)

    def _matmat(self, X):
        out = np.empty((self.rows, X.shape[1]))
        for j in range(X.shape[1]):
            out[:, j] = self._matvec(np.ascontiguousarray(X[:, j]))
        return out

    def _rmatmat(self, Y):
        out = np.empty((self.cols, Y.shape[1]))
        for j in range(Y.shape[1]):
            out[:, j] = self._rmatvec(np.ascontiguousarray(Y[:, j]))
        return out

    def to_dense(self):
        return self._matmat(np.eye(self.cols))

    def __repr__(self):
        return f"<{type(self).__name__} {self.rows}x{self.cols}>"


class DenseOperator(LinearOperator):
    """Operator backed by an explicit dense matrix."""

    def __init__(self, a):
        a = as_dense(a)
        super().__init__(*a.shape)
        self.a = a

    def _matvec(self, x):
        return self.a @ x

    def _rmatvec(self, y):
        return self.a.T @ y

    def _matmat(self, X):
        return self.a @ X

    def _rmatmat(self, Y):
        return self.a.T @ Y

    def to_dense(self):
        return self.a.copy()

    def frobenius_norm(self):
        return float(np.linalg.norm(self.a))


class FunctionOperator(LinearOperator):
    """Implicit operator from a pair of callables."""

    def __init__(self, rows, cols, matvec, rmatvec):
        super().__init__(rows, cols)
        self._fwd = matvec
        self._adj = rmatvec

    def _matvec(self, x):
        return np.asarray(self._fwd(x), dtype=np.float64).reshape(self.rows)

    def _rmatvec(self, y):
        return np.asarray(self._adj(y), dtype=np.float64).reshape(self.cols)


def aslinearoperator(a):
    if isinstance(a, LinearOperator):
        return a
    return DenseOperator(a)


def apply(op, x):
    """Forward product ``A @ x``."""
    return aslinearoperator(op).matvec(x)


def apply_adjoint(op, y):
    """Adjoint product ``A.T @ y``."""
    return aslinearoperator(op).rmatvec(y)


def adjoint_mismatch(op, trials=3, rng=None):
    """Largest relative gap between <A x, y> and <x, A^T y> over random probes."""
    op = aslinearoperator(op)
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(op.cols)
        y = rng.standard_normal(op.rows)
        ax = op.matvec(x)
        aty = op.rmatvec(y)
        lhs = float(ax @ y)
        rhs = float(x @ aty)
        scale = np.linalg.norm(ax) * np.linalg.norm(y) + np.linalg.norm(x) * np.linalg.norm(aty)
        if scale > 0:
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def orthonormalize_block(M, rng=None, basis=None, drop_tol=1e-13):
    """Thin QR of ``M`` by twice-iterated Gram-Schmidt, with rank detection.

    Columns whose norm after projection falls to ``drop_tol * ||M||_F`` or
    below are rank-deficient: their ``R`` diagonal is set to zero and the
    column of ``Q`` is replaced by a fresh random unit direction orthogonal
    to everything before it (drawn from ``rng``).  If ``basis`` (orthonormal
    columns) is given, every column is also orthogonalized against it and
    those projection coefficients are discarded.

    Returns ``(Q, R, rank)`` with ``M ~= Q @ R`` on the retained columns.
    """
    M = np.array(M, dtype=np.float64, order="C", copy=True)
    if M.ndim != 2:
        raise ContractError(f"block must be 2-D, got shape {M.shape}")
    n, b = M.shape
    nbasis = 0 if basis is None else basis.shape[1]
    if b + nbasis > n:
        raise ContractError(f"cannot orthonormalize {b} columns in R^{n} "
                            f"against {nbasis} basis vectors")
    rng = np.random.default_rng(0) if rng is None else rng
    scale = float(np.linalg.norm(M))
    if basis is not None and nbasis:
        M -= basis @ (basis.T @ M)
    else:
        basis = None
    Q = np.zeros((n, b))
    R = np.zeros((b, b))
    rank = 0
    for j in range(b):
        w = M[:, j].copy()
        # the external basis is projected out on every pass: a nearly
        # dependent column is mostly rounding noise, which is not orthogonal
        # to anything until cleaned
        for _ in range(2):
            if basis is not None:
                w -= basis @ (basis.T @ w)
            c = Q[:, :j].T @ w
            w -= Q[:, :j] @ c
            R[:j, j] += c
        nrm = float(np.linalg.norm(w))
        if nrm > drop_tol * scale and nrm > 0.0:
            R[j, j] = nrm
            Q[:, j] = w / nrm
            rank += 1
        else:
            Q[:, j] = _random_direction(n, rng, Q[:, :j], basis)
    return Q, R, rank


def _random_direction(n, rng, *blocks):
    while True:
        w = rng.standard_normal(n)
        for _ in range(2):
            for B in blocks:
                if B is not None and B.shape[1]:
                    w -= B @ (B.T @ w)
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            return w / nrm
