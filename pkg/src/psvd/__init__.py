"""Partial SVD by Lanczos bidiagonalization, block Lanczos with warm start,
singular value thresholding and Robust PCA."""

from ._kernels import USING_NUMBA
from .blws import BlwsOptions, EigenPairs, WarmState, bl_evd, bl_svd
from .errors import (ContractError, ConvergenceError, MatrixMarketError, PsvdError,
                     ValidationError)
from .lanczos import (DEFAULT_POLICY, FUSED, LOOP, GKLState, ReorthPolicy,
                      extend_bidiagonalization, init_bidiagonalization, reorth)
from .linops import (DenseOperator, FunctionOperator, LinearOperator, apply, apply_adjoint,
                     as_dense, aslinearoperator, orthonormalize_block)
from .mmio import read_matrix_market, write_matrix_market
from .partialsvd import (PartialSVD, ThresholdOptions, ritz_from_state, svd_above_threshold,
                         svd_top_k, update_subspace_size)
from .report import RunReport
from .rpca import RpcaOptions, RpcaResult, rpca_ialm, soft_threshold, svt
from .smallsvd import SvdResult, eigh_jacobi, svd_bidiagonal, svd_dense

__version__ = "0.1.0"
