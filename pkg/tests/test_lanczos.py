import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import planted
from psvd import (FUSED, LOOP, ContractError, ReorthPolicy, ValidationError,
                  extend_bidiagonalization, init_bidiagonalization, reorth)
from psvd import _kernels
from psvd.lanczos import GKLState


def assert_invariants(state, A):
    """Orthonormal bases and A V = U B, to the tolerances every run must meet."""
    A = np.asarray(A)
    U, V = state.U, state.V
    assert np.abs(U.T @ U - np.eye(U.shape[1])).max() <= 1e-10
    assert np.abs(V.T @ V - np.eye(V.shape[1])).max() <= 1e-10
    assert np.linalg.norm(A @ V - U @ state.bidiagonal()) <= 1e-9 * max(np.linalg.norm(A), 1e-300)


SUITE = {
    "gauss_30x20": lambda: np.random.default_rng(0).standard_normal((30, 20)),
    "gauss_20x30": lambda: np.random.default_rng(1).standard_normal((20, 30)),
    "decaying": lambda: planted(60, 40, 0.7 ** np.arange(40), 2),
    "clustered": lambda: planted(50, 50, np.r_[np.full(5, 3.0), np.full(5, 3.0 + 1e-9),
                                               np.linspace(1, 0.1, 40)], 3),
    "rank3": lambda: planted(40, 25, [5.0, 2.0, 1.0], 4),
    "identity": lambda: np.eye(12),
}


@pytest.mark.parametrize("name", sorted(SUITE))
@pytest.mark.parametrize("mode", [FUSED, LOOP])
def test_invariants_on_suite(name, mode):
    A = SUITE[name]()
    state = init_bidiagonalization(A, seed=3)
    for K in (1, 5, min(A.shape) // 2, min(A.shape)):
        extend_bidiagonalization(state, K, ReorthPolicy(mode=mode))
        assert state.k == K and state.matvecs == 2 * K
        assert_invariants(state, A)


def test_frozen_two_by_two():
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    state = init_bidiagonalization(A, p0=[1.0, 0.0])
    extend_bidiagonalization(state, 2)
    np.testing.assert_allclose(state.alphas, [math.sqrt(2), 1 / math.sqrt(2)], rtol=1e-15)
    np.testing.assert_allclose(state.betas[:2], [1.0, 1 / math.sqrt(2)], rtol=1e-15)
    assert_invariants(state, A)


def test_invariant_subspace_breakdown_is_recorded():
    A = np.diag([3.0, 2.0, 1.0])
    state = init_bidiagonalization(A, p0=[1.0, 0.0, 0.0])
    extend_bidiagonalization(state, 1)
    assert state.alphas == [3.0] and state.betas == [1.0, 0.0]
    assert state.breakdowns == [("beta", 1)]
    # the recurrence restarts orthogonally and still reaches every value
    extend_bidiagonalization(state, 3)
    assert_invariants(state, A)
    B = state.bidiagonal()
    np.testing.assert_allclose(np.linalg.svd(B, compute_uv=False), [3.0, 2.0, 1.0], rtol=1e-13)


def test_repeated_singular_values_reachable():
    A = np.eye(4)
    state = init_bidiagonalization(A, seed=0)
    extend_bidiagonalization(state, 4)
    assert state.breakdown
    assert_invariants(state, A)
    np.testing.assert_allclose(np.linalg.svd(state.bidiagonal(), compute_uv=False),
                               np.ones(4), rtol=1e-13)


def test_zero_matrix():
    A = np.zeros((5, 3))
    state = init_bidiagonalization(A, seed=0)
    extend_bidiagonalization(state, 3)
    assert np.all(np.asarray(state.alphas) == 0.0)
    assert_invariants(state, A)


@pytest.mark.parametrize("mode", [FUSED, LOOP])
def test_resumable(mode):
    A = SUITE["decaying"]()
    pol = ReorthPolicy(mode=mode)
    a = init_bidiagonalization(A, seed=5)
    extend_bidiagonalization(a, 7, pol)
    extend_bidiagonalization(a, 19, pol)
    b = extend_bidiagonalization(init_bidiagonalization(A, seed=5), 19, pol)
    np.testing.assert_allclose(a.alphas, b.alphas, rtol=0, atol=1e-12)
    np.testing.assert_allclose(a.betas, b.betas, rtol=0, atol=1e-12)
    np.testing.assert_allclose(a.U, b.U, rtol=0, atol=1e-12)


def test_extension_is_noop_when_reached():
    A = SUITE["gauss_30x20"]()
    s = extend_bidiagonalization(init_bidiagonalization(A, seed=0), 6)
    alphas = list(s.alphas)
    extend_bidiagonalization(s, 4)
    assert s.alphas == alphas and s.k == 6


@pytest.mark.skipif(not _kernels.USING_NUMBA, reason="needs the shared-order compiled kernels")
def test_modes_agree_on_suite():
    # whole coefficient sequences amplify rounding differences, so this holds
    # only when both modes sum in the same order
    for name, make in SUITE.items():
        A = make()
        runs = [extend_bidiagonalization(init_bidiagonalization(A, seed=1), min(A.shape),
                                         ReorthPolicy(mode=m)) for m in (FUSED, LOOP)]
        for x, y in ((runs[0].alphas, runs[1].alphas), (runs[0].betas, runs[1].betas)):
            assert np.abs(np.subtract(x, y)).max() <= 1e-13 * max(1.0, np.abs(x).max()), name


def test_single_pass_policy_still_orthogonal():
    A = SUITE["decaying"]()
    s = extend_bidiagonalization(init_bidiagonalization(A, seed=2), 40,
                                 ReorthPolicy(passes=1))
    assert_invariants(s, A)


def test_errors():
    A = np.ones((4, 3))
    with pytest.raises(ValidationError):
        init_bidiagonalization(A, p0=np.zeros(4))
    with pytest.raises(ContractError):
        init_bidiagonalization(A, p0=np.ones(3))
    with pytest.raises(ContractError):
        extend_bidiagonalization(init_bidiagonalization(A, seed=0), 4)
    with pytest.raises(ValidationError):
        ReorthPolicy(mode="gram")
    with pytest.raises(ValidationError):
        ReorthPolicy(eta=0.0)


def test_seeded_start_is_deterministic():
    A = SUITE["gauss_20x30"]()
    a = extend_bidiagonalization(init_bidiagonalization(A, seed=9), 10)
    b = extend_bidiagonalization(init_bidiagonalization(A, seed=9), 10)
    assert a.alphas == b.alphas and a.betas == b.betas
    assert isinstance(a, GKLState) and a.i == 11


def test_reorth_helper():
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.standard_normal((10, 4)))
    r, nrm = reorth(rng.standard_normal(10), Q)
    assert np.abs(Q.T @ r).max() <= 1e-14 and math.isclose(nrm, np.linalg.norm(r))
    r, nrm = reorth(Q[:, 0] * 2.0, Q)
    assert nrm <= 1e-14
    r, nrm = reorth([3.0, 4.0], np.zeros((2, 0)))
    assert nrm == 5.0


@settings(max_examples=25, deadline=None)
@given(m=st.integers(1, 15), n=st.integers(1, 15), seed=st.integers(0, 10**6),
       rank=st.integers(0, 15))
def test_property_invariants(m, n, seed, rank):
    rng = np.random.default_rng(seed)
    r = min(rank, m, n)
    A = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
    s = extend_bidiagonalization(init_bidiagonalization(A, seed=seed), min(m, n))
    assert_invariants(s, A)
