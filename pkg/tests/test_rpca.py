import numpy as np
import pytest

from oracles import dense_svt
from psvd import ContractError, RpcaOptions, ValidationError, rpca_ialm, soft_threshold, svt
from psvd.rpca import BLWS, THRESHOLD, spectral_norm_estimate, svt_detail


def planted_rpca(seed, m=50, n=50, rank=2, frac=0.05):
    rng = np.random.default_rng(seed)
    L0 = rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))
    E0 = np.zeros((m, n))
    idx = rng.choice(m * n, int(round(frac * m * n)), replace=False)
    E0.flat[idx] = rng.choice([-1.0, 1.0], idx.size)
    return L0, E0


def test_soft_threshold_frozen():
    assert soft_threshold(5.0, 2.0) == 3.0
    assert soft_threshold(-1.0, 2.0) == 0.0
    assert soft_threshold(-5.0, 2.0) == -3.0
    x = np.random.default_rng(0).standard_normal(7)
    np.testing.assert_array_equal(soft_threshold(x, 0.0), x)
    with pytest.raises(ContractError):
        soft_threshold(1.0, -0.1)


@pytest.mark.parametrize("backend", [THRESHOLD, BLWS])
def test_svt_diagonal_frozen(backend):
    X, _ = svt(np.diag([3.0, 1.0]), 2.0, backend=backend)
    np.testing.assert_allclose(X, np.diag([1.0, 0.0]), atol=1e-14)
    X, _ = svt(np.diag([3.0, 1.0]), 5.0, backend=backend)
    assert np.all(X == 0.0)


@pytest.mark.parametrize("backend", [THRESHOLD, BLWS])
def test_svt_matches_dense(backend):
    A = np.random.default_rng(1).standard_normal((40, 30))
    tau = float(np.median(np.linalg.svd(A, compute_uv=False)))
    X, warm = svt(A, tau, backend=backend)
    assert np.linalg.norm(X - dense_svt(A, tau)) <= 1e-8 * np.linalg.norm(A)
    assert (warm is None) == (backend == THRESHOLD)


def test_svt_threshold_backend_passes_warm_through():
    sentinel = object()
    _, warm = svt(np.eye(3), 0.5, backend=THRESHOLD, warm=sentinel)
    assert warm is sentinel


def test_svt_blws_warm_chain():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((40, 30))
    tau = 4.0
    r1 = svt_detail(A, tau, backend=BLWS)
    r2 = svt_detail(A + 1e-4 * rng.standard_normal((40, 30)), tau, backend=BLWS, warm=r1.warm)
    assert r2.matvecs < r1.matvecs
    assert r1.warm.rank_hint == r1.rank + 1


def test_svt_errors():
    with pytest.raises(ContractError):
        svt(np.eye(2), 0.0)
    with pytest.raises(ValidationError):
        svt(np.eye(2), 1.0, backend="dense")


def test_spectral_norm_estimate():
    A = np.diag([4.0, 1.0, 0.5])
    assert abs(spectral_norm_estimate(A) - 4.0) < 1e-6
    assert spectral_norm_estimate(np.zeros((3, 3))) == 0.0


def test_zero_input():
    res = rpca_ialm(np.zeros((6, 5)))
    assert res.iterations == 1 and res.converged
    assert np.all(res.L == 0) and np.all(res.E == 0)


@pytest.mark.parametrize("backend", [THRESHOLD, BLWS])
def test_rank_one_without_corruption(backend):
    # a fixed draw: on a few percent of random rank-one inputs the
    # feasibility-only stopping rule ends at a feasible but non-optimal point
    rng = np.random.default_rng(0)
    D = np.outer(rng.standard_normal(30), rng.standard_normal(25))
    res = rpca_ialm(D, RpcaOptions(backend=backend))
    assert res.converged
    assert np.linalg.norm(res.L - D) <= 1e-6 * np.linalg.norm(D)
    assert np.linalg.norm(res.E) <= 1e-6 * np.linalg.norm(D)


@pytest.mark.parametrize("backend", [THRESHOLD, BLWS])
def test_planted_recovery(backend):
    L0, E0 = planted_rpca(0)
    res = rpca_ialm(L0 + E0, RpcaOptions(backend=backend))
    assert res.converged and res.iterations <= 200
    assert np.linalg.norm(res.L - L0) <= 1e-4 * np.linalg.norm(L0)
    big = np.abs(E0) > 0
    assert np.all(np.abs(res.E[big]) > 1e-4)
    # history is consistent with the stopping rule
    h = res.history
    assert h[-1]["residual"] <= 1e-7 and len(h) == res.iterations
    mus = [x["mu"] for x in h]
    assert all(b >= a for a, b in zip(mus, mus[1:]))
    assert np.linalg.norm(L0 + E0 - res.L - res.E) <= 1e-7 * np.linalg.norm(L0 + E0)


def test_max_iter_flags_unconverged():
    L0, E0 = planted_rpca(1)
    res = rpca_ialm(L0 + E0, RpcaOptions(max_iter=3))
    assert not res.converged and res.iterations == 3


def test_options_validation():
    for bad in (dict(rho=1.0), dict(tol=0.0), dict(max_iter=0), dict(backend="x"),
                dict(lam=-1.0), dict(lam="big")):
        with pytest.raises(ValidationError):
            rpca_ialm(np.eye(3), RpcaOptions(**bad))
    with pytest.raises(ValidationError):
        rpca_ialm(np.array([[1.0, np.inf]]))
