import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from pspca.bench import gen_collinear
from pspca.core import deflate, fit
from pspca.data import DataMatrix
from pspca.eigen import leading_pc
from pspca.exceptions import DegenerateComponentError, SingularMetricError
from pspca.metrics import (
    component_metrics,
    component_norm,
    evexp,
    pc_correlation,
    rcvexp,
    rcvexp_path,
    response_r2,
    squared_multiple_correlations,
    vexp,
    vexp_q,
)


def data(seed, n=12, p=5):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) @ rng.standard_normal((p, p))
    return X - X.mean(axis=0)


# vexp


def test_vexp_full_span_is_total_variance():
    X = data(0)
    assert vexp(X, X) == pytest.approx(np.sum(X * X), rel=1e-12)


def test_vexp_first_pc_is_lambda1():
    X = data(1)
    pc = leading_pc(X)
    assert vexp(X, pc.scores) == pytest.approx(pc.lambda_, rel=1e-9)


def test_vexp_single_collinear_column_is_trace():
    X = gen_collinear(100, 5).values
    for j in range(5):
        assert vexp(X, X[:, j]) == pytest.approx(1500, abs=1e-8)


def test_vexp_singular_set():
    X = data(2)
    with pytest.raises(SingularMetricError):
        vexp(X, np.column_stack([X[:, 0], 3 * X[:, 0]]))


@given(st.integers(0, 100_000), st.integers(1, 4))
def test_vexp_depends_only_on_span(seed, k):
    rng = np.random.default_rng(seed)
    X = data(seed, n=15, p=6)
    T = X @ rng.standard_normal((6, k))
    G = rng.standard_normal((k, k)) + 3 * np.eye(k)
    assert vexp(X, T @ G) == pytest.approx(vexp(X, T), rel=1e-8)
    assert vexp(X, T) == pytest.approx(oracles.trace_vexp(X, T), rel=1e-8)


# evexp and vexp_q


def test_evexp_first_component_equals_vexp():
    X = data(3)
    a = np.array([1.0, 0, -2, 0, 0.5])
    assert evexp(X, X, a) == pytest.approx(vexp(X, X @ a), rel=1e-12)


def test_evexp_uncorrelated_with_previous_equals_vexp():
    X = data(4)
    t1 = X[:, 0]
    Q = deflate(X, t1)
    # a component built from loadings whose score is orthogonal to t1
    a = np.linalg.lstsq(X, Q[:, 1], rcond=None)[0]
    assert abs((X @ a) @ t1) < 1e-9
    assert evexp(X, Q, a) == pytest.approx(vexp(X, X @ a), rel=1e-9)


def test_sum_of_evexp_matches_trace_formula():
    rng = np.random.default_rng(5)
    X = data(5)
    A = rng.standard_normal((5, 2))
    Q = X
    total = 0.0
    for j in range(2):
        total += evexp(X, Q, A[:, j])
        Q = deflate(Q, Q @ A[:, j])
    assert total == pytest.approx(oracles.trace_vexp(X, X @ A), abs=1e-10 * total)


def test_evexp_degenerate_component():
    X = data(6)
    a = np.array([1.0, 0, 0, 0, 0])
    with pytest.raises(DegenerateComponentError):
        evexp(X, deflate(X, X @ a), a)


def test_evexp_can_exceed_standalone_vexp():
    """Two unit columns with correlation 0.9: after x1, the component x1 - x2
    adds 1 - rho^2 = 0.19 while on its own it explains only 1 - rho = 0.1."""
    rho = 0.9
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0])
    X = np.column_stack([e1, rho * e1 + np.sqrt(1 - rho**2) * e2])
    a2 = np.array([1.0, -1.0])
    Q = deflate(X, X[:, 0])
    extra = evexp(X, Q, a2)
    alone = vexp(X, X @ a2)
    assert extra == pytest.approx(1 - rho**2, rel=1e-12)
    assert alone == pytest.approx(1 - rho, rel=1e-12)
    assert extra > alone
    # the lower bound still holds
    assert vexp_q(Q, X @ a2) <= extra
    assert extra == pytest.approx(
        oracles.trace_vexp(X, X @ np.column_stack([[1.0, 0.0], a2])) - oracles.trace_vexp(X, X[:, 0]), rel=1e-12
    )


def test_vexp_q_orthogonal_is_zero():
    Q = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    assert vexp_q(Q, np.array([0.0, 0.0, 2.0])) == 0.0


def test_vexp_q_pc_is_lambda_max():
    Q = data(7)
    pc = leading_pc(Q)
    assert vexp_q(Q, pc.scores) == pytest.approx(np.linalg.eigvalsh(Q.T @ Q)[-1], rel=1e-9)


def test_vexp_q_zero_vector():
    with pytest.raises(ValueError):
        vexp_q(np.eye(2), np.zeros(2))


@given(st.integers(0, 100_000), st.floats(0.1, 10), st.booleans())
def test_ordering_and_scale_invariance(seed, scale, flip):
    rng = np.random.default_rng(seed)
    X = data(seed, n=15, p=6)
    Q = deflate(X, X @ rng.standard_normal(6))
    a = rng.standard_normal(6)
    c = -scale if flip else scale
    t = X @ a
    assert vexp_q(Q, t) <= evexp(X, Q, a) * (1 + 1e-9)
    assert evexp(X, Q, c * a) == pytest.approx(evexp(X, Q, a), rel=1e-9)
    assert vexp_q(Q, c * t) == pytest.approx(vexp_q(Q, t), rel=1e-9)
    assert vexp(X, c * t) == pytest.approx(vexp(X, t), rel=1e-9)


# rcvexp and correlations


def test_rcvexp_of_exact_pcs_is_one():
    X = data(8, n=30, p=6)
    lam = np.linalg.eigvalsh(X.T @ X)[::-1][:3]
    assert rcvexp(lam, lam) == pytest.approx(1.0)
    np.testing.assert_allclose(rcvexp_path(lam, lam), 1.0)


def test_rcvexp_validation():
    with pytest.raises(ValueError):
        rcvexp([], [])
    with pytest.raises(ValueError):
        rcvexp([1.0], [1.0, 2.0])


def test_rcvexp_at_least_alpha_on_fit():
    X = data(9, n=40, p=10)
    res = fit(X, alpha=0.9, n_components=5)
    assert np.all(res.rcvexp >= 0.9 - 1e-12)
    np.testing.assert_allclose(res.rcvexp, rcvexp_path(res.evexps, res.pc_lambdas))


def test_pc_correlation_trivial_cases():
    u = np.array([1.0, -2.0, 0.5, 0.5])
    assert pc_correlation(u, u) == pytest.approx(1.0)
    assert pc_correlation(np.array([1.0, 1, -1, -1]), np.array([1.0, -1, 1, -1])) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        pc_correlation(np.ones(4), u)


def test_smc_orthogonal_columns():
    X = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    np.testing.assert_allclose(squared_multiple_correlations(X), [0, 0], atol=1e-12)


def test_smc_duplicated_pair():
    X = data(10, n=20, p=3)
    X = np.column_stack([X, X[:, 1]])
    r2 = squared_multiple_correlations(X)
    assert r2[1] == 1.0 and r2[3] == 1.0
    assert r2[0] < 1.0


def test_smc_matches_regressions():
    X = data(11, n=30, p=5)
    r2 = squared_multiple_correlations(X)
    for j in range(5):
        others = np.delete(X, j, axis=1)
        fitted = others @ oracles.normal_equations(others, X[:, j])
        assert r2[j] == pytest.approx(fitted @ fitted / (X[:, j] @ X[:, j]), rel=1e-9)


def test_smc_wide_data_and_single_column():
    X = data(12, n=4, p=6)
    np.testing.assert_allclose(squared_multiple_correlations(X), 1.0)
    assert squared_multiple_correlations(X[:, :1])[0] == 0.0


def test_response_r2():
    X = data(13, n=30, p=4)
    T = X[:, :2]
    assert response_r2(T, T[:, 0]) == pytest.approx(1.0)
    z = np.random.default_rng(0).standard_normal(30)
    z -= z.mean()
    y = z - T @ oracles.normal_equations(T, z)
    assert response_r2(T, y) == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(SingularMetricError):
        response_r2(np.column_stack([T[:, 0], T[:, 0]]), T[:, 1])


# norms


def test_component_norm_first_eigenvector():
    X = data(14)
    S = X.T @ X
    w, V = np.linalg.eigh(S)
    norm, rel = component_norm(S, V[:, -1])
    assert norm == pytest.approx(w[-1], rel=1e-9) and rel == pytest.approx(1.0, rel=1e-9)


def test_component_norm_collinear_examples():
    X = gen_collinear(100, 5).values
    norm, rel = component_norm(X.T @ X, np.eye(5)[4])
    assert norm == pytest.approx(500) and rel == pytest.approx(0.33, abs=0.005)
    C = DataMatrix.from_array(X, scaling="correlation").values
    norm, rel = component_norm(C.T @ C, np.array([1.0, 1, 0, 0, 0]) / np.sqrt(2))
    assert norm == pytest.approx(2.0) and rel == pytest.approx(0.4)


def test_component_norm_requires_unit_loadings():
    with pytest.raises(ValueError):
        component_norm(np.eye(2), np.array([1.0, 1.0]))


def test_component_metrics_bundle():
    X = data(15, n=20, p=5)
    pc = leading_pc(X)
    a = np.array([0.0, 1.0, 0.0, 0.5, 0.0])
    m = component_metrics(X, X, a, pc.scores, pc.lambda_)
    assert m.cardinality == 2
    assert m.evexp == pytest.approx(m.vexp) and m.vexp_q == pytest.approx(m.vexp)
    assert m.evexp <= pc.lambda_
