import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from pspca.baseline import (
    CurvePoint,
    baseline_curve,
    comparison_curves,
    crossing_cardinalities,
    optimal_norm_subset,
    threshold_spca,
)
from pspca.bench import gen_collinear
from pspca.eigen import leading_pc
from pspca.exceptions import SizeError
from pspca.selection import forward_select


def data(seed, n=30, p=8):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) @ rng.standard_normal((p, p))
    return X - X.mean(axis=0)


def duplicated_fixture():
    """Rank-3 data of correlated factors; the first is copied four times, the second twice."""
    rng = np.random.default_rng(0)
    F = rng.standard_normal((60, 3))
    F, _ = np.linalg.qr(F - F.mean(axis=0))
    Z = F @ np.array([[1.0, 0.6, 0.3], [0.0, 0.8, 0.3], [0.0, 0.0, 0.9]])
    return Z[:, [0, 0, 0, 0, 1, 1, 2]]


def test_threshold_full_cardinality_is_pc():
    X = data(0)
    pc = leading_pc(X)
    nc = threshold_spca(pc.loadings, X.shape[1], X)
    assert nc.rel_norm == pytest.approx(1.0, rel=1e-9)
    np.testing.assert_allclose(nc.unit_loadings, pc.loadings, atol=1e-12)


def test_threshold_single_variable():
    X = data(1)
    v = leading_pc(X).loadings
    nc = threshold_spca(v, 1, X)
    assert nc.indices == [int(np.argmax(np.abs(v)))]
    assert abs(nc.unit_loadings[0]) == 1.0


def test_threshold_collinear_two_variables():
    X = gen_collinear(100, 5).values
    nc = threshold_spca(leading_pc(X).loadings, 2, X)
    assert nc.indices == [3, 4]
    assert nc.norm == pytest.approx(900, abs=1e-8)
    assert nc.rel_norm == pytest.approx(0.60, abs=0.005)
    best, idx = oracles.exhaustive_norm(X.T @ X, 2)
    assert idx == nc.indices and best == pytest.approx(nc.norm, rel=1e-10)


def test_threshold_ties_lowest_index():
    X = np.eye(4)
    nc = threshold_spca(np.array([0.5, -0.5, 0.5, 0.5]), 2, X, lambda1=1.0)
    assert nc.indices == [0, 1]


def test_threshold_bad_cardinality():
    with pytest.raises(ValueError):
        threshold_spca(np.ones(3), 0, np.eye(3))


def test_optimal_subset_table_values():
    X = gen_collinear(100, 5).values
    S = X.T @ X
    norms = [optimal_norm_subset(S, c).norm for c in range(1, 6)]
    np.testing.assert_allclose(norms, [500, 900, 1200, 1400, 1500], atol=1e-8)
    nc = optimal_norm_subset(S, 2)
    assert nc.indices == [3, 4]
    np.testing.assert_allclose(sorted(np.abs(nc.unit_loadings)), [0.67, 0.75], atol=0.005)


@given(st.integers(0, 100_000))
def test_optimal_subset_matches_oracle_and_bounds_threshold(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(2, 9))
    X = data(seed, n=20, p=p)
    S = X.T @ X
    v = leading_pc(X).loadings
    lam = np.linalg.eigvalsh(S)[-1]
    prev = 0.0
    for c in range(1, p + 1):
        nc = optimal_norm_subset(S, c)
        ref, _ = oracles.exhaustive_norm(S, c)
        assert nc.norm == pytest.approx(ref, rel=1e-9)
        assert nc.norm >= prev - 1e-9 * lam
        assert threshold_spca(v, c, X).norm <= nc.norm * (1 + 1e-9)
        prev = nc.norm
    assert prev == pytest.approx(lam, rel=1e-9)


def test_optimal_subset_size_guard():
    with pytest.raises(SizeError):
        optimal_norm_subset(np.eye(21), 2)
    with pytest.raises(ValueError):
        optimal_norm_subset(np.eye(3), 4)


def test_baseline_curve_full_cardinality():
    X = data(2)
    pt = baseline_curve(X, [X.shape[1]])[0]
    lam = np.linalg.eigvalsh(X.T @ X)[-1]
    assert pt.norm == pytest.approx(lam, rel=1e-9)
    assert (pt.rel_norm, pt.rcvexp, pt.pc_correlation) == pytest.approx((1, 1, 1), rel=1e-9)


def test_norm_and_variance_explained_diverge():
    X = gen_collinear(100, 5).values
    pt = baseline_curve(X, [1])[0]
    assert pt.rel_norm == pytest.approx(0.33, abs=0.005)
    assert pt.rcvexp == pytest.approx(1.0, abs=1e-12)
    assert pt.rel_norm < 0.5 and pt.rcvexp > 0.95


def test_baseline_curve_plateaus_on_duplicates():
    X = duplicated_fixture()
    pts = baseline_curve(X, range(1, 8))
    # the largest loadings sit on the four copies of the first factor:
    # adding copies adds norm but no variance explained
    r = [pt.rcvexp for pt in pts]
    norms = [pt.norm for pt in pts]
    assert max(r[:4]) - min(r[:4]) < 1e-12
    assert norms[3] > norms[0]


def test_comparison_on_duplicated_fixture():
    X = duplicated_fixture()
    pts = comparison_curves(X, max_card=7)
    cross = crossing_cardinalities(pts)
    assert cross["projection"] is not None and cross["projection"] <= 3
    at_rank = [q for q in pts if q.method == "threshold" and q.cardinality == 3][0]
    assert at_rank.rcvexp < 0.999


def test_projection_curve_beats_its_r2():
    X = data(3, n=40, p=10)
    pts = [q for q in comparison_curves(X, 10, methods=("projection",))]
    path = forward_select(X, leading_pc(X).scores, 1.0, max_card=10).r2_path
    for q in pts:
        assert q.rcvexp >= path[q.cardinality - 1] - 1e-12


def test_threshold_full_row_in_curves():
    X = data(4, n=40, p=6)
    last = [q for q in comparison_curves(X, 6) if q.method == "threshold"][-1]
    assert last.cardinality == 6 and last.rel_norm == pytest.approx(1.0, rel=1e-9)


def test_crossing_cardinalities():
    pts = [
        CurvePoint("a", 1, 1, 0.2, 0.5, 0.7),
        CurvePoint("a", 2, 1, 0.2, 0.9995, 0.9),
        CurvePoint("a", 3, 1, 0.2, 0.9999, 0.9),
        CurvePoint("b", 1, 1, 0.2, 0.99, 0.9),
    ]
    assert crossing_cardinalities(pts) == {"a": 2, "b": None}
