"""Variance-explained measures and component diagnostics.

All quadratic forms go through ``n``-vectors (``X'Xa`` is never formed as a
``p x p`` product), so each metric is ``O(np)`` per component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigen import leading_eigenpair
from .exceptions import DegenerateComponentError, SingularMetricError

_SINGULAR_TOL = 1e-10
_DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class ComponentMetrics:
    vexp: float
    evexp: float
    vexp_q: float
    norm: float
    rel_norm: float
    pc_correlation: float
    cardinality: int


def _orthonormal_span(T):
    T = np.asarray(T, dtype=float)
    if T.ndim == 1:
        T = T[:, None]
    Qt, R = np.linalg.qr(T)
    d = np.abs(np.diag(R))
    scale = np.linalg.norm(T, axis=0)
    if np.any(d <= _SINGULAR_TOL * np.maximum(scale, np.finfo(float).tiny)):
        raise SingularMetricError("component set is numerically rank deficient")
    return Qt


def vexp(X, T) -> float:
    """Variance of ``X`` explained by the span of the columns of ``T``.

    Equal to ``trace(X'T(T'T)^-1 T'X)``, evaluated through an orthonormal
    basis of ``T``.
    """
    X = np.asarray(X, dtype=float)
    Qt = _orthonormal_span(T)
    P = Qt.T @ X
    return float(np.einsum("ij,ij->", P, P))


def evexp(X, Q, loadings) -> float:
    """Extra variance explained by the component ``X @ loadings``.

    ``Q`` is ``X`` deflated of the components already in the model. The
    component's residual on them is ``Q @ loadings``, and the extra variance
    is ``||X'(Qa)||^2 / ||Qa||^2``.
    """
    X = np.asarray(X, dtype=float)
    s = np.asarray(Q, dtype=float) @ np.asarray(loadings, dtype=float)
    ss = float(s @ s)
    scale = float(np.einsum("ij,ij->", X, X))
    if ss <= _DEGENERATE_TOL * scale * float(np.dot(loadings, loadings)):
        raise DegenerateComponentError("component is explained by its predecessors")
    w = X.T @ s
    return float(w @ w) / ss


def vexp_q(Q, t) -> float:
    """Variance of ``Q`` explained by ``t``: ``t'QQ't / t't``."""
    t = np.asarray(t, dtype=float)
    tt = float(t @ t)
    if tt == 0.0:
        raise ValueError("t must be nonzero")
    w = np.asarray(Q, dtype=float).T @ t
    return float(w @ w) / tt


def rcvexp(evexps, pc_lambdas):
    """Relative cumulative variance explained of a prefix of components."""
    evexps = np.asarray(evexps, dtype=float)
    pc_lambdas = np.asarray(pc_lambdas, dtype=float)
    if evexps.size == 0 or evexps.shape != pc_lambdas.shape:
        raise ValueError("need matching, nonempty evexp and eigenvalue sequences")
    return float(evexps.sum() / pc_lambdas.sum())


def rcvexp_path(evexps, pc_lambdas):
    """rCvexp for every prefix length."""
    return np.cumsum(evexps) / np.cumsum(pc_lambdas)


def pc_correlation(t, u) -> float:
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    tc, uc = t - t.mean(), u - u.mean()
    den = np.linalg.norm(tc) * np.linalg.norm(uc)
    if den == 0.0:
        raise ValueError("correlation of a constant vector")
    return float(np.clip(tc @ uc / den, -1.0, 1.0))


def squared_multiple_correlations(X) -> np.ndarray:
    """R^2 of each column regressed on all the others.

    Columns lying in the span of the others (including all-zero columns)
    get R^2 = 1.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    norms = np.einsum("ij,ij->j", X, X)
    out = np.ones(p)
    if p == 1:
        out[:] = 0.0 if norms[0] > 0 else 1.0
        return out
    Qx, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if p <= n and diag.min() > 1e-10 * np.sqrt(norms.max()):
        # full column rank: 1 - R_j^2 = 1 / (s_jj * (S^-1)_jj), (S^-1)_jj = ||row j of R^-1||^2
        Rinv = np.linalg.solve(R, np.eye(p))
        sinv_diag = np.einsum("ij,ij->i", Rinv, Rinv)
        return np.clip(1.0 - 1.0 / (norms * sinv_diag), 0.0, 1.0)
    for j in range(p):
        if norms[j] == 0.0:
            continue
        others = np.delete(X, j, axis=1)
        coef, *_ = np.linalg.lstsq(others, X[:, j], rcond=None)
        resid = X[:, j] - others @ coef
        rss = float(resid @ resid)
        out[j] = 1.0 if rss <= 1e-10 * norms[j] else 1.0 - rss / norms[j]
    return out


def response_r2(scores, y) -> float:
    """OLS R^2 of a centred response on the given score vectors."""
    y = np.asarray(y, dtype=float)
    y = y - y.mean()
    yy = float(y @ y)
    if yy == 0.0:
        raise ValueError("response has zero variance")
    Qt = _orthonormal_span(scores)
    fitted = Qt.T @ y
    return float(fitted @ fitted) / yy


def leading_eigenvalue(S) -> float:
    S = np.asarray(S, dtype=float)
    k = int(np.argmax(np.einsum("ij,ij->j", S, S)))
    return leading_eigenpair(S, S[:, k]).value


def component_norm(S, a, lambda1=None):
    """Norm ``a'Sa`` of a unit-loadings component and its ratio to ``lambda1``.

    ``lambda1`` defaults to the largest eigenvalue of ``S``.
    """
    S = np.asarray(S, dtype=float)
    a = np.asarray(a, dtype=float)
    if abs(np.linalg.norm(a) - 1.0) > 1e-9:
        raise ValueError("loadings must have unit norm")
    norm = float(a @ S @ a)
    if lambda1 is None:
        lambda1 = leading_eigenvalue(S)
    return norm, norm / lambda1


def component_norm_from_data(X, a, lambda1):
    """As :func:`component_norm` with ``S = X'X``, evaluated in score space."""
    a = np.asarray(a, dtype=float)
    t = np.asarray(X, dtype=float) @ (a / np.linalg.norm(a))
    norm = float(t @ t)
    return norm, norm / lambda1


def component_metrics(X, Q, loadings, pc_scores, lambda1) -> ComponentMetrics:
    """All diagnostics of one component ``X @ loadings``."""
    loadings = np.asarray(loadings, dtype=float)
    t = np.asarray(X, dtype=float) @ loadings
    norm, rel = component_norm_from_data(X, loadings, lambda1)
    return ComponentMetrics(
        vexp=vexp(X, t),
        evexp=evexp(X, Q, loadings),
        vexp_q=vexp_q(Q, t),
        norm=norm,
        rel_norm=rel,
        pc_correlation=pc_correlation(t, pc_scores),
        cardinality=int(np.count_nonzero(loadings)),
    )
