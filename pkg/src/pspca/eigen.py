"""Power-method eigensolvers.

Only leading eigenpairs are ever needed: the first PC of the deflated data at
each step, and the leading generalized eigenvector of the LS SPCA problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import linalg

from .exceptions import ConvergenceError, SingularMetricError

DEFAULT_TOL = 1e-9
RITZ_EVERY = 20

Operator = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class EigenPair:
    vector: np.ndarray
    value: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class PrincipalComponent:
    """Leading PC of a matrix: ``scores = Q @ loadings`` and ``lambda_ = scores @ scores``."""

    scores: np.ndarray
    loadings: np.ndarray
    lambda_: float
    iterations: int = 0


def default_max_iter(d):
    return 10 * d + 1000


def fix_sign(v):
    """Flip ``v`` so its largest-magnitude entry is positive (first one on ties)."""
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _ritz_refine(op, x, y):
    """Top Ritz pair of span{x, Mx, M^2 x}, given ``y = Mx``.

    Returns ``(z, residual)`` with ``residual = ||Mz - theta z||``, or
    ``None`` when the Krylov space collapses to ``x``. The Ritz value is
    never below the Rayleigh quotient of ``x``.
    """
    V, MV = [x], [y]
    w = y
    for _ in range(2):
        for _pass in range(2):
            for v in V:
                w = w - (v @ w) * v
        wn = np.linalg.norm(w)
        if wn <= 1e-12 * np.linalg.norm(y):
            break
        v = w / wn
        mv = op(v)
        V.append(v)
        MV.append(mv)
        w = mv
    if len(V) == 1:
        return None
    V, MV = np.column_stack(V), np.column_stack(MV)
    H = V.T @ MV
    vals, vecs = np.linalg.eigh(0.5 * (H + H.T))
    h = vecs[:, -1]
    z, mz = V @ h, MV @ h
    zn = np.linalg.norm(z)
    return z / zn, float(np.linalg.norm(mz - vals[-1] * z)) / zn


def _as_operator(apply):
    if callable(apply):
        return apply
    M = np.asarray(apply, dtype=float)
    return M.__matmul__


def leading_eigenpair(
    apply: Operator,
    init: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
) -> EigenPair:
    """Leading eigenpair of a symmetric PSD operator by power iteration.

    Iterates until ``||M v - value v|| <= tol * value``. Every
    ``RITZ_EVERY`` steps the top Ritz vector of a three-dimensional Krylov
    space replaces the iterate when its residual is smaller, which keeps
    near-degenerate leading eigenvalues from stalling convergence. ``apply`` is either a
    matrix or a callable computing the matrix-vector product.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` iterations; the exception carries the last iterate.
    """
    op = _as_operator(apply)
    x = np.array(init, dtype=float)
    norm = np.linalg.norm(x)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("init must be a nonzero finite vector")
    x /= norm
    if max_iter is None:
        max_iter = default_max_iter(x.size)

    lam_prev = -np.inf
    lam, res = 0.0, np.inf
    for it in range(1, max_iter + 1):
        y = op(x)
        ynorm = np.linalg.norm(y)
        if ynorm == 0.0:
            return EigenPair(fix_sign(x), 0.0, it, 0.0)
        lam = float(x @ y)
        res = float(np.linalg.norm(y - lam * x))
        # Rayleigh quotients of power iterates never decrease for PSD operators
        assert lam >= lam_prev - 1e-8 * abs(lam), "Rayleigh quotient decreased"
        if res <= tol * lam:
            return EigenPair(fix_sign(x), lam, it, res)
        lam_prev = lam
        if it % RITZ_EVERY == 0:
            # with a tiny leading gap the Ritz step can amplify leftover lower
            # components, so it is kept only when it lowers the residual
            ritz = _ritz_refine(op, x, y)
            if ritz is not None and ritz[1] < res:
                x = ritz[0]
                continue
        x = y / ynorm

    raise ConvergenceError(
        f"power iteration did not reach relative residual {tol:g} in {max_iter} steps "
        f"(last {res / lam if lam > 0 else np.inf:.3g})",
        best=EigenPair(fix_sign(x), lam, max_iter, res),
    )


def _largest_column(Q):
    sq = np.einsum("ij,ij->j", Q, Q)
    return int(np.argmax(sq)), sq


def leading_pc(
    Q: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    side: str = "auto",
    gram: np.ndarray | None = None,
) -> PrincipalComponent:
    """First principal component of ``Q``.

    Power iteration runs on the smaller Gram matrix: ``Q'Q`` when ``p <= n``
    and ``QQ'`` otherwise (``side="auto"``). ``side`` may force
    ``"variables"`` (``Q'Q``) or ``"scores"`` (``QQ'``). A precomputed Gram
    matrix for the chosen side can be passed as ``gram``.

    The iteration starts from the largest-norm column of ``Q``.
    """
    Q = np.asarray(Q, dtype=float)
    n, p = Q.shape
    k, sq = _largest_column(Q)
    if sq[k] == 0.0:
        raise ValueError("Q is the zero matrix")
    if side == "auto":
        side = "variables" if p <= n else "scores"

    if side == "variables":
        G = Q.T @ Q if gram is None else gram
        pair = leading_eigenpair(G, G[:, k], tol=tol, max_iter=max_iter)
        v = pair.vector
    elif side == "scores":
        G = Q @ Q.T if gram is None else gram
        pair = leading_eigenpair(G, Q[:, k], tol=tol, max_iter=max_iter)
        v = Q.T @ pair.vector
        v = fix_sign(v / np.linalg.norm(v))
    else:
        raise ValueError(f"unknown side {side!r}")

    u = Q @ v
    return PrincipalComponent(scores=u, loadings=v, lambda_=float(u @ u), iterations=pair.iterations)


def leading_generalized_eigenpair(
    A: np.ndarray,
    B: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
) -> EigenPair:
    """Largest ``gamma`` and ``a`` with ``A a = gamma B a``, normalised so ``a'Ba = 1``.

    ``B = LL'`` is factorized once; power iteration then runs on the
    symmetric matrix ``L^-1 A L^-T``, which has the spectrum of ``B^-1 A``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    c = B.shape[0]
    try:
        L = linalg.cholesky(B, lower=True)
    except linalg.LinAlgError:
        raise SingularMetricError("metric matrix is not positive definite") from None
    pivots = np.diag(L) ** 2
    if pivots.min() <= 1e-10 * np.trace(B) / c:
        raise SingularMetricError(
            f"metric matrix numerically singular (smallest pivot {pivots.min():.3g})"
        )

    M = linalg.solve_triangular(L, A, lower=True)
    C = linalg.solve_triangular(L, M.T, lower=True)
    C = 0.5 * (C + C.T)

    k, sq = _largest_column(C)
    if sq[k] == 0.0:
        a = linalg.solve_triangular(L.T, np.eye(c)[:, 0], lower=False)
        return EigenPair(fix_sign(a), 0.0, 0, 0.0)
    pair = leading_eigenpair(C, C[:, k], tol=tol, max_iter=max_iter)
    a = fix_sign(linalg.solve_triangular(L.T, pair.vector, lower=False))
    gamma = pair.value
    residual = float(np.linalg.norm(A @ a - gamma * (B @ a)))
    return EigenPair(a, gamma, pair.iterations, residual)
