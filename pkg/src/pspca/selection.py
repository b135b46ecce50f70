"""Greedy forward selection of columns explaining a target vector.

This is a QR decomposition of the data columns in which the pivot at each
step is the column whose residual best explains what is left of the target.
Only rank-one updates are needed per step, so a step costs ``O(np)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import SingularBlockError

DEFAULT_COLLINEARITY_TOL = 1e-10
MAX_CARD_BUDGET = 2000
_TIE_TOL = 1e-12
_REACH_SLACK = 1e-12
_MIN_GAIN = 1e-14
_DRIFT_TOL = 1e-8
_REFRESH_RATIO = 1e-6


class SelectionState:
    """Incremental orthogonalization of a growing block of columns of ``X``.

    Attributes
    ----------
    selected : list of int
        Column indices in order of entry.
    basis : ndarray of shape (n, k)
        Orthonormal basis of the selected columns.
    r_factor : ndarray of shape (k, k)
        Upper-triangular factor with ``X[:, selected] == basis @ r_factor``.
    target_residual : ndarray of shape (n,)
        Target minus its projection on the selected columns.
    explained : float
        Squared norm of the projected target.
    residual_col_norms : ndarray of shape (p,)
        Squared norms of every column after projection on the block.
    """

    def __init__(self, X, target=None, capacity=None, collinearity_tol=DEFAULT_COLLINEARITY_TOL):
        X = np.asarray(X, dtype=float)
        n, p = X.shape
        self.X = X
        self.collinearity_tol = collinearity_tol
        cap = max(1, min(n, p) if capacity is None else int(capacity))
        self._basis = np.zeros((n, cap))
        self._r = np.zeros((cap, cap))
        self.selected = []
        self.col_norms = np.einsum("ij,ij->j", X, X)
        self.residual_col_norms = self.col_norms.copy()
        self.excluded = self.col_norms <= 0.0
        if target is None:
            target = np.zeros(n)
        self.target = np.asarray(target, dtype=float)
        self.target_norm = float(self.target @ self.target)
        self.target_residual = self.target.copy()
        self.explained = 0.0

    @property
    def k(self):
        return len(self.selected)

    @property
    def basis(self):
        return self._basis[:, : self.k]

    @property
    def r_factor(self):
        return self._r[: self.k, : self.k]

    @classmethod
    def from_block(cls, X, indices, target=None, collinearity_tol=DEFAULT_COLLINEARITY_TOL):
        """State for a given ordered block, e.g. a prefix of a selection path."""
        state = cls(X, target, capacity=len(indices), collinearity_tol=collinearity_tol)
        for j in indices:
            if state.residual_col_norms[j] <= collinearity_tol * state.col_norms[j]:
                raise SingularBlockError(f"column {j} is collinear with the block")
            state.add(int(j))
        return state

    def _orthogonalize(self, x):
        B = self.basis
        if self.k == 0:
            return x.copy(), np.zeros(0)
        coef = B.T @ x
        z = x - B @ coef
        # second Gram-Schmidt pass; third one only on measurable drift
        h = B.T @ z
        z -= B @ h
        coef += h
        zn = np.linalg.norm(z)
        if zn > 0:
            h = B.T @ z
            if np.abs(h).max() > _DRIFT_TOL * zn:
                z -= B @ h
                coef += h
        return z, coef

    def add(self, j):
        """Append column ``j`` and update every running quantity. Returns the gain."""
        k = self.k
        if k >= self._basis.shape[1]:
            self._basis = np.hstack([self._basis, np.zeros_like(self._basis)])
            r = np.zeros((2 * k, 2 * k))
            r[:k, :k] = self._r[:k, :k]
            self._r = r
        z, coef = self._orthogonalize(self.X[:, j])
        zn = float(np.linalg.norm(z))
        if zn == 0.0:
            raise SingularBlockError(f"column {j} lies in the span of the block")
        q = z / zn
        self._basis[:, k] = q
        self._r[:k, k] = coef
        self._r[k, k] = zn

        proj = float(q @ self.target_residual)
        self.target_residual -= proj * q
        gain = proj * proj
        self.explained += gain

        w = self.X.T @ q
        d = self.residual_col_norms
        d -= w * w
        self.selected.append(j)
        self.excluded[j] = True
        d[j] = 0.0

        # downdated norms lose accuracy near collinearity: recompute those exactly
        low = np.flatnonzero(~self.excluded & (d < _REFRESH_RATIO * self.col_norms))
        if low.size:
            B = self.basis
            Z = self.X[:, low] - B @ (B.T @ self.X[:, low])
            Z -= B @ (B.T @ Z)
            d[low] = np.einsum("ij,ij->j", Z, Z)
        np.maximum(d, 0.0, out=d)
        self.excluded |= d <= self.collinearity_tol * self.col_norms
        return gain

    def gains(self):
        """Increment of explained target variance for each admissible candidate (-inf otherwise)."""
        c = self.X.T @ self.target_residual
        out = np.full(self.X.shape[1], -np.inf)
        ok = ~self.excluded
        out[ok] = c[ok] ** 2 / self.residual_col_norms[ok]
        return out

    def prefix(self, k):
        """State restricted to the first ``k`` selected columns (target is reset)."""
        return SelectionState.from_block(self.X, self.selected[:k], collinearity_tol=self.collinearity_tol)


@dataclass(frozen=True)
class SelectionResult:
    indices: list
    r2_path: np.ndarray
    achieved_r2: float
    reached: bool
    state: SelectionState


def default_max_card(n, p):
    return max(1, min(n - 1, p, MAX_CARD_BUDGET))


def forward_select(
    X,
    target,
    alpha: float,
    max_card: int | None = None,
    collinearity_tol: float = DEFAULT_COLLINEARITY_TOL,
) -> SelectionResult:
    """Add columns of ``X`` greedily until they explain ``alpha`` of ``target``.

    At each step the admissible column whose entry most increases the R^2
    of ``target`` enters; ties within ``1e-12 * ||target||^2`` go to the
    lowest index. A column whose residual squared norm drops below
    ``collinearity_tol`` times its original squared norm is never
    considered again.

    If candidates run out before ``alpha`` is reached the result has
    ``reached=False`` and carries the best R^2 found.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if max_card is None:
        max_card = default_max_card(n, p)
    state = SelectionState(X, target, capacity=min(max_card, n, p), collinearity_tol=collinearity_tol)
    uu = state.target_norm
    if uu == 0.0:
        raise ValueError("target must be nonzero")

    r2_path = []
    r2 = 0.0
    while state.k < max_card and r2 < alpha - _REACH_SLACK:
        g = state.gains()
        best = g.max()
        if not np.isfinite(best) or best <= _MIN_GAIN * uu:
            break
        j = int(np.flatnonzero(g >= best - _TIE_TOL * uu)[0])
        state.add(j)
        r2 = state.explained / uu
        r2_path.append(r2)

    return SelectionResult(
        indices=list(state.selected),
        r2_path=np.array(r2_path),
        achieved_r2=r2,
        reached=r2 >= alpha - _REACH_SLACK,
        state=state,
    )


def project_onto_block(state: SelectionState, target):
    """Least-squares coefficients of ``target`` on the block and the fitted vector.

    The coefficients solve the normal equations by back-substitution through
    the triangular factor, never by inversion.
    """
    if state.k == 0:
        raise ValueError("empty block")
    R = state.r_factor
    pivots = np.diag(R) ** 2
    norms = state.col_norms[state.selected]
    if np.any(pivots <= state.collinearity_tol * norms):
        raise SingularBlockError("block is numerically rank deficient")
    target = np.asarray(target, dtype=float)
    loadings = linalg.solve_triangular(R, state.basis.T @ target, lower=False)
    fitted = state.X[:, state.selected] @ loadings
    return loadings, fitted
