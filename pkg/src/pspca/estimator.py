"""scikit-learn estimator wrapping the sequential sparse component fit."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassNamePrefixFeaturesOutMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from . import core
from .data import RawTable, preprocess
from .eigen import DEFAULT_TOL
from .selection import DEFAULT_COLLINEARITY_TOL


class ProjectionSPCA(ClassNamePrefixFeaturesOutMixin, TransformerMixin, BaseEstimator):
    """Sparse principal components explaining a guaranteed share of variance.

    Each component is built from a small block of the original variables
    chosen so that the block explains at least ``alpha`` of the variance of
    the current principal component. Its extra variance explained is then at
    least ``alpha`` times that PC's variance.

    Parameters
    ----------
    alpha : float, default=0.95
        Required fraction, in (0, 1], of each PC's variance explained by the
        selected block.
    n_components : int, default=10
        Number of components. Ignored when ``vexp_fraction`` is set.
    vexp_fraction : float, default=None
        Stop once the components explain this fraction of total variance.
    method : {"projection", "lsspca"}, default="projection"
        Component built from each block: the projection of the PC on the
        block, or the LS SPCA component (largest variance explained of the
        deflated data within the block).
    scale : bool, default=False
        Scale centred columns to unit norm (correlation-matrix analysis).
    tol : float, default=1e-9
        Relative residual tolerance of the power method.
    max_iter : int, default=None
        Power-method iteration cap; ``None`` scales with the dimension.
    collinearity_tol : float, default=1e-10
        Relative residual norm below which a candidate variable is treated
        as collinear with the block and excluded.
    max_card : int, default=None
        Cardinality cap per component.
    eigen_side : {"auto", "variables", "scores"}, default="auto"
        Gram matrix used by the power method.

    Attributes
    ----------
    components_ : ndarray of shape (n_components_, n_features)
        Sparse loadings; each row gives a unit-norm score vector on the
        training data.
    explained_variance_ : ndarray of shape (n_components_,)
        Extra variance explained by each component.
    explained_variance_ratio_ : ndarray of shape (n_components_,)
        ``explained_variance_`` over the total variance.
    rcvexp_ : ndarray of shape (n_components_,)
        Cumulative variance explained relative to as many PCs.
    cardinality_ : ndarray of shape (n_components_,)
    selected_indices_ : list of list of int
    pc_lambdas_ : ndarray of shape (n_components_,)
        Variance of the PC approximated at each step.
    mean_, scale_ : ndarray of shape (n_features,)
    stop_reason_ : str
    n_iter_ : int
        Largest number of power iterations used by any step.
    result_ : FitResult
        Full record of the fit.
    """

    def __init__(
        self,
        alpha=0.95,
        n_components=10,
        vexp_fraction=None,
        method="projection",
        scale=False,
        tol=DEFAULT_TOL,
        max_iter=None,
        collinearity_tol=DEFAULT_COLLINEARITY_TOL,
        max_card=None,
        eigen_side="auto",
    ):
        self.alpha = alpha
        self.n_components = n_components
        self.vexp_fraction = vexp_fraction
        self.method = method
        self.scale = scale
        self.tol = tol
        self.max_iter = max_iter
        self.collinearity_tol = collinearity_tol
        self.max_card = max_card
        self.eigen_side = eigen_side

    def _config(self):
        return core.FitConfig(
            alpha=self.alpha,
            method=self.method,
            n_components=None if self.vexp_fraction is not None else self.n_components,
            vexp_fraction=self.vexp_fraction,
            tol=self.tol,
            max_iter=self.max_iter,
            collinearity_tol=self.collinearity_tol,
            max_card=self.max_card,
            eigen_side=self.eigen_side,
        )

    def fit(self, X, y=None):
        """Fit the sparse components on ``X`` of shape (n_samples, n_features)."""
        X = validate_data(self, X, dtype=np.float64, ensure_min_samples=2)
        cfg = self._config()
        names = [f"x{j}" for j in range(X.shape[1])]
        scaling = "correlation" if self.scale else "covariance"
        data = preprocess(RawTable(names, X), scaling=scaling, missing_policy="fail")
        result = core.fit(data, cfg)

        self.mean_ = data.column_means
        self.scale_ = data.column_scales
        self.result_ = result
        self.components_ = result.loadings.T
        self.n_components_ = result.n_components
        self.explained_variance_ = result.evexps
        self.explained_variance_ratio_ = result.evexps / result.total_variance
        self.rcvexp_ = result.rcvexp
        self.pc_lambdas_ = result.pc_lambdas
        self.cardinality_ = np.array(result.cardinalities)
        self.selected_indices_ = [c.indices for c in result.components]
        self.stop_reason_ = result.stop_reason
        self.n_iter_ = max(result.pc_iterations)
        self._n_features_out = self.n_components_
        return self

    def transform(self, X):
        """Scores of ``X`` on the fitted sparse components."""
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return ((X - self.mean_) / self.scale_) @ self.components_.T

    def fit_transform(self, X, y=None):
        return self.fit(X, y).result_.scores

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.allow_nan = False
        return tags
