"""Sequential computation of projection SPCA and LS SPCA components.

Each step takes the first PC ``u`` of the deflated data ``Q``, selects a
block of original variables explaining at least ``alpha`` of ``u``'s
variance, builds the sparse component from that block, and deflates ``Q``.
The extra variance explained by every component is then guaranteed to be at
least ``alpha`` times the variance of the PC it approximates.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .data import DataMatrix
from .eigen import DEFAULT_TOL, leading_generalized_eigenpair, leading_pc
from .exceptions import (
    ConvergenceError,
    DegenerateComponentError,
    EmptyDataError,
    FitAbortedError,
)
from .metrics import evexp, pc_correlation, vexp_q
from .selection import DEFAULT_COLLINEARITY_TOL, forward_select, project_onto_block

METHODS = ("projection", "lsspca")
EIGEN_SIDES = ("auto", "variables", "scores")
RANK_EXHAUSTED_TOL = 1e-9
DEFAULT_N_COMPONENTS = 10


class UnreachableAlphaWarning(UserWarning):
    """The data rank did not allow a block explaining ``alpha`` of the PC."""


@dataclass(frozen=True)
class FitConfig:
    """Parameters of a fit.

    Exactly one stop rule applies: ``n_components`` (default 10) or
    ``vexp_fraction``, the share of total variance after which no further
    component is computed.
    """

    alpha: float = 0.95
    method: str = "projection"
    n_components: int | None = None
    vexp_fraction: float | None = None
    tol: float = DEFAULT_TOL
    max_iter: int | None = None
    collinearity_tol: float = DEFAULT_COLLINEARITY_TOL
    max_card: int | None = None
    eigen_side: str = "auto"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.eigen_side not in EIGEN_SIDES:
            raise ValueError(f"eigen_side must be one of {EIGEN_SIDES}")
        if self.n_components is not None and self.vexp_fraction is not None:
            raise ValueError("give either n_components or vexp_fraction, not both")
        if self.n_components is None and self.vexp_fraction is None:
            object.__setattr__(self, "n_components", DEFAULT_N_COMPONENTS)
        if self.n_components is not None and self.n_components < 1:
            raise ValueError("n_components must be positive")
        if self.vexp_fraction is not None and not 0.0 < self.vexp_fraction <= 1.0:
            raise ValueError("vexp_fraction must be in (0, 1]")

    @property
    def stop_rule(self):
        return "n_components" if self.n_components is not None else "vexp_fraction"


@dataclass(frozen=True)
class SparseComponent:
    indices: list
    sparse_loadings: np.ndarray
    full_loadings: np.ndarray
    scores: np.ndarray
    evexp: float
    vexp_q: float
    ref_lambda: float
    pc_correlation: float
    method: str
    r2: float
    reached: bool

    @property
    def cardinality(self):
        return len(self.indices)


@dataclass(frozen=True)
class FitResult:
    """Ordered components with their variance bookkeeping.

    ``cum_vexp[c]`` is the variance explained by the first ``c + 1``
    components (sum of extra variances), ``rcvexp[c]`` its ratio to the
    variance of as many PCs, and ``pc_scores[c]`` the PC each component
    approximates.
    """

    components: list
    alpha: float
    pc_lambdas: np.ndarray
    cum_vexp: np.ndarray
    rcvexp: np.ndarray
    stop_reason: str
    total_variance: float
    residual_variance: float
    pc_scores: list = field(default_factory=list)
    step_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pc_iterations: list = field(default_factory=list)
    config: FitConfig | None = None

    @property
    def n_components(self):
        return len(self.components)

    @property
    def loadings(self):
        """``p x k`` matrix of full loadings (unit-norm scores)."""
        return np.column_stack([c.full_loadings for c in self.components])

    @property
    def scores(self):
        return np.column_stack([c.scores for c in self.components])

    @property
    def evexps(self):
        return np.array([c.evexp for c in self.components])

    @property
    def cardinalities(self):
        return [c.cardinality for c in self.components]

    @property
    def unreachable_steps(self):
        return [j for j, c in enumerate(self.components) if not c.reached]


def deflate(Q, t, total_variance=None):
    """Remove from ``Q`` its projection on ``t``: ``Q - t (t'Q) / t't``."""
    Q = np.asarray(Q, dtype=float)
    t = np.asarray(t, dtype=float)
    tt = float(t @ t)
    scale = float(np.einsum("ij,ij->", Q, Q)) if total_variance is None else total_variance
    if tt <= 1e-12 * scale:
        raise DegenerateComponentError("deflating by a (numerically) zero component")
    return Q - np.outer(t, (t @ Q) / tt)


def lsspca_loadings(block, Q, tol=DEFAULT_TOL, max_iter=None):
    """LS SPCA loadings on a block: the leading generalized eigenvector of
    ``(Xb'QQ'Xb, Xb'Xb)``.

    The returned loadings give a unit-norm component ``block @ a``; gamma is
    the variance of ``Q`` it explains.
    """
    block = np.asarray(block, dtype=float)
    W = np.asarray(Q, dtype=float).T @ block
    pair = leading_generalized_eigenpair(W.T @ W, block.T @ block, tol=tol, max_iter=max_iter)
    return pair.vector, pair.value


class _Gram:
    """Gram matrix of the deflated data on one side, kept current by
    low-rank downdates and resynchronised once most variance is gone."""

    def __init__(self, Q, side):
        self.side = side
        self._reset(Q)

    def _reset(self, Q):
        self.G = Q.T @ Q if self.side == "variables" else Q @ Q.T
        self._trace_at_reset = float(np.trace(self.G))

    def deflate(self, Q_new, Q_old, s):
        ss = float(s @ s)
        if self.side == "variables":
            w = Q_old.T @ s
            self.G -= np.outer(w, w / ss)
        else:
            g = self.G @ s
            sgs = float(s @ g)
            self.G -= np.outer(s, g / ss) + np.outer(g / ss, s) - np.outer(s, s * (sgs / ss**2))
        self.G = 0.5 * (self.G + self.G.T)
        if np.trace(self.G) < 1e-3 * self._trace_at_reset:
            self._reset(Q_new)


def _resolve_side(side, n, p):
    if side == "auto":
        return "variables" if p <= n else "scores"
    return side


def _finish(components, pcs, lambdas, stop_reason, total, Q, times, iters, cfg):
    evs = np.array([c.evexp for c in components])
    lambdas = np.array(lambdas)
    cum = np.cumsum(evs)
    return FitResult(
        components=components,
        alpha=cfg.alpha,
        pc_lambdas=lambdas,
        cum_vexp=cum,
        rcvexp=cum / np.cumsum(lambdas) if len(components) else np.zeros(0),
        stop_reason=stop_reason,
        total_variance=total,
        residual_variance=float(np.einsum("ij,ij->", Q, Q)),
        pc_scores=pcs,
        step_times=np.array(times),
        pc_iterations=list(iters),
        config=cfg,
    )


def fit(X, cfg: FitConfig | None = None, **overrides) -> FitResult:
    """Compute sparse components of centred data ``X``.

    ``X`` is a :class:`DataMatrix` or an already centred array. Keyword
    overrides are applied on top of ``cfg``.

    Raises
    ------
    FitAbortedError
        When the eigensolver fails to converge; ``partial`` holds the
        components computed before the failure.
    """
    cfg = FitConfig(**overrides) if cfg is None else replace(cfg, **overrides)
    Xv = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    n, p = Xv.shape
    total = float(np.einsum("ij,ij->", Xv, Xv))
    if n == 0 or p == 0 or total == 0.0:
        raise EmptyDataError("data has no variance")

    start = time.perf_counter()
    Q = Xv.copy()
    gram = _Gram(Q, _resolve_side(cfg.eigen_side, n, p))
    components, pcs, lambdas, times, iters = [], [], [], [], []
    stop_reason = None

    while stop_reason is None:
        try:
            pc = leading_pc(Q, cfg.tol, cfg.max_iter, side=gram.side, gram=gram.G)
        except ConvergenceError as exc:
            partial = _finish(components, pcs, lambdas, "aborted", total, Q, times, iters, cfg)
            raise FitAbortedError(f"step {len(components) + 1}: {exc}", partial=partial) from exc
        u, lam = pc.scores, pc.lambda_
        iters.append(pc.iterations)

        sel = forward_select(Xv, u, cfg.alpha, cfg.max_card, cfg.collinearity_tol)
        idx = sel.indices
        if cfg.method == "projection":
            a, t = project_onto_block(sel.state, u)
        else:
            a, _ = lsspca_loadings(Xv[:, idx], Q, cfg.tol, cfg.max_iter)
            t = Xv[:, idx] @ a
        if t @ u < 0:
            a, t = -a, -t
        tn = float(np.linalg.norm(t))
        a, t = a / tn, t / tn
        full = np.zeros(p)
        full[idx] = a

        if not sel.reached:
            warnings.warn(
                f"component {len(components) + 1}: block explains {sel.achieved_r2:.6f} "
                f"of the PC, below alpha={cfg.alpha}",
                UnreachableAlphaWarning,
                stacklevel=2,
            )

        # residual of the component on its predecessors
        s = Q[:, idx] @ a
        components.append(
            SparseComponent(
                indices=list(idx),
                sparse_loadings=a,
                full_loadings=full,
                scores=t,
                evexp=evexp(Xv, Q, full),
                vexp_q=vexp_q(Q, t),
                ref_lambda=lam,
                pc_correlation=pc_correlation(t, u),
                method=cfg.method,
                r2=sel.achieved_r2,
                reached=sel.reached,
            )
        )
        pcs.append(u)
        lambdas.append(lam)

        Q_old, Q = Q, deflate(Q, s, total)
        gram.deflate(Q, Q_old, s)
        times.append(time.perf_counter() - start)

        cum = sum(c.evexp for c in components)
        if float(np.einsum("ij,ij->", Q, Q)) <= RANK_EXHAUSTED_TOL * total:
            stop_reason = "rank_exhausted"
        elif cfg.n_components is not None and len(components) >= cfg.n_components:
            stop_reason = "n_components"
        elif cfg.vexp_fraction is not None and cum >= cfg.vexp_fraction * total:
            stop_reason = "vexp_threshold"

    return _finish(components, pcs, lambdas, stop_reason, total, Q, times, iters, cfg)
