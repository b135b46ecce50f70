"""Conventional (norm-maximizing) sparse PCA baselines and comparison curves.

Conventional SPCA picks unit-norm loadings on ``c`` variables maximizing
the component norm ``a'Sa``. Two versions are provided: simple thresholding
of the first PC loadings, and an exhaustive search over all subsets for
small ``p``. The comparison curves put these next to projection and LS SPCA
first components of increasing cardinality.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, islice
from math import comb

import numpy as np

from .core import lsspca_loadings
from .data import DataMatrix
from .eigen import fix_sign, leading_pc
from .exceptions import SizeError
from .metrics import leading_eigenvalue, pc_correlation, vexp
from .selection import SelectionState, forward_select, project_onto_block

MAX_EXHAUSTIVE_P = 20
CROSSING_LEVEL = 0.999
_BATCH = 20000


@dataclass(frozen=True)
class NormComponent:
    indices: list
    unit_loadings: np.ndarray
    norm: float
    rel_norm: float

    @property
    def cardinality(self):
        return len(self.indices)

    def full_loadings(self, p):
        a = np.zeros(p)
        a[self.indices] = self.unit_loadings
        return a


@dataclass(frozen=True)
class CurvePoint:
    method: str
    cardinality: int
    norm: float
    rel_norm: float
    rcvexp: float
    pc_correlation: float


def _values(X):
    return X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


def threshold_spca(v, cardinality, X, lambda1=None) -> NormComponent:
    """Keep the ``cardinality`` largest-magnitude entries of the PC loadings ``v``.

    Ties go to the lowest index. The norm ``a'X'Xa`` is evaluated in score
    space; ``lambda1`` defaults to the first eigenvalue of ``X'X``.
    """
    v = np.asarray(v, dtype=float)
    p = v.size
    if not 1 <= cardinality <= p:
        raise ValueError(f"cardinality must be in [1, {p}]")
    Xv = _values(X)
    order = np.argsort(-np.abs(v), kind="stable")
    idx = np.sort(order[:cardinality])
    a = v[idx] / np.linalg.norm(v[idx])
    t = Xv[:, idx] @ a
    norm = float(t @ t)
    if lambda1 is None:
        lambda1 = leading_pc(Xv).lambda_
    return NormComponent(list(map(int, idx)), a, norm, norm / lambda1)


def optimal_norm_subset(S, cardinality, lambda1=None) -> NormComponent:
    """Exhaustive maximum of ``a'Sa`` over unit ``a`` with ``cardinality`` nonzeros.

    Every principal submatrix of that size is scanned (batched symmetric
    eigensolves). Among subsets whose norms agree to ``1e-12`` relative, the
    first in lexicographic order wins.
    """
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    if p > MAX_EXHAUSTIVE_P:
        raise SizeError(f"exhaustive search limited to p <= {MAX_EXHAUSTIVE_P}, got {p}")
    if not 1 <= cardinality <= p:
        raise ValueError(f"cardinality must be in [1, {p}]")

    best_val, best_idx = -np.inf, None
    it = combinations(range(p), cardinality)
    for _ in range(0, comb(p, cardinality), _BATCH):
        subsets = np.array(list(islice(it, _BATCH)))
        blocks = S[subsets[:, :, None], subsets[:, None, :]]
        top = np.linalg.eigvalsh(blocks)[:, -1]
        k = int(np.argmax(top))
        if best_idx is None or top[k] > best_val + 1e-12 * abs(best_val):
            first = np.flatnonzero(top >= top[k] - 1e-12 * abs(top[k]))[0]
            best_val, best_idx = float(top[first]), subsets[first]

    w, V = np.linalg.eigh(S[np.ix_(best_idx, best_idx)])
    a = fix_sign(V[:, -1])
    if lambda1 is None:
        lambda1 = leading_eigenvalue(S)
    return NormComponent(list(map(int, best_idx)), a, float(w[-1]), float(w[-1]) / lambda1)


def _point(method, Xv, idx, a, u, lam):
    t = Xv[:, idx] @ a
    unit = t / np.linalg.norm(a)
    norm = float(unit @ unit)
    return CurvePoint(
        method=method,
        cardinality=len(idx),
        norm=norm,
        rel_norm=norm / lam,
        rcvexp=vexp(Xv, t) / lam,
        pc_correlation=abs(pc_correlation(t, u)),
    )


def baseline_curve(X, cardinalities, pc=None) -> list:
    """Thresholded first components evaluated at each cardinality.

    For a single component rCvexp is its variance explained over the first
    eigenvalue.
    """
    Xv = _values(X)
    pc = leading_pc(Xv) if pc is None else pc
    out = []
    for c in cardinalities:
        nc = threshold_spca(pc.loadings, c, Xv, pc.lambda_)
        out.append(_point("threshold", Xv, nc.indices, nc.unit_loadings, pc.scores, pc.lambda_))
    return out


def comparison_curves(X, max_card, methods=("projection", "lsspca", "threshold")) -> list:
    """First-component curves versus cardinality for each method.

    Projection and LS SPCA use the prefixes of the forward-selection path
    for the first PC; the path ends early once the PC is fully explained.
    """
    Xv = _values(X)
    n, p = Xv.shape
    max_card = min(max_card, p)
    pc = leading_pc(Xv)
    u, lam = pc.scores, pc.lambda_
    out = []
    if "projection" in methods or "lsspca" in methods:
        path = forward_select(Xv, u, 1.0, max_card=max_card).indices
        for c in range(1, len(path) + 1):
            idx = path[:c]
            if "projection" in methods:
                a, _ = project_onto_block(SelectionState.from_block(Xv, idx), u)
                out.append(_point("projection", Xv, idx, a, u, lam))
            if "lsspca" in methods:
                a, _ = lsspca_loadings(Xv[:, idx], Xv)
                out.append(_point("lsspca", Xv, idx, a, u, lam))
    if "threshold" in methods:
        out += baseline_curve(Xv, range(1, max_card + 1), pc)
    return out


def crossing_cardinalities(points, level=CROSSING_LEVEL) -> dict:
    """Smallest cardinality at which each method's rCvexp reaches ``level`` (None if never)."""
    out = {}
    for pt in sorted(points, key=lambda q: (q.method, q.cardinality)):
        out.setdefault(pt.method, None)
        if out[pt.method] is None and pt.rcvexp >= level:
            out[pt.method] = pt.cardinality
    return out
