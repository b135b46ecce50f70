"""Synthetic data, timing harness and the log-log complexity regression."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FitConfig, fit
from .data import DataMatrix, load_csv
from .exceptions import PSPCAError

TIMING_COLUMNS = ("dataset", "p", "c", "rep", "elapsed_seconds")


@dataclass(frozen=True)
class TimingRecord:
    dataset: str
    p: int
    c: int
    elapsed: float
    rep: int | None = None
    p10: float | None = None
    p90: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class ComplexityFit:
    """OLS fit of ``log10 T = log10 k + alpha_exp log10 c + beta_exp log10 p``."""

    log_k: float
    alpha_exp: float
    beta_exp: float
    r_squared: float
    residual_se: float
    std_errors: tuple
    n_obs: int


def gen_collinear(n=100, p=5) -> DataMatrix:
    """``x_ij = (-1)^i sqrt(j)``: ``p`` perfectly collinear columns of rank one."""
    i = np.arange(1, n + 1)[:, None]
    j = np.arange(1, p + 1)[None, :]
    return DataMatrix.from_array(np.where(i % 2 == 0, 1.0, -1.0) * np.sqrt(j))


def gen_random_lowrank(n, p, rank, noise=0.0, seed=0) -> DataMatrix:
    """Centred factor product with harmonically decaying factor scales plus noise.

    The signal is ``F diag(1, 1/2, ..., 1/rank) W`` with standard normal
    ``F`` and ``W``; ``noise`` is the standard deviation of added Gaussian
    noise. The same seed always gives the same matrix.
    """
    if not 1 <= rank <= min(n, p):
        raise ValueError("rank must be in [1, min(n, p)]")
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((n, rank))
    W = rng.standard_normal((rank, p))
    X = (F / np.arange(1, rank + 1)) @ W
    if noise:
        X += noise * rng.standard_normal((n, p))
    return DataMatrix.from_array(X)


def collect_timings(
    datasets,
    components=10,
    repetitions=20,
    alpha=0.95,
    eigen_side="variables",
    warmup=True,
) -> list:
    """Time repeated fits; one record per dataset, repetition and prefix length.

    ``datasets`` is a sequence of ``(label, DataMatrix)``. The elapsed time
    for ``c`` components is read off a single fit after its ``c``-th step,
    with a monotonic clock started after preprocessing. Fits run strictly
    one after another; a failed fit yields records with ``error`` set.
    ``eigen_side="variables"`` iterates on the ``p x p`` covariance whatever
    the shape of the data, matching timings that refer to a given number of
    variables.
    """
    cfg = FitConfig(alpha=alpha, n_components=components, eigen_side=eigen_side)
    records = []
    for label, X in datasets:
        if warmup:
            try:
                fit(X, cfg)
            except PSPCAError:
                pass
        for rep in range(repetitions):
            try:
                res = fit(X, cfg)
            except PSPCAError as exc:
                records += [
                    TimingRecord(label, X.p, c, float("nan"), rep, error=str(exc))
                    for c in range(1, components + 1)
                ]
                continue
            records += [
                TimingRecord(label, X.p, c, float(t), rep)
                for c, t in enumerate(res.step_times, start=1)
            ]
    return records


def summarize_timings(records) -> list:
    """Median (and 10th/90th percentile) elapsed time per dataset and prefix length."""
    groups = {}
    for r in records:
        if r.error is None and np.isfinite(r.elapsed):
            groups.setdefault((r.dataset, r.p, r.c), []).append(r.elapsed)
    out = []
    for (label, p, c), vals in groups.items():
        q10, q50, q90 = np.percentile(vals, [10, 50, 90])
        out.append(TimingRecord(label, p, c, float(q50), p10=float(q10), p90=float(q90)))
    return sorted(out, key=lambda r: (r.p, r.dataset, r.c))


def run_benchmark(datasets, components=10, repetitions=20, alpha=0.95, eigen_side="variables") -> list:
    """Median timing records over repetitions for components 1..``components``."""
    return summarize_timings(collect_timings(datasets, components, repetitions, alpha, eigen_side))


def fit_complexity(records, min_levels=3) -> ComplexityFit:
    """Least-squares fit of the log10 time model to timing records.

    At least ``min_levels`` distinct values of both ``p`` and ``c`` are
    required; ``min_levels=2`` allows an exactly identified smoke fit.
    """
    recs = [r for r in records if r.error is None and np.isfinite(r.elapsed) and r.elapsed > 0]
    if len({r.p for r in recs}) < min_levels or len({r.c for r in recs}) < min_levels:
        raise ValueError(f"need at least {min_levels} distinct p and {min_levels} distinct c values")
    c = np.array([r.c for r in recs], dtype=float)
    p = np.array([r.p for r in recs], dtype=float)
    y = np.log10([r.elapsed for r in recs])
    D = np.column_stack([np.ones_like(c), np.log10(c), np.log10(p)])
    if np.linalg.matrix_rank(D) < 3:
        raise ValueError("rank-deficient design")
    coef, *_ = np.linalg.lstsq(D, y, rcond=None)
    resid = y - D @ coef
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    dof = len(y) - 3
    sigma2 = rss / dof if dof > 0 else float("nan")
    cov = sigma2 * np.linalg.inv(D.T @ D)
    return ComplexityFit(
        log_k=float(coef[0]),
        alpha_exp=float(coef[1]),
        beta_exp=float(coef[2]),
        r_squared=1.0 - rss / tss if tss > 0 else 1.0,
        residual_se=float(np.sqrt(sigma2)),
        std_errors=tuple(float(s) for s in np.sqrt(np.diag(cov))),
        n_obs=len(y),
    )


def write_timings_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMING_COLUMNS)
        for r in records:
            rep = "" if r.rep is None else r.rep
            w.writerow([r.dataset, r.p, r.c, rep, f"{r.elapsed:.6g}"])


def read_timings_csv(path) -> list:
    table = load_csv(Path(path), label_column=0)
    cols = {nm: k for k, nm in enumerate(table.column_names)}
    missing = {"p", "c", "elapsed_seconds"} - cols.keys()
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    out = []
    for label, row in zip(table.row_labels, table.values):
        rep = row[cols["rep"]] if "rep" in cols else np.nan
        out.append(
            TimingRecord(
                dataset=label,
                p=int(row[cols["p"]]),
                c=int(row[cols["c"]]),
                elapsed=float(row[cols["elapsed_seconds"]]),
                rep=None if np.isnan(rep) else int(rep),
            )
        )
    return out

