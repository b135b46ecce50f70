"""Sparse principal components with a guaranteed share of variance explained."""

__version__ = "0.1.0"

from .baseline import (
    comparison_curves,
    crossing_cardinalities,
    optimal_norm_subset,
    threshold_spca,
)
from .bench import fit_complexity, gen_collinear, gen_random_lowrank, run_benchmark
from .core import FitConfig, FitResult, SparseComponent, UnreachableAlphaWarning, deflate, fit
from .data import DataMatrix, RawTable, load_csv, preprocess
from .eigen import leading_eigenpair, leading_generalized_eigenpair, leading_pc
from .estimator import ProjectionSPCA
from .exceptions import (
    ConvergenceError,
    CSVParseError,
    DegenerateColumnError,
    DegenerateComponentError,
    EmptyDataError,
    FitAbortedError,
    PSPCAError,
    SingularBlockError,
    SingularMetricError,
    SizeError,
)
from .metrics import evexp, rcvexp, vexp, vexp_q
from .selection import forward_select

__all__ = [
    "ProjectionSPCA",
    "FitConfig",
    "FitResult",
    "SparseComponent",
    "UnreachableAlphaWarning",
    "DataMatrix",
    "RawTable",
    "fit",
    "deflate",
    "load_csv",
    "preprocess",
    "forward_select",
    "leading_eigenpair",
    "leading_generalized_eigenpair",
    "leading_pc",
    "vexp",
    "evexp",
    "vexp_q",
    "rcvexp",
    "threshold_spca",
    "optimal_norm_subset",
    "comparison_curves",
    "crossing_cardinalities",
    "gen_collinear",
    "gen_random_lowrank",
    "run_benchmark",
    "fit_complexity",
    "PSPCAError",
    "CSVParseError",
    "EmptyDataError",
    "DegenerateColumnError",
    "ConvergenceError",
    "SingularMetricError",
    "SingularBlockError",
    "DegenerateComponentError",
    "SizeError",
    "FitAbortedError",
]
