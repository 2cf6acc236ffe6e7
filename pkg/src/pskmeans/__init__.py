"""Clustering of noisy, gappy time series on P-spline coefficients."""

from .basis import BasisMatrix, KnotGrid, eval_basis, make_knots
from .cluster import CoefficientMatrix, Partition, dist_pearson, dist_sq_euclid, kmeans
from .metrics import adjusted_rand_index, contingency_table
from .select import VCurveTrace, default_lambda_grid, select_lambda, vcurve_trace
from .simgen import SimConfig, SimDataset, generate_dataset, signal
from .smooth import PenaltyOp, Series, SplineFit, difference_matrix, fit_pspline, predict

__version__ = "0.1.0"

__all__ = [
    "BasisMatrix",
    "CoefficientMatrix",
    "KnotGrid",
    "Partition",
    "PenaltyOp",
    "Series",
    "SimConfig",
    "SimDataset",
    "SplineFit",
    "VCurveTrace",
    "adjusted_rand_index",
    "contingency_table",
    "default_lambda_grid",
    "difference_matrix",
    "dist_pearson",
    "dist_sq_euclid",
    "eval_basis",
    "fit_pspline",
    "generate_dataset",
    "kmeans",
    "make_knots",
    "predict",
    "select_lambda",
    "signal",
    "vcurve_trace",
]
