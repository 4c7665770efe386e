"""Stabilized weighted nearest-neighbour classification."""

__version__ = "0.1.0"

from .classifier import WnnClassifier, bnn_rule, knn_rule, ownn_rule, snn_rule, wnn  # noqa: E402
from .core import Dataset, EvalReport, LabeledSample, WeightVector  # noqa: E402
from .evaluation import cv_risk_cis, empirical_cis, empirical_risk, paired_cis_estimate  # noqa: E402
from .simgen import GaussianProblem, make_simulation, sample  # noqa: E402
from .theory import TheoryConstants, gaussian_constants_numeric  # noqa: E402
from .tuning import make_snn_grid, tune_knn, tune_snn  # noqa: E402
from .weights import BnnParams, SnnParams, bnn_weights, knn_weights, ownn_weights, snn_weights  # noqa: E402

__all__ = [
    "BnnParams", "Dataset", "EvalReport", "GaussianProblem", "LabeledSample", "SnnParams", "TheoryConstants",
    "WeightVector", "WnnClassifier", "bnn_rule", "bnn_weights", "cv_risk_cis", "empirical_cis", "empirical_risk",
    "gaussian_constants_numeric", "knn_rule", "knn_weights", "make_simulation", "make_snn_grid", "ownn_rule",
    "ownn_weights", "paired_cis_estimate", "sample", "snn_rule", "snn_weights", "tune_knn", "tune_snn", "wnn",
]
