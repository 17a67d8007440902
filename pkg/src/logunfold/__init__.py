"""Logistic unfolding maps for multivariate binary data.

Persons and binary items share a low-dimensional Euclidean space; the
probability of endorsing an item falls off with the person-item distance
through a logistic link with an item offset. Estimation runs a double
majorization: the logistic loss is bounded by weighted least squares, which
an unfolding (SMACOF-style) inner loop minimizes.
"""

from .dataset import BinaryDataset, PredictorSet, compress_profiles, load_csv
from .errors import DataError, NumericalError, SingularPredictorsError, UnfoldingError
from .estimator import (
    FitOptions,
    FitReport,
    fit_intercepts_only,
    fit_supervised,
    fit_unsupervised,
    multistart,
    predict,
)
from .evaluation import (
    alienation,
    brier,
    config_correlation,
    congruence,
    procrustes_rotation,
    procrustes_similarity,
)
from .geometry import (
    SupervisedUnfoldingMap,
    UnfoldingMap,
    classify,
    distance_matrix,
    endorse_prob,
    linear_predictor,
    max_regions,
)
from .reduced_rank import ReducedRankMap, fit_rrr, predict_rrr
from .selection import aic, npar

__version__ = "0.1.0"

__all__ = [
    "BinaryDataset",
    "PredictorSet",
    "compress_profiles",
    "load_csv",
    "DataError",
    "NumericalError",
    "SingularPredictorsError",
    "UnfoldingError",
    "FitOptions",
    "FitReport",
    "fit_intercepts_only",
    "fit_supervised",
    "fit_unsupervised",
    "multistart",
    "predict",
    "alienation",
    "brier",
    "config_correlation",
    "congruence",
    "procrustes_rotation",
    "procrustes_similarity",
    "SupervisedUnfoldingMap",
    "UnfoldingMap",
    "classify",
    "distance_matrix",
    "endorse_prob",
    "linear_predictor",
    "max_regions",
    "ReducedRankMap",
    "fit_rrr",
    "predict_rrr",
    "aic",
    "npar",
    "__version__",
]
