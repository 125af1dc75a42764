"""Overall objective priors for multiparameter models.

Three routes to a single prior serving every parameter of interest:
closed-form common reference priors (catalogue), the reference-distance
choice within a candidate family (refdist), and hierarchical mixing
over a hyperparameter with a reference hyperprior (hier, shrinkage).
"""

from . import catalogue, hier, numerics, refdist, shrinkage
from .exceptions import (AccuracyError, BoundaryModeError,
                         DegenerateDataError, DomainError, EvaluationError,
                         OverallPriorError, PreconditionError,
                         SingularityError)

__version__ = "0.1.0"

__all__ = [
    "catalogue", "hier", "numerics", "refdist", "shrinkage",
    "OverallPriorError", "DomainError", "EvaluationError", "AccuracyError",
    "PreconditionError", "BoundaryModeError", "SingularityError",
    "DegenerateDataError",
    "__version__",
]
