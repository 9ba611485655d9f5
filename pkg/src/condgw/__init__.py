"""Construction, exact evaluation and search cost of conditioned Galton-Watson trees."""
from .errors import (CondGWError, DistributionError, EnumerationSizeError,
                     ImpossibleConditioningError, ImpossibleSearchError, InvalidSystemError,
                     NonTerminationError, TreeError)
from .offspring import OffspringSchedule, Pmf, pmf_from_weights, point_mass, poisson_pmf
from .trees import LEAF, Tree, enumerate_trees, height, log_prob, parse, serialize

__version__ = "0.1.0"
