"""Stationary states of Lindblad equations with local decay."""
from .errors import (
    NonUniqueSteadyState,
    NonUniqueWeights,
    NoRoot,
    NoSteadyState,
    NotStabilizable,
    SingularConstraintMatrix,
    SolverError,
    ValidationError,
)

__version__ = "0.1.0"
