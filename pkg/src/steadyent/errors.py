"""Exception hierarchy.

``ValidationError`` covers bad inputs (CLI exit code 2); ``SolverError``
covers numerical failures on valid inputs (CLI exit code 3).
"""


class ValidationError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


class NonUniqueSteadyState(SolverError):
    pass


class NoSteadyState(SolverError):
    pass


class NotStabilizable(SolverError):
    pass


class SingularConstraintMatrix(SolverError):
    pass


class NoRoot(SolverError):
    pass


class NonUniqueWeights(SolverError):
    pass
