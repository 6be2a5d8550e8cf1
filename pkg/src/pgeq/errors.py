"""Exception hierarchy shared by the solver modules."""


class PgeqError(Exception):
    """Base class for all errors raised by this package."""


class EvaluationError(PgeqError):
    """A problem callback returned non-finite values."""


class DegenerateInput(PgeqError, ValueError):
    """The normal step was requested at a point where J^T c = 0."""


class SubsolverError(PgeqError):
    """The tangential subproblem could not be solved to tolerance."""


class FactorizationError(SubsolverError):
    """The saddle-point system of the tangential subproblem is singular."""


class UnknownProblem(PgeqError, KeyError):
    pass


class ConfigError(PgeqError, ValueError):
    pass


class ParseError(PgeqError, ValueError):
    pass
