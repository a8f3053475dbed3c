"""Exception hierarchy for the solver stack.

Everything raised on purpose derives from VaidyaError so the CLI can map
failures to exit codes without catching bare Exception.
"""


class VaidyaError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(VaidyaError):
    """Vector/matrix shapes do not agree."""


class NonInteriorPoint(VaidyaError):
    """A point required to be strictly inside the polytope is not."""


class SingularHessian(VaidyaError):
    """The barrier Hessian could not be factorized (rows do not span)."""


class ZeroCutVector(VaidyaError):
    """A cut direction with zero norm was supplied."""


class TooFewRows(VaidyaError):
    """Dropping the row would leave fewer than n+1 constraints."""


class CenteringFailed(VaidyaError):
    """Newton centering exhausted its iteration budget far from optimality."""


class NoFeasibleIterate(VaidyaError):
    """No query point ever landed inside the feasible set Q."""


class NotSeparable(VaidyaError):
    """Separation was requested for a point that is not outside the set."""


class InvalidArgument(VaidyaError):
    """An argument violates a documented precondition."""


class InvalidBatchSize(VaidyaError):
    """Batch size must be a positive integer."""


class ParseError(VaidyaError):
    """A data file could not be parsed; message carries row/column info."""


class EmptyFile(VaidyaError):
    """A data file contained no rows."""


class ConfigError(VaidyaError):
    """An experiment configuration is malformed."""
