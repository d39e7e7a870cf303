class RydquditError(Exception):
    pass


# Input problems.  These are also ValueErrors so callers that only know about
# the builtin hierarchy still catch them.

class DimensionMismatch(RydquditError, ValueError):
    pass


class InvalidLevel(RydquditError, ValueError):
    pass


class InvalidConfiguration(RydquditError, ValueError):
    pass


class NonFiniteControls(RydquditError, ValueError):
    pass


class GridTooCoarse(RydquditError, ValueError):
    pass


class SequenceFormError(RydquditError, ValueError):
    pass


# Search and run failures

class BracketError(RydquditError):
    pass


class PulseBudgetExceeded(RydquditError):
    pass


class NormUnderflow(RydquditError):
    pass


class MissingPulse(RydquditError, KeyError):
    pass


class ConvergenceError(RydquditError):
    pass
