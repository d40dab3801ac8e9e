"""Exception hierarchy.

Every error carries the process exit code the command-line front end uses
when the error escapes a pipeline.
"""


class DiracDotError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(DiracDotError):
    """Bad command-line flag, config key or argument combination."""

    exit_code = 2


class IoError(DiracDotError):
    """Output could not be written or input could not be read."""

    exit_code = 3


class DomainError(DiracDotError, ValueError):
    """Argument outside the supported range."""

    exit_code = 4


class SingularArgument(DomainError):
    """Evaluation at (or numerically indistinguishable from) a singularity."""

    exit_code = 4


class BranchError(DiracDotError, ValueError):
    """Energy incompatible with the requested momentum branch."""

    exit_code = 5


class MatchError(DiracDotError):
    """Energy does not satisfy the matching condition of the requested state."""

    exit_code = 5


class ConvergenceError(DiracDotError, ArithmeticError):
    """Internal series or recurrence failed its own accuracy check."""

    exit_code = 6


class NoConvergence(DiracDotError):
    """Iterative solver hit its iteration cap."""

    exit_code = 6


class EscapedRegion(NoConvergence):
    """Complex iterate left the admissible search region."""

    exit_code = 6


class EvaluationError(DiracDotError):
    """User-supplied function raised during a scan."""

    exit_code = 6


class IndeterminatePhase(DiracDotError):
    """Phase shift numerator and denominator vanish together."""

    exit_code = 7


class UnwrapError(DiracDotError):
    """Energy grid too coarse to unwrap the phase unambiguously."""

    exit_code = 7


class TrackLost(DiracDotError):
    """Continuation could not follow the root even after step halving."""

    exit_code = 8


class UnmatchedResonance(DiracDotError):
    """No delay maximum found to pair with a resonance."""

    exit_code = 9
