"""
Error hierarchy of the toolkit.

Every error knows the process exit code the batch commands report for it and
carries a ``details`` mapping that is serialized into the machine-readable
error document written to stderr.
"""

from typing import Any, Dict

from whx.choices import ExitCode


class WhxError(Exception):
    exit_code = ExitCode.INVALID_INPUT
    kind = 'error'

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def as_dict(self) -> Dict[str, Any]:
        return {
            'error': self.kind,
            'exit_code': int(self.exit_code),
            'message': self.message,
            'details': self.details,
        }


class InvalidInputError(WhxError):
    kind = 'invalid-input'


class InvalidRootError(InvalidInputError):
    kind = 'invalid-root'


class NumericalError(WhxError):
    exit_code = ExitCode.NUMERICAL_FAILURE
    kind = 'numerical-failure'


class ContourSingularityError(NumericalError):
    kind = 'contour-singularity'


class ResolutionError(NumericalError):
    kind = 'resolution'


class BranchAmbiguityError(NumericalError):
    kind = 'branch-ambiguity'


class DivergenceError(NumericalError):
    """Raised by iterative schemes; ``partial_state`` keeps the last iterate."""

    kind = 'divergence'

    def __init__(self, message: str, partial_state: Any = None, **details: Any):
        super().__init__(message, **details)
        self.partial_state = partial_state


class NoSolutionError(NumericalError):
    kind = 'no-solution'


class SingularTruncationError(NumericalError):
    kind = 'singular-truncation'


class ConditioningError(NumericalError):
    kind = 'conditioning'


class NotInClassError(WhxError):
    exit_code = ExitCode.NOT_IN_CLASS
    kind = 'not-in-class'


class NotCanonicalError(NotInClassError):
    kind = 'not-canonical'


class UnsupportedMultiplicityError(NotInClassError):
    kind = 'unsupported-multiplicity'
