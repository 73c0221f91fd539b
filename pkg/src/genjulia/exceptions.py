"""Exception hierarchy shared by all modules."""


class GenJuliaError(Exception):
    """Base class for every error raised by the package."""


class PreconditionError(GenJuliaError, ValueError):
    """An operation was called outside its documented domain."""


class MaterializationCapError(PreconditionError):
    """A polynomial of too large a degree would have to be expanded."""


class SequenceExhaustedError(PreconditionError):
    """A finite parameter list was asked for a term it does not define."""


class AnchorError(PreconditionError):
    """The anchor point of a preimage measure fails the escape inequality."""


class DomainError(PreconditionError):
    """A series or closed form was evaluated outside its convergence region."""


class RegularityError(GenJuliaError):
    """A polynomial sequence violates one of the regularity inequalities."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class RootFindingError(GenJuliaError, ArithmeticError):
    """A numerical root solve failed to converge or bracket."""


class InternalConsistencyError(GenJuliaError, ArithmeticError):
    """A numerically verified identity did not hold."""
