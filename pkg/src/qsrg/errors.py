"""Exception hierarchy shared by all qsrg modules."""


class QsrgError(Exception):
    """Base class for every error raised by qsrg."""


class NumericalFailure(QsrgError):
    """An iterative numerical routine failed to produce a usable result."""


class NonConvergentError(QsrgError):
    """Repeated squaring or a flow did not settle (unimodular phases, no period 1 or 2)."""


class DomainError(QsrgError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class SizeCapError(DomainError):
    """A brute-force realization would exceed the desk-scale size cap."""


class UnsupportedCaseError(QsrgError):
    """The requested construction does not exist for this kind of input."""
