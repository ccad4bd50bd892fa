"""Exception types raised by the engine."""


class MtuCobarError(Exception):
    """Base class for computation errors (CLI exit code 3)."""


class CompositionError(MtuCobarError):
    """Two consecutive differentials do not compose to zero."""


class IntegralityError(MtuCobarError):
    """A structure constant that must be p-integral has a p in its denominator."""


class WindowError(MtuCobarError):
    """A coaction left the window of a sub-comodule family."""


class UnavailableModeError(MtuCobarError):
    """The requested coaction mode does not cover this generator or prime."""


class NonIntegerError(MtuCobarError):
    """An a_d value is not an integer under the chosen Bernoulli convention."""


class ParseError(ValueError):
    """Malformed user expression (CLI exit code 2)."""
