"""Exception types shared across modules."""


class RdmError(Exception):
    """Base class for package errors."""


class ValidationError(RdmError, ValueError):
    """Invalid user input (configuration, arguments)."""


class GeometryError(ValidationError):
    """Single-site support and displacement range violate r + d_max = 1/2."""


class NumericalFailure(RdmError, RuntimeError):
    """A solver could not bracket or converge."""


class AmbiguousCount(RdmError, ValueError):
    """The queried energy sits on an eigenvalue; perturb E and retry."""


class FitRefused(RdmError, ValueError):
    """Not enough usable data for a tail fit."""


class AlternativeIIError(RdmError, ValueError):
    """Operation requires alternative (i) but the potential is in alternative (ii)."""


class InconclusiveResult(RdmError):
    """A numerical comparison did not clear its error margin."""
