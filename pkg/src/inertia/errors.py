"""Exception hierarchy shared across the package."""


class InertiaError(Exception):
    """Base class for all errors raised by :mod:`inertia`."""


class DomainError(InertiaError, ValueError):
    """An argument lies outside the domain of the operation."""


class BoundaryError(DomainError):
    """A point is on (or numerically too close to) the boundary of the simplex."""


class OffSurfaceError(DomainError):
    """Euclidean coordinates do not lie on the image of the open simplex."""


class MissingPrimitiveError(InertiaError):
    """The kernel has no Euclidean chart and numeric quadrature is disabled."""


class InconclusiveError(InertiaError):
    """Well-posedness could not be decided from the partial integrals."""


class NoPotentialError(InertiaError):
    """An energy was requested for a payoff source without a potential."""


class ConfigError(InertiaError, ValueError):
    """A run or suite configuration is malformed."""
