"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NonGenericLattice(ValueError):
    """The reduced pair (e1, e2) is not uniquely defined for this lattice.

    This happens on a measure-zero set (ties between successive minima or a
    vanishing first coordinate); Monte Carlo callers should resample.
    """


class ResourceCapExceeded(RuntimeError):
    """The work required exceeds the configured candidate cap."""


class NumericError(RuntimeError):
    """A numerical routine failed to reach its tolerance."""


class InsufficientData(ValueError):
    """Too few samples for the requested statistic."""
