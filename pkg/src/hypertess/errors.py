"""Exception hierarchy shared by the engine and the command line."""


class HypertessError(Exception):
    """Base class; the CLI maps these to exit status 1."""


class UsageError(HypertessError, ValueError):
    """Invalid parameters supplied by the caller (CLI exit status 2)."""


class DomainError(HypertessError, ValueError):
    """A point or value lies outside the model (e.g. Klein norm >= 1)."""


class DegenerateConfigurationError(HypertessError):
    """A point of interest lies on a hyperplane; callers resample."""


class ResolutionError(HypertessError):
    """The probe lattice is too coarse for the queried cell; halve the pitch."""


class ConfigError(HypertessError, ValueError):
    """An encounter/wall configuration violates one of its bounds."""


class ThresholdNotFoundError(HypertessError):
    """The swept grid never crosses the reference level."""


class NumericalError(HypertessError):
    """Quadrature or root finding did not reach the requested tolerance."""
