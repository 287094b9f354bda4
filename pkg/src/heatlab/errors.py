"""Exception taxonomy shared across the package."""


class HeatlabError(Exception):
    """Base class for every package-specific error."""


class ConfigurationError(HeatlabError):
    """Invalid grid, sigma, or experiment configuration."""


class GridAlignmentError(HeatlabError):
    """Query point does not coincide with a grid node (no interpolation)."""


class DomainError(HeatlabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class UsageError(HeatlabError):
    """Operation invoked in a way its contract forbids."""


class CapabilityError(HeatlabError):
    """Requested combination is unsupported by design."""


class ResourceError(HeatlabError):
    """Configured compute budget would be exceeded."""


class CouplingError(HeatlabError):
    """Paired solutions do not share a noise realization or a grid."""
