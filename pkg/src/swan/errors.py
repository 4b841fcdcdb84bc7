"""Exception hierarchy shared by all solver modules."""


class SwanError(Exception):
    """Base class for every error raised by this package."""


class FeasibilityError(SwanError):
    """Pinching-antenna positions violate containment or spacing."""


class SingularGeometryError(SwanError):
    """A user coincides with a pinching antenna (zero distance)."""


class DegenerateReceiverError(SwanError):
    """A combining vector is numerically zero, so its SINR is undefined."""


class DegenerateRetractionError(SwanError):
    """A retraction hit an entry with zero modulus."""


class NumericError(SwanError):
    """Non-finite objective or gradient encountered during optimization."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class RegularizationError(SwanError):
    """The digital MMSE system matrix is singular."""


class ZFInfeasibleError(SwanError):
    """The effective channel is rank deficient, zero forcing is impossible."""


class TopologyError(SwanError):
    """Invalid partially-connected layout (e.g. N_RF does not divide M)."""


class UnsupportedGeometryError(SwanError):
    """Closed-form sums requested for a geometry they do not cover."""


class UnsupportedVariantError(SwanError):
    """Requested algorithm variant is not provided for this structure."""


class ConfigError(SwanError):
    """Invalid scenario configuration."""
