"""Exception types shared across the toolkit."""


class OipmError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(OipmError):
    pass


class DomainViolation(OipmError):
    """A point left the strict interior of the barrier domain.

    ``term_index`` identifies the offending constraint term when known.
    """

    def __init__(self, message, term_index=None):
        super().__init__(message)
        self.term_index = term_index


class SingularHessian(OipmError):
    pass


class SingularKkt(OipmError):
    """KKT factorization failed or the matrix is numerically singular."""

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class RankDeficient(OipmError):
    pass


class DisconnectedNetwork(OipmError):
    pass


class InfeasibleStart(OipmError):
    pass


class InfeasibleInstance(OipmError):
    pass


class NonConvergent(OipmError):
    pass


class PersistentInfeasibility(OipmError):
    pass


class DriftTooLarge(OipmError):
    pass


class MissingOracle(OipmError):
    pass


class ConfigError(OipmError):
    pass
