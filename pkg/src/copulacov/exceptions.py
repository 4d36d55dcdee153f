"""Exception hierarchy shared across the package."""


class CopulaError(ValueError):
    """Base class for all errors raised by copulacov."""


class ParameterOutOfRange(CopulaError):
    """A copula parameter lies outside the admissible range of its family."""


class DomainError(CopulaError):
    """An argument lies outside the domain of the requested function."""


class DerivativeUndefined(DomainError):
    """A partial derivative is requested where the family does not define it."""


class TiesPresent(CopulaError):
    """Two observations share an x-coordinate or a y-coordinate."""


class MarginKindMismatch(CopulaError):
    """A sample with raw margins was given where uniform margins are required."""


class KindMismatch(CopulaError):
    """A grid function of the wrong kind was supplied."""


class QuadratureFailure(CopulaError):
    """Numerical integration could not reach the requested tolerance."""


class ModelMismatch(CopulaError):
    """An experiment result is compared against a different copula model."""


class ReplicationFailed(CopulaError):
    """A Monte Carlo replication raised; ``replication`` holds its index."""

    def __init__(self, replication: int, cause: BaseException):
        super().__init__(f"replication {replication} failed: {type(cause).__name__}: {cause}")
        self.replication = replication
