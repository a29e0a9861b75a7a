"""Exception hierarchy. Everything raised on purpose derives from SaaCertifyError."""


class SaaCertifyError(Exception):
    pass


class InvalidInput(SaaCertifyError, ValueError):
    """Arguments outside an operation's domain (bad epsilon, sparsity > dim, ...)."""


class DimensionError(InvalidInput):
    pass


class SchemaError(InvalidInput):
    """A JSON document does not match the expected schema."""


class CapacityError(SaaCertifyError):
    """A problem exceeds a configured size cap."""


class IterationLimitError(SaaCertifyError):
    pass


class NotPointedError(SaaCertifyError):
    """The cone {a : a^T W >= 0} contains a line.

    ``certificate`` is a nonzero ``a`` with ``a^T W = 0``.
    """

    def __init__(self, message, certificate):
        super().__init__(message)
        self.certificate = certificate


class InfeasibleSaaError(SaaCertifyError):
    def __init__(self, message, scenario_index=None):
        super().__init__(message)
        self.scenario_index = scenario_index


class UnboundedSaaError(SaaCertifyError):
    pass


class FeasibilityAssertionError(SaaCertifyError):
    """An SAA solution failed the per-scenario recourse feasibility check."""
