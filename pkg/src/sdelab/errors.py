"""Error taxonomy shared by the library, the service and the CLI.

Exit-code / HTTP mapping lives at the edges (cli, service); library code
raises these and stays transport-agnostic.
"""


class SdelabError(Exception):
    """Base class for all package errors."""

    kind = "internal"


class UsageError(SdelabError):
    """Caller error: bad argument, bad configuration, unknown name."""

    kind = "usage"


class ModelDomainError(SdelabError):
    """A coefficient returned a non-finite value for a finite state."""

    kind = "model_domain"


class ResourceError(SdelabError):
    """Request exceeds a hard resource guard (e.g. finest grid level)."""

    kind = "resource"


class EstimationError(SdelabError):
    """A Monte Carlo estimate could not be formed (e.g. every path exploded)."""

    kind = "estimation"


class QuadratureError(SdelabError):
    """Adaptive quadrature failed to converge on an integrand."""

    kind = "quadrature"
