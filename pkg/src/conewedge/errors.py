"""Exception hierarchy shared by all modules."""


class ConeWedgeError(Exception):
    """Base class; ``code`` is the module-qualified identifier used in reports."""

    code = "conewedge.error"


class DomainError(ConeWedgeError, ValueError):
    code = "conewedge.domain"


class UnsupportedError(ConeWedgeError, NotImplementedError):
    code = "conewedge.unsupported"


class NumericalError(ConeWedgeError, ArithmeticError):
    code = "conewedge.numerical"


class EndpointCoincidenceError(DomainError):
    """An indicial root sits on a window endpoint."""

    code = "indicial.endpoint"

    def __init__(self, root, endpoint, message=None):
        self.root = root
        self.endpoint = endpoint
        super().__init__(message or f"indicial root {root!r} coincides with window endpoint {endpoint:.12g}")


class TruncationError(DomainError):
    """The spectrum truncation is too short to enumerate every root in a window."""

    code = "indicial.truncation"


class HypothesisError(DomainError):
    code = "domains.hypothesis"


class PositivityError(NumericalError):
    """The iterate fell below the positivity floor; ``state`` is the last valid one."""

    code = "pme.positivity"
    state = None

    def with_state(self, state):
        self.state = state
        return self


class ConfigError(ConeWedgeError, ValueError):
    """Raised with the full list of violations, not just the first one."""

    code = "cli.config"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.violations))
