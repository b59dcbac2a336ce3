"""Exception types shared across the engine.

Every error carries a short machine-readable ``code`` (``E_...``) so the CLI
and tests can match on it without parsing messages.
"""


class PepaError(Exception):
    code = "E_GENERIC"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class ModelError(PepaError):
    """Raised when an operation needs a valid model and gets an invalid one."""

    code = "E_INVALID_MODEL"

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class RateError(PepaError):
    code = "E_UNBOUND_RATE"


class ParseError(PepaError):
    code = "E_PARSE"

    def __init__(self, message, span, expected=(), found=""):
        super().__init__(f"{span.line}:{span.column}: {message}")
        self.span = span
        self.expected = frozenset(expected)
        self.found = found


class ConvergenceError(PepaError):
    code = "E_NO_CONVERGENCE"

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NegativePopulationError(PepaError):
    code = "E_NEGATIVE_POP"


class CapExceededError(PepaError):
    code = "E_CAP_EXCEEDED"


class ReducibleChainError(PepaError):
    code = "E_REDUCIBLE"


class MetricsError(PepaError):
    code = "E_METRICS"


class SaturationError(PepaError):
    code = "E_NO_PLATEAU"


class ConfigError(PepaError):
    code = "E_CONFIG"
