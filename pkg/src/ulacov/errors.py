"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class UlacovError(Exception):
    """Base class for all errors raised by ulacov."""


class ConfigurationError(UlacovError, ValueError):
    """Invalid run parameters (step size too large, epsilon out of range, ...).

    The CLI maps this to exit code 2.
    """


class InputError(UlacovError, ValueError):
    """Malformed data handed to an operation (shape mismatch, empty block)."""


class NumericalError(UlacovError, ArithmeticError):
    """A non-finite value appeared during a computation."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class RuntimeCapExceeded(UlacovError):
    """The harness refused a run whose gradient-evaluation count exceeds the cap.

    The CLI maps this to exit code 3.
    """

    def __init__(self, estimate, cap):
        super().__init__(
            f"run needs {estimate:.3e} gradient evaluations, cap is {cap:.3e}"
        )
        self.estimate = estimate
        self.cap = cap
