"""DPM (Diamond Polymer Moments) - Custom Exceptions"""


class DPMException(Exception):
    """Base exception for DPM"""

    exit_code = 1

    def __init__(self, message: str, error_code: str = None, **context):
        self.error_code = error_code
        self.context = context
        for key, value in context.items():
            setattr(self, key, value)
        super().__init__(f"[{error_code}] {message}" if error_code else message)


class ConfigurationError(DPMException):
    """Configuration related errors"""

    exit_code = 2

    def __init__(self, message: str, key: str = None):
        super().__init__(message, error_code="CONFIG", key=key)


class DomainError(DPMException, ValueError):
    """Argument outside the domain of an operation"""

    exit_code = 2

    def __init__(self, message: str, value=None):
        super().__init__(message, error_code="DOMAIN", value=value)


class NotConvergedError(DPMException):
    """Ladder / series / root-find exhausted before tolerance"""

    exit_code = 3

    def __init__(self, message: str, achieved: float = None, n: int = None, **context):
        super().__init__(message, error_code="NOT_CONVERGED", achieved=achieved, n=n, **context)


class SeriesDivergedError(NotConvergedError):
    """Running product of a moment series exceeded 1"""

    def __init__(self, message: str, k: int = None, product: float = None):
        super().__init__(message, k=k, product=product)


class IterationOverflow(DPMException, OverflowError):
    """Iterate left the float range (super-exponential growth)"""

    exit_code = 3

    def __init__(self, message: str, steps_completed: int = 0):
        super().__init__(message, error_code="OVERFLOW", steps_completed=steps_completed)


class BudgetExceededError(DPMException):
    """Work budget exceeded"""

    exit_code = 4

    def __init__(self, message: str, required: int = None, budget: int = None):
        super().__init__(message, error_code="BUDGET", required=required, budget=budget)


class CapExceededError(BudgetExceededError):
    """Practical cap exceeded (polynomial size, enumeration count)"""
    pass


class StructureError(DPMException):
    """Polynomial structure violated"""

    exit_code = 5

    def __init__(self, message: str, m: int = None):
        super().__init__(message, error_code="STRUCTURE", m=m)


class TooFewSamplesError(DPMException):
    """Not enough samples for moment estimation"""

    exit_code = 2

    def __init__(self, message: str, count: int = 0):
        super().__init__(message, error_code="SAMPLES", count=count)


class VerificationFailure(DPMException):
    """One or more verification checks failed"""

    exit_code = 5

    def __init__(self, message: str, failed: list = None):
        super().__init__(message, error_code="VERIFY", failed=failed or [])
