from typing import Any, Optional


class MdiError(Exception):
    pass


class IllegalArgumentError(MdiError, ValueError):
    pass


class SupportError(IllegalArgumentError):
    pass


class InvertibilityError(IllegalArgumentError):
    pass


class EvaluationError(MdiError, ValueError):
    pass


class InfeasibleError(MdiError):
    pass


class SlaterError(MdiError):
    pass


class DegenerateSetError(MdiError):
    pass


class NoAcceptanceError(MdiError):
    pass


class SolverError(MdiError):
    pass


class ConvergenceError(SolverError):
    pass


class DivergenceError(SolverError):
    def __init__(self, message: str, iteration: Optional[int] = None) -> None:
        super().__init__(message)
        self.iteration = iteration


class CertificateError(SolverError):
    """Solver finished without meeting its feasibility certificate.

    The partial result is kept on the exception for reporting.
    """

    def __init__(self, message: str, partial: Any = None) -> None:
        super().__init__(message)
        self.partial = partial
