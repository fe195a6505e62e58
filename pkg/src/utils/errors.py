"""Exception hierarchy shared by every package.

Each error may carry a `stage` naming the pipeline step it came from and a
`details` dict with the numbers that made it fail.
"""
from typing import Any, Dict, Optional, Sequence


class SymplecticToolkitError(Exception):
    """Base class for all toolkit errors."""

    def __init__(self, message: str, stage: Optional[str] = None, **details: Any):
        super().__init__(message)
        self.message = message
        self.stage = stage
        self.details: Dict[str, Any] = details

    def with_stage(self, stage: str) -> "SymplecticToolkitError":
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self) -> str:
        prefix = f"[{self.stage}] " if self.stage else ""
        return f"{prefix}{self.message}"


class SingularForm(SymplecticToolkitError):
    pass


class OutOfDomain(SymplecticToolkitError):
    pass


class LeftDomain(SymplecticToolkitError):
    def __init__(self, message: str, t_exit: float, **kwargs: Any):
        super().__init__(message, t_exit=t_exit, **kwargs)
        self.t_exit = t_exit


class StepFailure(SymplecticToolkitError):
    pass


class NotRegular(SymplecticToolkitError):
    pass


class SearchExhausted(SymplecticToolkitError):
    def __init__(self, message: str, horizon: float, **kwargs: Any):
        super().__init__(message, horizon=horizon, **kwargs)
        self.horizon = horizon


class NotClosed(SymplecticToolkitError):
    def __init__(self, message: str, residual: float, **kwargs: Any):
        super().__init__(message, residual=residual, **kwargs)
        self.residual = residual


class QuadratureFailure(SymplecticToolkitError):
    pass


class NewtonDivergence(SymplecticToolkitError):
    pass


class InversionFailure(SymplecticToolkitError):
    def __init__(self, message: str, sub_box: Optional[Sequence] = None, **kwargs: Any):
        super().__init__(message, sub_box=sub_box, **kwargs)
        self.sub_box = sub_box


class RankDeficient(SymplecticToolkitError):
    pass


class NoIndependentCandidate(SymplecticToolkitError):
    pass


class UnknownSystem(SymplecticToolkitError):
    pass


class EvalError(SymplecticToolkitError):
    pass


class ParseError(SymplecticToolkitError):
    def __init__(self, message: str, line: int, column: int,
                 expected: Optional[str] = None, **kwargs: Any):
        super().__init__(message, line=line, column=column, expected=expected, **kwargs)
        self.line = line
        self.column = column
        self.expected = expected

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}: {self.message}"


class ValidationError(SymplecticToolkitError):
    def __init__(self, message: str, line: Optional[int] = None, **kwargs: Any):
        super().__init__(message, line=line, **kwargs)
        self.line = line


class PipelineError(SymplecticToolkitError):
    pass
