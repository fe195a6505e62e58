from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Sequence

import numpy as np
import sympy as sp

import config
from geometry.differentiation import gradient as fd_gradient
from utils.errors import EvalError


def coordinate_symbols(n: int) -> List[sp.Symbol]:
    """Canonical symbols (q1..qn, p1..pn) shared by parsers and catalog systems."""
    names = [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]
    return list(sp.symbols(names, real=True))


class ScalarField(ABC):
    """Smooth function on a chart together with a gradient provider."""

    exact = False

    def __init__(self, dim: int, step: Optional[float] = None, stencil: int = 3):
        self.dim = dim
        self.step = config.TOLERANCES.fd_step if step is None else step
        self.stencil = stencil

    @abstractmethod
    def __call__(self, p) -> float:
        ...

    def grad(self, p) -> np.ndarray:
        return fd_gradient(self, np.asarray(p, dtype=float), self.step, self.stencil)

    def grad_consistency(self, points: np.ndarray) -> float:
        """Largest gap between `grad` and central differences over `points`."""
        worst = 0.0
        for p in np.atleast_2d(points):
            fd = fd_gradient(self, p, self.step)
            worst = max(worst, float(np.max(np.abs(self.grad(p) - fd))))
        return worst


class ExpressionField(ScalarField):
    """
    Field defined by a sympy expression, differentiated exactly.

    Args:
        expr: The expression.
        symbols: Coordinate symbols in chart order (q1..qn, p1..pn).
    """

    exact = True

    def __init__(self, expr, symbols: Sequence[sp.Symbol]):
        super().__init__(len(symbols))
        self.expr = sp.sympify(expr)
        self.symbols = list(symbols)
        self._func = sp.lambdify(self.symbols, self.expr, modules="numpy")
        self._partials = [sp.diff(self.expr, s) for s in self.symbols]
        self._grad = sp.lambdify(self.symbols, self._partials, modules="numpy")

    def _evaluate(self, func: Callable, p):
        z = np.asarray(p, dtype=float)
        try:
            with np.errstate(divide="raise", invalid="raise", over="raise"):
                value = func(*z)
        except (FloatingPointError, ZeroDivisionError, ValueError, OverflowError) as e:
            raise EvalError(f"Cannot evaluate '{self.expr}' at {z.tolist()}: {e}") from e
        out = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(out)):
            raise EvalError(f"'{self.expr}' is not finite at {z.tolist()}.")
        return out

    def __call__(self, p) -> float:
        return float(self._evaluate(self._func, p))

    def grad(self, p) -> np.ndarray:
        return self._evaluate(self._grad, p).reshape(self.dim)

    def derivative(self, index: int) -> "ExpressionField":
        return ExpressionField(self._partials[index], self.symbols)

    def __repr__(self) -> str:
        return f"ExpressionField({self.expr})"


class CallableField(ScalarField):
    """Opaque field; gradient from `grad_func` when given, else central differences."""

    def __init__(self, dim: int, func: Callable[[np.ndarray], float],
                 grad_func: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 step: Optional[float] = None, name: str = "field", stencil: int = 3):
        super().__init__(dim, step, stencil)
        self._func = func
        self._grad_func = grad_func
        self.name = name
        self.exact = grad_func is not None

    def __call__(self, p) -> float:
        return float(self._func(np.asarray(p, dtype=float)))

    def grad(self, p) -> np.ndarray:
        if self._grad_func is not None:
            return np.asarray(self._grad_func(np.asarray(p, dtype=float)), dtype=float)
        return super().grad(p)

    def __repr__(self) -> str:
        return f"CallableField({self.name})"


class ConstantField(ScalarField):
    exact = True

    def __init__(self, dim: int, value: float):
        super().__init__(dim)
        self.value = float(value)

    def __call__(self, p) -> float:
        return self.value

    def grad(self, p) -> np.ndarray:
        return np.zeros(self.dim)


class VectorField(ABC):
    def __init__(self, dim: int):
        self.dim = dim

    @abstractmethod
    def __call__(self, p) -> np.ndarray:
        ...
