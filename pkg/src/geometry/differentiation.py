"""Finite-difference derivative providers.

Opaque fields use central differences with a per-axis step h*(1+|z_i|).
Maps that go through numerical flows use a five-point stencil with a larger
step so integrator noise does not dominate the derivative.
"""
from typing import Callable

import numpy as np


def axis_steps(x: np.ndarray, rel_step: float) -> np.ndarray:
    return rel_step * (1.0 + np.abs(x))


def derivative_along(func: Callable[[np.ndarray], np.ndarray], x, direction,
                     step: float, stencil: int = 3) -> np.ndarray:
    """
    d/ds func(x + s*direction) at s=0.

    Args:
        func: Map R^d -> R^m (scalars are treated as m=1).
        x: Evaluation point.
        direction: Direction vector (not normalised).
        step: Step in s.
        stencil: 3 (second order) or 5 (fourth order).

    Returns:
        np.ndarray: Derivative of shape (m,).
    """
    x = np.asarray(x, dtype=float)
    v = step * np.asarray(direction, dtype=float)
    if stencil == 3:
        plus = np.atleast_1d(func(x + v))
        minus = np.atleast_1d(func(x - v))
        return (plus - minus) / (2.0 * step)
    if stencil == 5:
        p1 = np.atleast_1d(func(x + v))
        m1 = np.atleast_1d(func(x - v))
        p2 = np.atleast_1d(func(x + 2.0 * v))
        m2 = np.atleast_1d(func(x - 2.0 * v))
        return (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * step)
    raise ValueError(f"Unsupported stencil {stencil}; use 3 or 5.")


def jacobian(func: Callable[[np.ndarray], np.ndarray], x, rel_step: float,
             stencil: int = 3) -> np.ndarray:
    """Jacobian of `func` at `x`, shape (m, len(x)), axis step rel_step*(1+|x_i|)."""
    x = np.asarray(x, dtype=float)
    steps = axis_steps(x, rel_step)
    columns = []
    for i, h in enumerate(steps):
        e = np.zeros_like(x)
        e[i] = 1.0
        columns.append(derivative_along(func, x, e, h, stencil))
    return np.stack(columns, axis=-1)


def gradient(func: Callable[[np.ndarray], float], x, rel_step: float,
             stencil: int = 3) -> np.ndarray:
    return jacobian(func, x, rel_step, stencil)[0]
