"""Radial homotopy operator: a primitive of a closed two-form on a star-shaped box."""
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

import config
from geometry.calculus import ResidualReport, check_closed, map_points
from geometry.forms import OneForm, TwoForm, exterior_derivative
from utils.errors import NotClosed, QuadratureFailure
from utils.logger import get_logger

log = get_logger("Homotopy")

DEFAULT_NODES = 16


def _unit_interval_rule(nodes: int):
    x, w = leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


class HomotopyPrimitive(OneForm):
    """
    K(alpha) about `center`: (K alpha)_x(u) = int_0^1 t * alpha_{c + t(x - c)}(x - c, u) dt.

    For closed alpha on a region star-shaped about c, d(K alpha) = alpha and
    K alpha vanishes at c. The integral uses Gauss-Legendre on [0, 1]; the
    rule with twice the nodes gives the quadrature error estimate.
    """

    def __init__(self, alpha: TwoForm, center: Sequence[float], nodes: int = DEFAULT_NODES):
        super().__init__(alpha.dim)
        self.alpha = alpha
        self.center = np.asarray(center, dtype=float)
        self.nodes = nodes
        self._rule = _unit_interval_rule(nodes)
        self._check_rule = _unit_interval_rule(2 * nodes)

    def _integrate(self, x, rule) -> np.ndarray:
        r = np.asarray(x, dtype=float) - self.center
        out = np.zeros(self.dim)
        if not np.any(r):
            return out
        ts, ws = rule
        for t, w in zip(ts, ws):
            a = self.alpha.matrix(self.center + t * r)
            # covector of alpha(r, .) is r^T A = -A r
            out += w * t * (r @ a)
        if not np.all(np.isfinite(out)):
            raise QuadratureFailure(f"Homotopy integrand is not finite on the ray to {r + self.center}.")
        return out

    def covector(self, p) -> np.ndarray:
        return self._integrate(p, self._rule)

    def quadrature_error(self, p) -> float:
        return float(np.max(np.abs(self._integrate(p, self._check_rule) - self._integrate(p, self._rule))))


def homotopy_primitive(alpha: TwoForm, center: Sequence[float],
                       grid: Optional[np.ndarray] = None,
                       tolerances: config.Tolerances = config.TOLERANCES,
                       nodes: int = DEFAULT_NODES) -> HomotopyPrimitive:
    """
    Primitive K(alpha) of a closed two-form, checked for closedness on `grid` first.

    Raises:
        NotClosed: The closedness residual on `grid` exceeds its threshold.
    """
    if grid is not None and len(grid) and alpha.dim >= 3:
        report = check_closed(alpha, grid, tolerances)
        if not report.passed:
            raise NotClosed(
                f"Two-form is not closed: residual {report.worst_value:.3e} at "
                f"{np.array2string(report.worst_point, precision=6)}.",
                residual=report.worst_value,
            )
    return HomotopyPrimitive(alpha, center, nodes)


def primitive_residual(primitive: HomotopyPrimitive, points: np.ndarray,
                       tolerances: config.Tolerances = config.TOLERANCES,
                       rel_step: float = 1e-3) -> ResidualReport:
    """max |d(K alpha) - alpha| at each point (five-point exterior derivative)."""
    d_beta = exterior_derivative(primitive, rel_step, stencil=5)
    pts = np.atleast_2d(points)
    values = map_points(lambda p: float(np.max(np.abs(d_beta.matrix(p) - primitive.alpha.matrix(p)))), pts)
    report = ResidualReport("primitive", pts, values, tolerances.tol_primitive)
    log.debug(report.summary())
    return report
