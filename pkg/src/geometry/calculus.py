"""Hamiltonian vector fields, Poisson brackets and form checks.

Sign convention (used everywhere): i_X w = -df. With w(u, v) = u^T W v this
means W^T X = -grad f, and {f, g} = w(X_f, X_g) = X_f(g). For w = dq ^ dp this
gives X_q = d/dp, X_p = -d/dq and {q, p} = +1.
"""
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

import config
from geometry.fields import CallableField, ScalarField, VectorField
from geometry.forms import TwoForm
from utils.errors import OutOfDomain, SingularForm
from utils.logger import get_logger

log = get_logger("Geometry")


@dataclass(eq=False)
class ResidualReport:
    """
    Per-point values of a named check against a threshold.

    `bound="upper"` means values must stay at or below the threshold,
    `bound="lower"` means at or above (e.g. determinant magnitudes).
    """
    check: str
    points: np.ndarray
    values: np.ndarray
    threshold: float
    bound: str = "upper"
    notes: Dict[str, object] = field(default_factory=dict)

    @property
    def point_passed(self) -> np.ndarray:
        if self.bound == "lower":
            return self.values >= self.threshold
        return self.values <= self.threshold

    @property
    def passed(self) -> bool:
        return bool(np.all(self.point_passed))

    @property
    def worst_index(self) -> int:
        if self.values.size == 0:
            return -1
        return int(np.argmin(self.values) if self.bound == "lower" else np.argmax(self.values))

    @property
    def worst_value(self) -> float:
        if self.values.size == 0:
            return 0.0
        return float(self.values[self.worst_index])

    @property
    def worst_point(self) -> Optional[np.ndarray]:
        return None if self.values.size == 0 else self.points[self.worst_index]

    @property
    def flagged(self) -> np.ndarray:
        return self.points[~self.point_passed]

    def rows(self) -> List[dict]:
        rows = []
        for point, value, ok in zip(self.points, self.values, self.point_passed):
            row = {"check": self.check}
            row.update({f"z{i + 1}": float(c) for i, c in enumerate(point)})
            row.update({"value": float(value), "threshold": self.threshold, "pass": bool(ok)})
            rows.append(row)
        return rows

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        relation = ">=" if self.bound == "lower" else "<="
        return (f"{self.check}: worst {self.worst_value:.3e} ({relation} {self.threshold:.1e} required) "
                f"over {len(self.values)} points -> {status}")


def map_points(func, points: np.ndarray, n_jobs: Optional[int] = None) -> np.ndarray:
    """Evaluate `func` on every row of `points`, optionally on a thread pool."""
    jobs = config.N_JOBS if n_jobs is None else n_jobs
    pts = np.atleast_2d(points)
    if jobs == 1 or len(pts) < 2:
        return np.array([func(p) for p in pts], dtype=float)
    results = Parallel(n_jobs=jobs, prefer="threads")(delayed(func)(p) for p in pts)
    return np.array(results, dtype=float)


def checked_matrix(omega: TwoForm, p, floor: float, enforce_domain: bool = True) -> np.ndarray:
    z = np.asarray(p, dtype=float)
    if enforce_domain and omega.domain is not None and not omega.domain.contains(z):
        raise OutOfDomain(f"Point {z.tolist()} lies outside the chart of the form.")
    w = omega.matrix(z)
    det = np.linalg.det(w)
    if not abs(det) >= floor:
        raise SingularForm(f"Form is degenerate at {z.tolist()}: |det| = {abs(det):.3e} < {floor:.1e}.",
                           point=z.tolist(), det=float(det))
    return w


def solve_hamiltonian(w: np.ndarray, grad: np.ndarray, tol: float) -> np.ndarray:
    """Solve W^T X = -grad, with one refinement step when the residual is large."""
    rhs = -np.asarray(grad, dtype=float)
    x = np.linalg.solve(w.T, rhs)
    residual = w.T @ x - rhs
    scale = 1.0 + np.linalg.norm(rhs)
    if np.linalg.norm(residual) > tol * scale:
        x = x - np.linalg.solve(w.T, residual)
        residual = w.T @ x - rhs
        if np.linalg.norm(residual) > tol * scale:
            log.debug(f"Hamiltonian solve residual {np.linalg.norm(residual):.2e} above {tol:.1e}")
    return x


def hamiltonian_vector_field(omega: TwoForm, f: ScalarField, p,
                             tolerances: config.Tolerances = config.TOLERANCES,
                             enforce_domain: bool = True) -> np.ndarray:
    """
    Value at `p` of the Hamiltonian vector field X_f, the solution of i_X w = -df.

    Args:
        omega: Symplectic form.
        f: Hamiltonian function.
        p: Chart point.
        tolerances: Solve tolerance and nondegeneracy floor.
        enforce_domain: Reject points outside the form's chart. Integrators turn
            this off and detect chart exits with events instead.

    Returns:
        np.ndarray: X_f(p).

    Raises:
        SingularForm: |det W(p)| below the nondegeneracy floor.
        OutOfDomain: `p` outside the form's chart.
    """
    w = checked_matrix(omega, p, tolerances.nondegeneracy_floor, enforce_domain)
    return solve_hamiltonian(w, f.grad(p), tolerances.tol_solve)


class HamiltonianVectorField(VectorField):
    def __init__(self, omega: TwoForm, f: ScalarField,
                 tolerances: config.Tolerances = config.TOLERANCES,
                 enforce_domain: bool = True):
        super().__init__(omega.dim)
        self.omega = omega
        self.f = f
        self.tolerances = tolerances
        self.enforce_domain = enforce_domain

    def __call__(self, p) -> np.ndarray:
        return hamiltonian_vector_field(self.omega, self.f, p, self.tolerances, self.enforce_domain)


def poisson_bracket(omega: TwoForm, f1: ScalarField, f2: ScalarField, p,
                    tolerances: config.Tolerances = config.TOLERANCES) -> float:
    """
    {f1, f2}(p) = w_p(X_f1, X_f2).

    Both orderings of the contraction are averaged, so swapping the arguments
    flips the sign exactly.
    """
    w = checked_matrix(omega, p, tolerances.nondegeneracy_floor)
    x1 = solve_hamiltonian(w, f1.grad(p), tolerances.tol_solve)
    x2 = solve_hamiltonian(w, f2.grad(p), tolerances.tol_solve)
    return 0.5 * (float(x1 @ w @ x2) - float(x2 @ w @ x1))


def bracket_field(omega: TwoForm, f1: ScalarField, f2: ScalarField,
                  tolerances: config.Tolerances = config.TOLERANCES) -> ScalarField:
    """{f1, f2} as an opaque scalar field (finite-difference gradient)."""
    return CallableField(omega.dim, lambda z: poisson_bracket(omega, f1, f2, z, tolerances),
                         name=f"{{{f1!r}, {f2!r}}}")


def check_closed(omega: TwoForm, grid: np.ndarray,
                 tolerances: config.Tolerances = config.TOLERANCES) -> ResidualReport:
    """
    Closedness residual max_{i<j<k} |d_i w_jk + d_j w_ki + d_k w_ij| at every grid point.

    The threshold is `tol_closed` for exact coefficient derivatives and
    `tol_closed_fd` when derivatives come from finite differences.
    """
    points = np.atleast_2d(grid)
    triples = list(combinations(range(omega.dim), 3))

    def residual(p):
        if not triples:
            return 0.0
        d = omega.partials(p)
        return max(abs(d[i, j, k] + d[j, k, i] + d[k, i, j]) for i, j, k in triples)

    values = map_points(residual, points)
    threshold = tolerances.tol_closed if omega.exact_partials else tolerances.tol_closed_fd
    report = ResidualReport("closed", points, values, threshold)
    log.info(report.summary())
    return report


def check_nondegenerate(omega: TwoForm, grid: np.ndarray,
                        tolerances: config.Tolerances = config.TOLERANCES) -> ResidualReport:
    points = np.atleast_2d(grid)
    values = map_points(lambda p: abs(np.linalg.det(omega.matrix(p))), points)
    report = ResidualReport("nondegenerate", points, values,
                            tolerances.nondegeneracy_floor, bound="lower")
    if not report.passed:
        log.warning(f"⚠️ {len(report.flagged)} point(s) below the nondegeneracy floor.")
    log.info(report.summary())
    return report


def jacobi_residual(omega: TwoForm, f: ScalarField, g: ScalarField, h: ScalarField,
                    points: np.ndarray,
                    tolerances: config.Tolerances = config.TOLERANCES) -> ResidualReport:
    """|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}| at each point; vanishes iff w is closed."""
    gh = bracket_field(omega, g, h, tolerances)
    hf = bracket_field(omega, h, f, tolerances)
    fg = bracket_field(omega, f, g, tolerances)

    def residual(p):
        return abs(poisson_bracket(omega, f, gh, p, tolerances)
                   + poisson_bracket(omega, g, hf, p, tolerances)
                   + poisson_bracket(omega, h, fg, p, tolerances))

    pts = np.atleast_2d(points)
    return ResidualReport("jacobi", pts, map_points(residual, pts), tolerances.tol_jacobi)


def field_matrix(omega: TwoForm, fields: Sequence[ScalarField], p,
                 tolerances: config.Tolerances = config.TOLERANCES,
                 enforce_domain: bool = False) -> np.ndarray:
    """Columns X_f1(p) .. X_fk(p), shape (dim, k)."""
    w = checked_matrix(omega, p, tolerances.nondegeneracy_floor, enforce_domain)
    return np.column_stack([solve_hamiltonian(w, f.grad(p), tolerances.tol_solve) for f in fields])
