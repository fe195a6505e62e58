"""One- and two-forms on a chart.

Two-forms are stored as strictly upper-triangular coefficients; the full
matrix is always rebuilt as U - U^T, so antisymmetry holds by construction.
With this representation w(u, v) = u^T W v.
"""
from abc import ABC, abstractmethod
from itertools import combinations
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from scipy.linalg import schur

import config
from geometry.chart import ChartDomain
from geometry.differentiation import jacobian
from geometry.fields import ConstantField, ExpressionField, ScalarField
from utils.errors import OutOfDomain, SingularForm, ValidationError


def standard_matrix(n: int) -> np.ndarray:
    """Matrix of sum_i dq_i ^ dp_i in (q, p) ordering."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


class OneForm(ABC):
    def __init__(self, dim: int):
        self.dim = dim

    @abstractmethod
    def covector(self, p) -> np.ndarray:
        ...

    def __call__(self, p) -> np.ndarray:
        return self.covector(p)


class TwoForm(ABC):
    """Antisymmetric matrix field W(z) with w_z(u, v) = u^T W(z) v."""

    exact_partials = False

    def __init__(self, dim: int, domain: Optional[ChartDomain] = None,
                 step: Optional[float] = None):
        self.dim = dim
        self.domain = domain
        self.step = config.TOLERANCES.fd_step if step is None else step

    @abstractmethod
    def upper(self, p) -> np.ndarray:
        """Strictly upper-triangular coefficients at `p`."""

    def matrix(self, p) -> np.ndarray:
        u = np.triu(self.upper(p), 1)
        return u - u.T

    def partials(self, p) -> np.ndarray:
        """Array D with D[k] = dW/dz_k, shape (dim, dim, dim)."""
        p = np.asarray(p, dtype=float)
        jac = jacobian(lambda z: self.matrix(z).ravel(), p, self.step)
        return np.moveaxis(jac.reshape(self.dim, self.dim, self.dim), -1, 0)


class CoefficientTwoForm(TwoForm):
    """
    Two-form given by scalar coefficient fields w_ij for i < j.

    Args:
        dim: Chart dimension.
        coefficients: Mapping (i, j) -> ScalarField, 0-based with i < j; missing pairs are zero.
        domain: Optional chart the form lives on.
    """

    def __init__(self, dim: int, coefficients: Mapping[Tuple[int, int], ScalarField],
                 domain: Optional[ChartDomain] = None):
        super().__init__(dim, domain)
        self.coefficients: Dict[Tuple[int, int], ScalarField] = {}
        for (i, j), coeff in coefficients.items():
            if not 0 <= i < j < dim:
                raise ValidationError(
                    f"Coefficient index ({i + 1},{j + 1}) must satisfy 1 <= i < j <= {dim}."
                )
            self.coefficients[(i, j)] = coeff
        self.exact_partials = all(c.exact for c in self.coefficients.values())
        self._constant = all(isinstance(c, ConstantField) for c in self.coefficients.values())
        self._cached_upper = self._evaluate_upper(np.zeros(dim)) if self._constant else None

    def _evaluate_upper(self, p) -> np.ndarray:
        u = np.zeros((self.dim, self.dim))
        for (i, j), coeff in self.coefficients.items():
            u[i, j] = coeff(p)
        return u

    def upper(self, p) -> np.ndarray:
        if self._cached_upper is not None:
            return self._cached_upper.copy()
        return self._evaluate_upper(p)

    def partials(self, p) -> np.ndarray:
        d = np.zeros((self.dim, self.dim, self.dim))
        for (i, j), coeff in self.coefficients.items():
            g = coeff.grad(p)
            d[:, i, j] = g
            d[:, j, i] = -g
        return d


class MatrixTwoForm(TwoForm):
    """Two-form from a matrix-valued callable; only its upper triangle is kept."""

    def __init__(self, dim: int, func: Callable[[np.ndarray], np.ndarray],
                 domain: Optional[ChartDomain] = None, step: Optional[float] = None):
        super().__init__(dim, domain, step)
        self._func = func

    def upper(self, p) -> np.ndarray:
        return np.triu(np.asarray(self._func(np.asarray(p, dtype=float)), dtype=float), 1)


class SymplecticStructure(TwoForm):
    """A two-form with closedness and nondegeneracy contracts (see geometry.calculus)."""

    def __init__(self, form: TwoForm, domain: Optional[ChartDomain] = None):
        if form.dim % 2:
            raise ValidationError(f"A symplectic form needs even dimension, got {form.dim}.")
        super().__init__(form.dim, domain or form.domain, form.step)
        self.form = form
        self.exact_partials = form.exact_partials

    @property
    def n(self) -> int:
        return self.dim // 2

    def upper(self, p) -> np.ndarray:
        return self.form.upper(p)

    def partials(self, p) -> np.ndarray:
        return self.form.partials(p)

    @classmethod
    def constant(cls, matrix, domain: Optional[ChartDomain] = None) -> "SymplecticStructure":
        m = np.asarray(matrix, dtype=float)
        dim = m.shape[0]
        coeffs = {(i, j): ConstantField(dim, m[i, j])
                  for i, j in combinations(range(dim), 2) if m[i, j] != 0.0}
        return cls(CoefficientTwoForm(dim, coeffs, domain))

    @classmethod
    def standard(cls, n: int, domain: Optional[ChartDomain] = None) -> "SymplecticStructure":
        return cls.constant(standard_matrix(n), domain)

    @classmethod
    def from_expressions(cls, entries: Mapping[Tuple[int, int], object],
                         symbols: Sequence[sp.Symbol],
                         domain: Optional[ChartDomain] = None) -> "SymplecticStructure":
        dim = len(symbols)
        coeffs: Dict[Tuple[int, int], ScalarField] = {}
        for key, expr in entries.items():
            expr = sp.sympify(expr)
            coeffs[key] = (ConstantField(dim, float(expr)) if not expr.free_symbols
                           else ExpressionField(expr, symbols))
        return cls(CoefficientTwoForm(dim, coeffs, domain))

    @classmethod
    def from_matrix_function(cls, dim: int, func: Callable[[np.ndarray], np.ndarray],
                             domain: Optional[ChartDomain] = None,
                             step: Optional[float] = None) -> "SymplecticStructure":
        return cls(MatrixTwoForm(dim, func, domain, step))


def evaluate_form(form, p, *vectors) -> float:
    """Evaluate a one-form on one vector or a two-form on two vectors at `p`."""
    if isinstance(form, OneForm):
        if len(vectors) != 1:
            raise ValueError("A one-form takes exactly one vector.")
        return float(form.covector(p) @ np.asarray(vectors[0], dtype=float))
    if isinstance(form, TwoForm):
        if len(vectors) != 2:
            raise ValueError("A two-form takes exactly two vectors.")
        u, v = (np.asarray(x, dtype=float) for x in vectors)
        return float(u @ form.matrix(p) @ v)
    raise TypeError(f"Cannot evaluate {type(form).__name__} as a form.")


def pullback_two_form(phi: Callable[[np.ndarray], np.ndarray], form: TwoForm,
                      phi_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                      rel_step: Optional[float] = None, stencil: int = 3,
                      domain: Optional[ChartDomain] = None) -> TwoForm:
    """
    Pullback of `form` under `phi`: (phi* w)_x(u, v) = w_phi(x)(D phi u, D phi v).

    Args:
        phi: The map, from a chart of the same dimension into `form`'s chart.
        form: The two-form being pulled back.
        phi_jacobian: Exact Jacobian provider; finite differences are used otherwise.
        rel_step: Relative finite-difference step.
        stencil: Finite-difference stencil (3 or 5).
        domain: Chart of the source space, if any.

    Returns:
        TwoForm: The pulled-back form.
    """
    step = config.TOLERANCES.fd_step if rel_step is None else rel_step

    def pulled(x: np.ndarray) -> np.ndarray:
        y = np.asarray(phi(x), dtype=float)
        if form.domain is not None and not form.domain.contains(y):
            raise OutOfDomain(f"Map sends {x.tolist()} outside the target chart.")
        jac = phi_jacobian(x) if phi_jacobian is not None else jacobian(phi, x, step, stencil)
        return jac.T @ form.matrix(y) @ jac

    return MatrixTwoForm(form.dim, pulled, domain)


def exterior_derivative(beta: OneForm, rel_step: Optional[float] = None,
                        stencil: int = 5) -> TwoForm:
    """(d beta)_ij = d_i beta_j - d_j beta_i by finite differences."""
    step = config.TOLERANCES.fd_step if rel_step is None else rel_step

    def d_beta(x: np.ndarray) -> np.ndarray:
        jac = jacobian(beta.covector, x, step, stencil)  # jac[j, i] = d_i beta_j
        return jac.T - jac

    return MatrixTwoForm(beta.dim, d_beta)


def exact_two_form(beta: Sequence[object], symbols: Sequence[sp.Symbol],
                   domain: Optional[ChartDomain] = None) -> CoefficientTwoForm:
    """Symbolic d(beta) for a one-form with expression components."""
    dim = len(symbols)
    comps = [sp.sympify(b) for b in beta]
    coeffs: Dict[Tuple[int, int], ScalarField] = {}
    for i, j in combinations(range(dim), 2):
        expr = sp.expand(sp.diff(comps[j], symbols[i]) - sp.diff(comps[i], symbols[j]))
        if expr != 0:
            coeffs[(i, j)] = ExpressionField(expr, symbols)
    return CoefficientTwoForm(dim, coeffs, domain)


def symplectic_basis(matrix) -> np.ndarray:
    """
    Linear Darboux basis B of a constant nondegenerate antisymmetric matrix W.

    Uses the real Schur form W = Z T Z^T, whose 2x2 blocks are rescaled and
    reordered so that B^T W B is the standard block [[0, I], [-I, 0]].
    Coordinates x = B^{-1} z are then Darboux coordinates.
    """
    w = np.asarray(matrix, dtype=float)
    dim = w.shape[0]
    if dim % 2 or w.shape != (dim, dim):
        raise ValidationError(f"Expected a square matrix of even size, got {w.shape}.")
    t, z = schur(0.5 * (w - w.T), output="real")
    n = dim // 2
    e_cols, f_cols = [], []
    i = 0
    while i < dim:
        if i + 1 >= dim or abs(t[i + 1, i]) < 1e-300:
            raise SingularForm("Form is degenerate: real Schur form has a zero block.")
        b = 0.5 * (t[i, i + 1] - t[i + 1, i])
        u, v = z[:, i], z[:, i + 1]
        if b < 0:
            u, v, b = v, u, -b
        scale = np.sqrt(b)
        e_cols.append(u / scale)
        f_cols.append(v / scale)
        i += 2
    if len(e_cols) != n:
        raise SingularForm("Form is degenerate.")
    return np.column_stack(e_cols + f_cols)
