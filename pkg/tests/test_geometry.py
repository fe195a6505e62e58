import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from geometry.calculus import (
    ResidualReport,
    check_closed,
    check_nondegenerate,
    hamiltonian_vector_field,
    jacobi_residual,
    poisson_bracket,
)
from geometry.chart import ChartDomain
from geometry.fields import CallableField, ExpressionField, coordinate_symbols
from geometry.forms import (
    SymplecticStructure,
    evaluate_form,
    exact_two_form,
    pullback_two_form,
    standard_matrix,
    symplectic_basis,
)
from utils.errors import EvalError, OutOfDomain, SingularForm, ValidationError


def random_form(seed: int, n: int) -> np.ndarray:
    a = np.random.default_rng(seed).normal(size=(2 * n, 2 * n))
    return a - a.T


def test_bracket_of_q_and_p_is_one(rng):
    q, p = coordinate_symbols(1)
    omega = SymplecticStructure.standard(1)
    fq, fp = ExpressionField(q, [q, p]), ExpressionField(p, [q, p])
    for z in rng.uniform(-5, 5, size=(100, 2)):
        assert abs(poisson_bracket(omega, fq, fp, z) - 1.0) <= 1e-12


def test_oscillator_field_rotates_clockwise_in_q_p():
    q, p = coordinate_symbols(1)
    h = ExpressionField((q ** 2 + p ** 2) / 2, [q, p])
    x = hamiltonian_vector_field(SymplecticStructure.standard(1), h, [0.3, -0.7])
    np.testing.assert_allclose(x, [0.7, 0.3], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.sampled_from([2, 3]))
def test_field_matches_dense_solve_for_constant_forms(seed, n):
    w = random_form(seed, n)
    assume(np.linalg.cond(w) < 1e3)
    rng = np.random.default_rng(seed + 1)
    coeffs = rng.normal(size=2 * n)
    symbols = coordinate_symbols(n)
    f = ExpressionField(sum(sp.Float(c) * s for c, s in zip(coeffs, symbols)), symbols)
    z = rng.uniform(-1, 1, size=2 * n)
    x = hamiltonian_vector_field(SymplecticStructure.constant(w), f, z)
    reference = np.linalg.solve(w.T, -coeffs)
    assert np.max(np.abs(x - reference)) <= 1e-12 * (1.0 + np.max(np.abs(reference)))


def test_bracket_is_antisymmetric(rng):
    symbols = coordinate_symbols(2)
    q1, q2, p1, p2 = symbols
    omega = SymplecticStructure.from_expressions({(0, 2): 1 + q1 ** 2, (1, 3): 1}, symbols)
    f = ExpressionField(q1 * p2 + sp.sin(p1), symbols)
    g = ExpressionField(q2 ** 2 - p1 * p2, symbols)
    for z in rng.uniform(-1, 1, size=(20, 4)):
        assert poisson_bracket(omega, f, g, z) == -poisson_bracket(omega, g, f, z)


def test_bracket_with_callable_fields_uses_finite_differences(rng):
    q, p = coordinate_symbols(1)
    omega = SymplecticStructure.standard(1)
    exact = ExpressionField(q * p ** 2, [q, p])
    opaque = CallableField(2, lambda z: z[0] * z[1] ** 2)
    g = ExpressionField(q ** 2, [q, p])
    for z in rng.uniform(-1, 1, size=(10, 2)):
        assert poisson_bracket(omega, opaque, g, z) == pytest.approx(poisson_bracket(omega, exact, g, z), abs=1e-7)


def test_exact_forms_are_closed(rng):
    symbols = coordinate_symbols(2)
    beta = [sum(sp.Integer(int(c)) * s * t for c, s, t in zip(rng.integers(-3, 4, size=4), symbols, symbols[::-1]))
            for _ in range(4)]
    alpha = exact_two_form(beta, symbols)
    report = check_closed(alpha, ChartDomain.cube(2, 1.0).grid(3))
    assert report.passed
    assert report.worst_value <= 1e-12


def test_non_closed_form_fails_with_unit_residual(non_closed):
    report = check_closed(non_closed, ChartDomain.cube(2, 1.0).grid(3))
    assert not report.passed
    assert report.worst_value == pytest.approx(1.0, abs=1e-9)


def test_jacobi_identity_holds_only_for_closed_forms(rng, non_closed):
    symbols = coordinate_symbols(2)
    q1, q2, p1, p2 = symbols
    f, g, h = (ExpressionField(e, symbols) for e in (q1, p1, p2))
    points = rng.uniform(-1, 1, size=(5, 4))
    closed = SymplecticStructure.from_expressions({(0, 2): 1 + q1 ** 2, (1, 3): 1}, symbols)
    assert jacobi_residual(closed, f, g, h, points).passed
    broken = jacobi_residual(non_closed, f, g, h, points)
    assert np.all(broken.values > 0.5)


def test_nonstandard_form_determinant():
    q, p = coordinate_symbols(1)
    omega = SymplecticStructure.from_expressions({(0, 1): 1 + q ** 2}, [q, p])
    report = check_nondegenerate(omega, np.array([[2.0, 0.0], [0.0, 1.0]]))
    assert report.passed
    np.testing.assert_allclose(report.values, [25.0, 1.0])
    assert omega.matrix([2.0, 0.0])[0, 1] == 5.0


def test_degenerate_form_is_flagged():
    q, p = coordinate_symbols(1)
    omega = SymplecticStructure.from_expressions({(0, 1): q}, [q, p])
    report = check_nondegenerate(omega, ChartDomain.cube(1, 1.0).grid(3))
    assert not report.passed
    assert report.worst_value == 0.0
    with pytest.raises(SingularForm):
        hamiltonian_vector_field(omega, ExpressionField(p, [q, p]), [0.0, 0.5])


def test_points_outside_the_form_chart_are_rejected():
    q, p = coordinate_symbols(1)
    omega = SymplecticStructure.standard(1, ChartDomain.cube(1, 1.0))
    with pytest.raises(OutOfDomain):
        hamiltonian_vector_field(omega, ExpressionField(p, [q, p]), [2.0, 0.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.sampled_from([1, 2, 3]))
def test_symplectic_basis_brings_constant_forms_to_standard(seed, n):
    w = random_form(seed, n)
    assume(np.linalg.cond(w) < 1e4)
    b = symplectic_basis(w)
    np.testing.assert_allclose(b.T @ w @ b, standard_matrix(n), atol=1e-9)


def test_symplectic_basis_rejects_degenerate_matrices():
    w = np.zeros((4, 4))
    w[0, 2], w[2, 0] = 1.0, -1.0
    with pytest.raises(SingularForm):
        symplectic_basis(w)


def test_pullback_under_linear_map():
    a = np.array([[2.0, 1.0], [0.0, 3.0]])
    pulled = pullback_two_form(lambda x: a @ x, SymplecticStructure.standard(1), lambda x: a)
    np.testing.assert_allclose(pulled.matrix(np.zeros(2)), a.T @ standard_matrix(1) @ a)
    assert evaluate_form(pulled, np.zeros(2), [1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.linalg.det(a))


def test_expression_field_evaluation_errors():
    q, p = coordinate_symbols(1)
    with pytest.raises(EvalError):
        ExpressionField(1 / q, [q, p])([0.0, 1.0])
    with pytest.raises(EvalError):
        ExpressionField(sp.sqrt(q), [q, p])([-1.0, 0.0])


def test_expression_field_gradient_is_exact():
    q, p = coordinate_symbols(1)
    f = ExpressionField(sp.sin(q) * p ** 3, [q, p])
    np.testing.assert_allclose(f.grad([0.5, 2.0]), [np.cos(0.5) * 8.0, np.sin(0.5) * 12.0])
    assert f.grad_consistency(np.array([[0.5, 2.0]])) <= 1e-6


def test_periodic_axes_wrap_distances():
    chart = ChartDomain.box(1, [(-np.pi, np.pi), (-1.0, 1.0)], periods=(2 * np.pi, None))
    assert chart.distance([np.pi - 0.1, 0.0], [-np.pi + 0.1, 0.0]) == pytest.approx(0.2)
    assert chart.contains([10.0, 0.5])
    assert not chart.contains([0.0, 1.5])


def test_chart_validation():
    with pytest.raises(ValidationError):
        ChartDomain.box(1, [(0.0, 1.0)])
    with pytest.raises(ValidationError):
        ChartDomain.box(1, [(0.0, 1.0), (2.0, 1.0)])


def test_lower_bound_reports():
    report = ResidualReport("det", np.zeros((3, 2)), np.array([1.0, 0.5, 2.0]), 0.75, bound="lower")
    assert not report.passed
    assert report.worst_value == 0.5
    assert len(report.flagged) == 1
