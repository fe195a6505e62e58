import numpy as np
import pytest

from flows.action import (
    commutation_report,
    conservation_report,
    flow_commutation_report,
    integrate_flow,
    isotropy_check,
    joint_action,
    order_permutation_residual,
    orbit_times,
    single_flow_return,
    symplectic_action_residual,
)
from flows.integrator import FlowParams, integrate_trajectory, integrate_vector_field
from flows.system import IntegrableSystemSpec, momentum_map, regularity, require_regular
from geometry.chart import ChartDomain
from geometry.fields import ExpressionField, coordinate_symbols
from geometry.forms import SymplecticStructure
from systems import catalog, oracles
from utils.errors import LeftDomain, NotRegular, OutOfDomain, StepFailure, ValidationError


CATALOG = {entry.identifier: entry for entry in catalog.catalog()}


def bracket_system(second):
    symbols = coordinate_symbols(2)
    q1 = symbols[0]
    chart = ChartDomain.cube(2, 1.0)
    hams = (ExpressionField(q1, symbols), ExpressionField(second(*symbols), symbols))
    return IntegrableSystemSpec(chart, SymplecticStructure.standard(2, chart), hams, name="brackets")


@pytest.mark.parametrize("t", [0.5, np.pi, 10.0])
def test_oscillator_flow_matches_rotation(oscillator, t):
    exact = oracles.rotation_flow([1.0])
    for p in ([1.0, 0.0], [0.3, -1.2], [-2.0, 0.5]):
        np.testing.assert_allclose(integrate_flow(oscillator, 0, p, t), exact(0, p, t), atol=1e-9)


def test_uncoupled_joint_action_matches_rotation(uncoupled):
    exact = oracles.rotation_flow([1.0, np.sqrt(2.0)])
    p, t = np.array([1.0, 0.5, 0.0, -0.5]), np.array([1.3, 0.7])
    expected = exact(1, exact(0, p, t[0]), t[1])
    np.testing.assert_allclose(joint_action(uncoupled, t, p, verify=True), expected, atol=1e-9)


def test_free_translation_moves_q_backwards(translation):
    np.testing.assert_allclose(integrate_flow(translation, 0, [0.0, 1.0], 2.0), [-2.0, 1.0], atol=1e-12)


def test_leaving_the_chart_reports_the_exit_time(translation):
    with pytest.raises(LeftDomain) as info:
        integrate_flow(translation, 0, [0.0, 1.0], 10.0)
    assert info.value.t_exit == pytest.approx(5.0, abs=1e-6)


def test_trajectory_is_truncated_at_the_chart_exit(translation):
    _, t_end, _, states = integrate_trajectory(translation.vector_fields[0], [0.0, 1.0], 10.0,
                                               domain=translation.chart)
    assert t_end == pytest.approx(5.0, abs=1e-6)
    assert states[0, -1] == pytest.approx(-5.0, abs=1e-6)


def test_points_outside_the_chart_are_rejected(oscillator):
    with pytest.raises(OutOfDomain):
        integrate_flow(oscillator, 0, [4.0, 0.0], 1.0)
    with pytest.raises(OutOfDomain):
        integrate_flow(oscillator, 0, [0.0, 0.0, 0.0], 1.0)


def test_times_beyond_max_time_fail(oscillator):
    with pytest.raises(StepFailure):
        integrate_vector_field(oscillator.vector_fields[0], [1.0, 0.0], 10.0, FlowParams(max_time=5.0))


def test_flow_params_validation():
    with pytest.raises(ValidationError):
        FlowParams(rtol=0.0)


@pytest.mark.parametrize("fixture, points", [
    ("oscillator", [[1.0, 0.0], [0.5, -1.5]]),
    ("uncoupled", [[1.0, 1.0, 0.0, 0.0], [0.3, -0.8, 1.1, 0.2]]),
    ("pendulum", [[0.0, 3.0], [1.0, -2.8]]),
])
def test_hamiltonians_are_conserved(request, fixture, points):
    spec = request.getfixturevalue(fixture)
    report = conservation_report(spec, np.array(points), horizon=20.0)
    assert report.passed
    assert report.worst_value <= 1e-8


def test_flows_commute_in_every_order(uncoupled, skew4d, rng):
    for spec, p in ((uncoupled, [1.0, 1.0, 0.0, 0.0]), (skew4d, [0.1, -0.2, 0.3, 0.0])):
        t = rng.uniform(-1.0, 1.0, size=2)
        assert order_permutation_residual(spec, t, p) <= 1e-7


@pytest.mark.parametrize("identifier", sorted(CATALOG))
def test_catalog_systems_conserve_their_hamiltonians(identifier):
    entry = CATALOG[identifier]
    report = conservation_report(entry.build(), np.array([entry.default_point]), horizon=20.0)
    assert report.worst_value <= 1e-8


@pytest.mark.parametrize("identifier", sorted(CATALOG))
def test_catalog_flows_commute_in_every_order(identifier, rng):
    entry = CATALOG[identifier]
    spec = entry.build()
    t = rng.uniform(-1.0, 1.0, size=spec.n)
    assert order_permutation_residual(spec, t, entry.default_point) <= 1e-7


def test_flow_commutation_report(uncoupled, rng):
    points = np.array([[1.0, 1.0, 0.0, 0.0], [0.5, -0.5, 0.2, 0.1]])
    report = flow_commutation_report(uncoupled, points, rng.uniform(-2.0, 2.0, size=(2, 2)))
    assert report.passed


def test_commuting_family_passes(uncoupled):
    report = commutation_report(uncoupled, uncoupled.chart.grid(3, shrink=0.8))
    assert report.passed
    assert [p.classification for p in report.pairs] == ["commuting"]
    assert report.residual_report.passed


def test_constant_bracket_is_a_cocycle():
    spec = bracket_system(lambda q1, q2, p1, p2: p1)
    report = commutation_report(spec, spec.chart.grid(3))
    assert not report.passed
    assert report.pairs[0].classification == "cocycle"
    np.testing.assert_allclose(report.cocycle, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-12)


def test_varying_bracket_is_non_constant():
    spec = bracket_system(lambda q1, q2, p1, p2: q1 * p1)
    report = commutation_report(spec, spec.chart.grid(3))
    assert report.pairs[0].classification == "non-constant"
    assert not np.any(report.cocycle)
    assert not report.residual_report.passed


def test_single_hamiltonian_has_nothing_to_compare(oscillator):
    report = commutation_report(oscillator, oscillator.chart.grid(3))
    assert report.passed
    assert "nothing to compare" in report.summary()


def test_orbits_are_isotropic(uncoupled, rng):
    times = rng.uniform(-2.0, 2.0, size=(5, 2))
    report = isotropy_check(uncoupled, [1.0, 0.5, 0.0, 0.5], times)
    assert report.passed
    assert len(report.points) == 5


def test_non_commuting_orbits_are_not_isotropic():
    spec = bracket_system(lambda q1, q2, p1, p2: p1)
    report = isotropy_check(spec, np.zeros(4), np.array([[0.0, 0.0], [0.1, -0.2]]))
    assert not report.passed
    np.testing.assert_allclose(report.values, [1.0, 1.0], atol=1e-12)


def test_orbit_times_cover_each_direction(uncoupled):
    times = orbit_times(uncoupled, 3.0, 4)
    assert times.shape == (8, 2)
    assert np.all(times[:4, 1] == 0.0) and np.all(times[4:, 0] == 0.0)
    assert times[3, 0] == 3.0


def test_joint_action_is_symplectic(oscillator, uncoupled):
    assert symplectic_action_residual(oscillator, [0.5], np.array([[1.0, 0.0], [0.2, 0.4]])).passed
    assert symplectic_action_residual(uncoupled, [0.4, -0.3], np.array([[1.0, 1.0, 0.0, 0.0]])).passed


def test_single_flow_return_after_one_period(oscillator):
    assert single_flow_return(oscillator, 0, [1.0, 0.0], 2.0 * np.pi) <= 1e-9
    assert single_flow_return(oscillator, 0, [1.0, 0.0], np.pi) == pytest.approx(2.0)


def test_regularity(oscillator, translation):
    assert regularity(translation, [0.0, 1.0])[0] == 1
    with pytest.raises(NotRegular):
        require_regular(oscillator, [0.0, 0.0])


def test_spec_rejects_wrong_number_of_hamiltonians():
    symbols = coordinate_symbols(2)
    chart = ChartDomain.cube(2, 1.0)
    with pytest.raises(ValidationError):
        IntegrableSystemSpec(chart, SymplecticStructure.standard(2, chart),
                             (ExpressionField(symbols[0], symbols),))


def test_momentum_map(uncoupled):
    np.testing.assert_allclose(momentum_map(uncoupled, [1.0, 1.0, 0.0, 0.0]), [0.5, np.sqrt(2.0) / 2.0])
    with pytest.raises(OutOfDomain):
        momentum_map(uncoupled, [4.0, 0.0, 0.0, 0.0])
