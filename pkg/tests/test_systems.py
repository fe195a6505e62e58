import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import systems
from flows.action import integrate_flow
from systems import catalog, oracles
from utils.errors import UnknownSystem, ValidationError


def test_catalog_systems_pass_their_load_time_checks():
    entries = catalog.catalog(validate=True)
    assert [e.identifier for e in entries] == [
        "harmonic_oscillator",
        "uncoupled_oscillators",
        "pendulum",
        "free_translation",
        "nonstandard_form_2d",
        "constant_skew_form_4d",
    ]


def test_default_points_are_regular_and_inside_the_chart():
    for entry in catalog.catalog():
        spec = entry.build()
        assert spec.chart.contains(entry.default_point), entry.identifier
        assert np.linalg.matrix_rank(spec.momentum_jacobian(entry.default_point)) == spec.n


def test_unknown_system():
    with pytest.raises(UnknownSystem) as info:
        catalog.lookup("double_pendulum")
    assert "harmonic_oscillator" in info.value.message


def test_parameters_can_be_overridden():
    spec = catalog.lookup("uncoupled_oscillators").build(frequencies=(1.0, 2.0))
    np.testing.assert_allclose(spec.momentum([1.0, 1.0, 0.0, 0.0]), [0.5, 1.0])
    skew = catalog.lookup("constant_skew_form_4d").build(epsilon=0.5)
    assert skew.omega.matrix(np.zeros(4))[0, 1] == 0.5


@pytest.mark.parametrize("energy", [1.5, 3.5, 10.0])
def test_pendulum_period_closed_form_matches_quadrature(energy):
    assert oracles.pendulum_period(energy) == pytest.approx(oracles.pendulum_period_quadrature(energy), rel=1e-10)


def test_pendulum_period_outside_rotation_regime():
    with pytest.raises(ValidationError):
        oracles.pendulum_period(0.5)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-20.0, 20.0))
def test_cubic_inverse(x):
    q = float(oracles.cubic_inverse(x))
    assert q + q ** 3 / 3.0 == pytest.approx(x, abs=1e-9)


def test_nonstandard_flow_matches_integration(nonstandard):
    for p, t in (([0.0, 0.5], 1.0), ([1.0, -1.0], 0.7), ([-0.5, 0.0], -0.4)):
        np.testing.assert_allclose(integrate_flow(nonstandard, 0, p, t), oracles.nonstandard_flow(0, p, t),
                                   atol=1e-9)


def test_skew_form_flows_translate_momenta(skew4d):
    exact = catalog.lookup("constant_skew_form_4d").oracle.flow
    p = np.array([0.2, -0.1, 0.0, 0.3])
    for j in range(2):
        np.testing.assert_allclose(integrate_flow(skew4d, j, p, 0.8), exact(j, p, 0.8), atol=1e-12)


def test_free_translation_oracle(translation):
    exact = catalog.lookup("free_translation").oracle.flow
    np.testing.assert_allclose(integrate_flow(translation, 0, [1.0, 2.0], 1.5), exact(0, [1.0, 2.0], 1.5),
                               atol=1e-12)


def test_rotation_chart_angles():
    chart = oracles.rotation_chart([2.0])
    np.testing.assert_allclose(chart([0.0, 1.0]), [1.0, np.pi / 4.0])


def test_catalog_module_is_reachable_from_the_package():
    assert systems.catalog is catalog
    assert systems.lookup("pendulum") is catalog.lookup("pendulum")
