import numpy as np
import pytest

from flows.lattice import OrbitTopology, detect_period_lattice, lattice_continuity, reduce_lattice, return_residual
from systems import oracles
from utils.errors import NotRegular, SearchExhausted


def test_oscillator_orbit_is_a_circle(oscillator):
    topology = detect_period_lattice(oscillator, [1.0, 0.0])
    assert topology.m == 1
    assert topology.topology == "R^0 x T^1"
    assert abs(abs(topology.basis[0, 0]) - 2.0 * np.pi) <= 1e-8
    assert not topology.search_exhausted
    assert np.all(topology.return_residuals <= 1e-8)


def test_free_translation_never_returns(translation):
    topology = detect_period_lattice(translation, [0.0, 1.0])
    assert topology.m == 0
    assert topology.search_exhausted
    assert topology.topology == "R^1 x T^0"
    assert "lower bound" in topology.notes[-1]


def test_exhausted_search_can_raise(translation):
    with pytest.raises(SearchExhausted) as info:
        detect_period_lattice(translation, [0.0, 1.0], raise_on_exhausted=True)
    assert info.value.horizon == 20.0


def test_uncoupled_oscillators_have_a_rectangular_lattice(uncoupled):
    topology = detect_period_lattice(uncoupled, [1.0, 1.0, 0.0, 0.0])
    assert topology.m == 2
    expected = oracles.rotation_lattice([1.0, np.sqrt(2.0)])(None)
    np.testing.assert_allclose(np.abs(topology.basis), expected, atol=1e-6)


@pytest.fixture(scope="module")
def uncoupled_basis(uncoupled):
    return detect_period_lattice(uncoupled, [1.0, 1.0, 0.0, 0.0]).basis


@pytest.mark.parametrize("a, b", [(1, 1), (2, -1), (-1, 3)])
def test_integer_combinations_of_generators_return(uncoupled, uncoupled_basis, a, b):
    t = a * uncoupled_basis[0] + b * uncoupled_basis[1]
    assert return_residual(uncoupled, t, [1.0, 1.0, 0.0, 0.0]) <= 1e-8


def test_pendulum_rotation_period_matches_quadrature(pendulum):
    p = np.array([0.0, 3.0])
    topology = detect_period_lattice(pendulum, p)
    assert topology.m == 1
    reference = oracles.pendulum_period_quadrature(oracles.pendulum_energy(p))
    assert abs(topology.basis[0, 0]) == pytest.approx(reference, abs=1e-6)


def test_singular_points_are_refused(oscillator):
    with pytest.raises(NotRegular):
        detect_period_lattice(oscillator, [0.0, 0.0])


def test_return_residual_vanishes_on_the_lattice(uncoupled):
    p = [1.0, 1.0, 0.0, 0.0]
    assert return_residual(uncoupled, [2.0 * np.pi, 2.0 * np.pi / np.sqrt(2.0)], p) <= 1e-9
    assert return_residual(uncoupled, [np.pi, 0.0], p) == pytest.approx(2.0)


def test_reduce_lattice_drops_dependent_candidates():
    basis = reduce_lattice([np.array([2.0, 0.0]), np.array([0.0, 3.0]),
                            np.array([2.0, 3.0]), np.array([4.0, 0.0])])
    np.testing.assert_allclose(basis, [[2.0, 0.0], [0.0, 3.0]])


def test_reduce_lattice_size_reduces():
    basis = reduce_lattice([np.array([1.0, 0.0]), np.array([1.0, 1.0])])
    np.testing.assert_allclose(basis, [[1.0, 0.0], [0.0, 1.0]])


def test_reduce_lattice_merges_near_parallel_candidates():
    basis = reduce_lattice([np.array([1.0, 0.0]), np.array([2.0, 1e-6])])
    assert basis.shape == (1, 2)


def test_topology_reduces_times_modulo_the_lattice():
    topology = OrbitTopology(np.zeros(2), 1, np.array([[2.0 * np.pi]]), True, np.zeros(1), 20.0)
    assert topology.reduce([7.0])[0] == pytest.approx(7.0 - 2.0 * np.pi)
    assert topology.rows() == [{"generator_index": 1, "t_1": 2.0 * np.pi, "return_residual": 0.0}]


def test_trivial_topology_leaves_times_alone():
    topology = OrbitTopology(np.zeros(2), 1, np.zeros((0, 1)), True, np.zeros(0), 20.0, True)
    np.testing.assert_array_equal(topology.reduce([3.5]), [3.5])
    assert "lower bound" in topology.summary()


@pytest.mark.slow
def test_lattice_varies_continuously(oscillator):
    report = lattice_continuity(oscillator, [1.0, 0.0], count=3, rng=np.random.default_rng(7))
    assert report.passed
    assert report.notes["m"] == 1
