import numpy as np
import pytest

from cli.config_document import parse_config
from geometry.forms import standard_matrix
from utils.errors import ParseError, ValidationError

NAMED = """\
# Harmonic oscillator from the catalog
[system]
name = "harmonic_oscillator"

[task]
point = [1.0, 0.0]
horizon = 10  # seconds of flow
tol_darboux = 1e-7
"""

INLINE = """\
[system]
n = 2
box = [[-2, 2], [-2, 2], [-2, 2], [-2, 2]]
periods = [none, none, none, none]

[omega]
omega_13 = 1
omega_24 = 1

[hamiltonians]
h1 = (q1^2 + p1^2)/2
h2 = "(q2^2 + p2^2)/2"

[task]
point = [1, 1, 0, 0]
samples = 5

[output]
dir = "results"
"""


def test_named_system():
    document = parse_config(NAMED)
    assert document.n == 1
    assert document.task.horizon == 10.0
    assert document.tolerances().tol_darboux == 1e-7
    assert document.tolerances().tol_return == 1e-8
    spec = document.build_system()
    assert spec.name == "harmonic_oscillator"
    assert spec.tolerances.tol_darboux == 1e-7
    np.testing.assert_array_equal(document.base_point(spec), [1.0, 0.0])
    assert document.oracle() is not None


def test_inline_system():
    document = parse_config(INLINE)
    spec = document.build_system()
    assert spec.name == "inline"
    assert spec.n == 2
    np.testing.assert_allclose(spec.momentum([1.0, 1.0, 0.0, 0.0]), [0.5, 0.5])
    np.testing.assert_array_equal(spec.omega.matrix(np.zeros(4)), standard_matrix(2))
    assert document.output.dir == "results"
    assert document.oracle() is None


def test_empty_omega_section_means_the_standard_form():
    text = "[system]\nn = 1\nbox = [[-1, 1], [-1, 1]]\n[omega]\n[hamiltonians]\nh1 = p1\n"
    spec = parse_config(text).build_system()
    np.testing.assert_array_equal(spec.omega.matrix(np.zeros(2)), standard_matrix(1))
    np.testing.assert_array_equal(parse_config(text).base_point(spec), [0.0, 0.0])


def test_expression_errors_point_into_the_document():
    text = INLINE.replace("h1 = (q1^2 + p1^2)/2", "h1 = sin(")
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert (info.value.line, info.value.column) == (11, 9)


def test_quoted_expression_columns_skip_the_quote():
    text = INLINE.replace('h2 = "(q2^2 + p2^2)/2"', 'h2 = "q2 + r"')
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert (info.value.line, info.value.column) == (12, 12)


def test_malformed_document():
    with pytest.raises(ParseError) as info:
        parse_config("[system]\nname =\n")
    assert info.value.line >= 2


def test_unknown_section():
    with pytest.raises(ParseError) as info:
        parse_config("[systems]\nname = \"pendulum\"\n")
    assert "unknown section" in info.value.message


def test_unknown_system():
    with pytest.raises(ValidationError) as info:
        parse_config("\n[system]\nname = \"double_pendulum\"\n")
    assert info.value.line == 3


def test_catalog_parameters_are_checked():
    document = parse_config("[system]\nname = \"uncoupled_oscillators\"\nfrequencies = [1.0, 2.0]\n")
    assert document.n == 2
    assert document.oracle() is None
    with pytest.raises(ValidationError):
        parse_config("[system]\nname = \"harmonic_oscillator\"\nepsilon = 0.2\n")


def test_catalog_system_takes_no_expressions():
    with pytest.raises(ValidationError) as info:
        parse_config("[system]\nname = \"pendulum\"\n[hamiltonians]\nh1 = p1\n")
    assert info.value.line == 4


@pytest.mark.parametrize("old, new, line", [
    ("h2 = \"(q2^2 + p2^2)/2\"\n", "", None),
    ("omega_24 = 1", "omega_42 = 1", 8),
    ("omega_24 = 1", "omega_1_3 = 1", 8),
    ("samples = 5", "samples = 5\nbogus = 1", 17),
    ("samples = 5", "samples = 5\nsamples = 6", 17),
    ("h1 = (q1^2 + p1^2)/2", "h1 = q1 + 1/0", 11),
    ("h1 = (q1^2 + p1^2)/2", "h3 = q1", 11),
    ("box = [[-2, 2], [-2, 2], [-2, 2], [-2, 2]]", "box = [[-2, 2], [-2, 2]]", 3),
])
def test_invalid_inline_documents(old, new, line):
    with pytest.raises(ValidationError) as info:
        parse_config(INLINE.replace(old, new))
    assert info.value.line == line


def test_inline_system_needs_a_box():
    with pytest.raises(ValidationError):
        parse_config("[system]\nn = 1\n[hamiltonians]\nh1 = p1\n")


def test_point_with_wrong_dimension():
    document = parse_config(NAMED.replace("point = [1.0, 0.0]", "point = [1.0]"))
    with pytest.raises(ValidationError):
        document.base_point(document.build_system())


@pytest.mark.parametrize("text", [NAMED, INLINE])
def test_round_trip(text):
    document = parse_config(text)
    again = parse_config(document.dumps())
    assert again.model_dump() == document.model_dump()
    assert again.expressions == document.expressions


def test_canonical_round_trip_keeps_the_expressions():
    document = parse_config(INLINE)
    dumped = document.dumps(canonical=True)
    assert 'h1 = "p1^2/2 + q1^2/2"' in dumped
    assert parse_config(dumped).expressions == document.expressions
