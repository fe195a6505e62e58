import pytest

from utils.errors import InversionFailure, NotClosed, ParseError
from utils.logger import get_logger
from utils.retry import attempt_scale, halving_attempts, shrinking


@pytest.mark.parametrize("initial, floor, attempts", [
    (1.0, 1e-4, 14),
    (0.1, 1e-4, 10),
    (1e-4, 1e-4, 1),
    (1e-5, 1e-4, 1),
])
def test_halving_attempts(initial, floor, attempts):
    assert halving_attempts(initial, floor) == attempts


def test_shrinking_retries_with_halved_scale():
    scales = []
    for attempt in shrinking(1.0, 1e-4, (InversionFailure,), "test box"):
        with attempt:
            scales.append(attempt_scale(attempt))
            if scales[-1] > 0.25:
                raise InversionFailure("too large")
    assert scales == [1.0, 0.5, 0.25]


def test_shrinking_reraises_when_exhausted():
    calls = []
    with pytest.raises(InversionFailure):
        for attempt in shrinking(0.4, 0.1, (InversionFailure,), "test box"):
            with attempt:
                calls.append(attempt_scale(attempt))
                raise InversionFailure("never fits")
    assert calls == [1.0, 0.5, 0.25]


def test_shrinking_does_not_retry_other_errors():
    calls = []
    with pytest.raises(ValueError):
        for attempt in shrinking(1.0, 1e-4, (InversionFailure,), "test box"):
            with attempt:
                calls.append(1)
                raise ValueError("unrelated")
    assert len(calls) == 1


def test_stage_is_set_once():
    error = NotClosed("form is not closed", residual=0.5).with_stage("precheck")
    error.with_stage("family")
    assert error.stage == "precheck"
    assert str(error) == "[precheck] form is not closed"
    assert error.details == {"residual": 0.5}


def test_parse_error_names_its_position():
    error = ParseError("unexpected end of input", line=3, column=9, expected="expression")
    assert str(error) == "line 3, column 9: unexpected end of input"
    assert error.details["expected"] == "expression"


def test_logger_keeps_a_single_handler():
    first = get_logger("UtilsTest")
    second = get_logger("UtilsTest", "DEBUG")
    assert first is second
    assert len(second.handlers) == 1
