import sys
from pathlib import Path

import numpy as np
import pytest

SRC = Path(__file__).resolve().parents[1] / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from flows.integrator import FlowParams  # noqa: E402
from geometry.fields import coordinate_symbols  # noqa: E402
from geometry.forms import SymplecticStructure  # noqa: E402
from systems import catalog  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def fast_flow() -> FlowParams:
    return FlowParams(rtol=1e-10, atol=1e-10)


@pytest.fixture(scope="session")
def oscillator():
    return catalog.harmonic_oscillator()


@pytest.fixture(scope="session")
def uncoupled():
    return catalog.uncoupled_oscillators()


@pytest.fixture(scope="session")
def pendulum():
    return catalog.pendulum()


@pytest.fixture(scope="session")
def translation():
    return catalog.free_translation()


@pytest.fixture(scope="session")
def nonstandard():
    return catalog.nonstandard_form_2d()


@pytest.fixture(scope="session")
def skew4d():
    return catalog.constant_skew_form_4d()


@pytest.fixture
def write_config(tmp_path):
    """Write config text to a file and return its path."""
    def write(text: str, name: str = "task.cfg") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return write


@pytest.fixture(scope="session")
def non_closed():
    """Standard form on R^4 plus p1 dq1 ^ dq2, so that d w = dp1 ^ dq1 ^ dq2."""
    symbols = coordinate_symbols(2)
    return SymplecticStructure.from_expressions({(0, 2): 1, (1, 3): 1, (0, 1): symbols[2]}, symbols)
