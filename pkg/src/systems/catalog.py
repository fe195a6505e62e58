"""Built-in systems, referenced by identifier from config files."""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import sympy as sp

import config
from flows.action import commutation_report
from flows.system import IntegrableSystemSpec
from geometry.calculus import check_closed
from geometry.chart import ChartDomain
from geometry.fields import ExpressionField, coordinate_symbols
from geometry.forms import SymplecticStructure, standard_matrix
from systems import oracles
from systems.oracles import OracleBundle
from utils.errors import UnknownSystem, ValidationError
from utils.logger import get_logger

log = get_logger("Catalog")


@dataclass(frozen=True)
class NamedSystem:
    identifier: str
    description: str
    factory: Callable[..., IntegrableSystemSpec]
    default_point: Sequence[float]
    oracle: Optional[OracleBundle] = None
    parameters: Dict[str, object] = field(default_factory=dict)

    def build(self, tolerances: config.Tolerances = config.TOLERANCES, **overrides) -> IntegrableSystemSpec:
        params = {**self.parameters, **overrides}
        return self.factory(tolerances=tolerances, **params)


def harmonic_oscillator(tolerances: config.Tolerances = config.TOLERANCES) -> IntegrableSystemSpec:
    q, p = coordinate_symbols(1)
    chart = ChartDomain.box(1, [(-3.0, 3.0), (-3.0, 3.0)])
    return IntegrableSystemSpec(chart, SymplecticStructure.standard(1, chart),
                                (ExpressionField((q ** 2 + p ** 2) / 2, [q, p]),),
                                name="harmonic_oscillator", tolerances=tolerances)


def uncoupled_oscillators(frequencies: Sequence[float] = (1.0, np.sqrt(2.0)),
                          tolerances: config.Tolerances = config.TOLERANCES) -> IntegrableSystemSpec:
    """f_j = w_j (q_j^2 + p_j^2) / 2."""
    n = len(frequencies)
    symbols = coordinate_symbols(n)
    chart = ChartDomain.cube(n, 3.0)
    hams = tuple(ExpressionField(sp.Float(w) * (symbols[j] ** 2 + symbols[n + j] ** 2) / 2, symbols)
                 for j, w in enumerate(frequencies))
    return IntegrableSystemSpec(chart, SymplecticStructure.standard(n, chart), hams,
                                name="uncoupled_oscillators", tolerances=tolerances)


def pendulum(tolerances: config.Tolerances = config.TOLERANCES) -> IntegrableSystemSpec:
    """H = p^2/2 - cos q with q periodic; rotation regime for E > 1."""
    q, p = coordinate_symbols(1)
    chart = ChartDomain.box(1, [(-np.pi, np.pi), (-4.5, 4.5)], periods=(2.0 * np.pi, None))
    return IntegrableSystemSpec(chart, SymplecticStructure.standard(1, chart),
                                (ExpressionField(p ** 2 / 2 - sp.cos(q), [q, p]),),
                                name="pendulum", tolerances=tolerances)


def free_translation(tolerances: config.Tolerances = config.TOLERANCES) -> IntegrableSystemSpec:
    q, p = coordinate_symbols(1)
    chart = ChartDomain.box(1, [(-5.0, 5.0), (-5.0, 5.0)])
    return IntegrableSystemSpec(chart, SymplecticStructure.standard(1, chart),
                                (ExpressionField(p, [q, p]),),
                                name="free_translation", tolerances=tolerances)


def nonstandard_form_2d(tolerances: config.Tolerances = config.TOLERANCES) -> IntegrableSystemSpec:
    """w = (1 + q^2) dq ^ dp with H = p."""
    q, p = coordinate_symbols(1)
    chart = ChartDomain.box(1, [(-2.0, 2.0), (-2.0, 2.0)])
    omega = SymplecticStructure.from_expressions({(0, 1): 1 + q ** 2}, [q, p], chart)
    return IntegrableSystemSpec(chart, omega, (ExpressionField(p, [q, p]),),
                                name="nonstandard_form_2d", tolerances=tolerances)


def skew_matrix(epsilon: float) -> np.ndarray:
    """dq1 ^ dp1 + dq2 ^ dp2 + epsilon dq1 ^ dq2."""
    m = standard_matrix(2)
    m[0, 1], m[1, 0] = epsilon, -epsilon
    return m


def constant_skew_form_4d(epsilon: float = 0.1,
                          tolerances: config.Tolerances = config.TOLERANCES) -> IntegrableSystemSpec:
    """Constant coupled form with f = (q1, q2); their flows translate p1 and p2."""
    symbols = coordinate_symbols(2)
    chart = ChartDomain.cube(2, 2.0)
    omega = SymplecticStructure.constant(skew_matrix(epsilon), chart)
    hams = (ExpressionField(symbols[0], symbols), ExpressionField(symbols[1], symbols))
    return IntegrableSystemSpec(chart, omega, hams, name="constant_skew_form_4d", tolerances=tolerances)


_SQRT2 = float(np.sqrt(2.0))

_ENTRIES: List[NamedSystem] = [
    NamedSystem("harmonic_oscillator", "H = (q^2 + p^2)/2 on R^2", harmonic_oscillator, (1.0, 0.0),
                OracleBundle(oracles.rotation_flow([1.0]), oracles.rotation_lattice([1.0]),
                             oracles.rotation_chart([1.0]))),
    NamedSystem("uncoupled_oscillators", "two oscillators with frequencies 1 and sqrt(2)",
                uncoupled_oscillators, (1.0, 1.0, 0.0, 0.0),
                OracleBundle(oracles.rotation_flow([1.0, _SQRT2]), oracles.rotation_lattice([1.0, _SQRT2]),
                             oracles.rotation_chart([1.0, _SQRT2])),
                {"frequencies": (1.0, _SQRT2)}),
    NamedSystem("pendulum", "H = p^2/2 - cos q, q periodic", pendulum, (0.0, 3.0),
                OracleBundle(lattice=lambda p: np.array([[oracles.pendulum_period(oracles.pendulum_energy(p))]]))),
    NamedSystem("free_translation", "H = p on R^2", free_translation, (0.0, 1.0),
                OracleBundle(oracles.translation_flow([[-1.0], [0.0]]), oracles.empty_lattice(1))),
    NamedSystem("nonstandard_form_2d", "(1 + q^2) dq ^ dp with H = p", nonstandard_form_2d, (0.0, 0.0),
                OracleBundle(oracles.nonstandard_flow, oracles.empty_lattice(1), oracles.nonstandard_chart)),
    NamedSystem("constant_skew_form_4d", "constant form with an epsilon dq1 ^ dq2 coupling, f = (q1, q2)",
                constant_skew_form_4d, (0.0, 0.0, 0.0, 0.0),
                OracleBundle(oracles.translation_flow(np.eye(4)[:, 2:]), oracles.empty_lattice(2)),
                {"epsilon": 0.1}),
]


def validate_system(spec: IntegrableSystemSpec, points_per_axis: int = 3) -> None:
    """Load-time checks: closedness and pairwise commutation on a coarse grid."""
    grid = spec.chart.grid(points_per_axis, shrink=0.8)
    closed = check_closed(spec.omega, grid, spec.tolerances)
    commuting = commutation_report(spec, grid)
    if not (closed.passed and commuting.passed):
        raise ValidationError(f"Catalog system {spec.name} fails its load-time checks: "
                              f"{closed.summary()}; {commuting.summary()}")


def catalog(validate: bool = False) -> List[NamedSystem]:
    if validate:
        for entry in _ENTRIES:
            validate_system(entry.build())
        log.info(f"✅ {len(_ENTRIES)} catalog systems pass closedness and commutation checks")
    return list(_ENTRIES)


def lookup(identifier: str) -> NamedSystem:
    for entry in _ENTRIES:
        if entry.identifier == identifier:
            return entry
    known = ", ".join(e.identifier for e in _ENTRIES)
    raise UnknownSystem(f"Unknown system '{identifier}'. Known systems: {known}.")
