from systems.oracles import OracleBundle, pendulum_period, pendulum_period_quadrature
from systems.catalog import (
    NamedSystem,
    constant_skew_form_4d,
    free_translation,
    harmonic_oscillator,
    lookup,
    nonstandard_form_2d,
    pendulum,
    skew_matrix,
    uncoupled_oscillators,
    validate_system,
)
