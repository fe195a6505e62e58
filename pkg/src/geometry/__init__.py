from geometry.chart import ChartDomain
from geometry.fields import (
    CallableField,
    ConstantField,
    ExpressionField,
    ScalarField,
    VectorField,
    coordinate_symbols,
)
from geometry.forms import (
    CoefficientTwoForm,
    MatrixTwoForm,
    OneForm,
    SymplecticStructure,
    TwoForm,
    evaluate_form,
    exact_two_form,
    exterior_derivative,
    pullback_two_form,
    standard_matrix,
    symplectic_basis,
)
from geometry.calculus import (
    HamiltonianVectorField,
    ResidualReport,
    bracket_field,
    checked_matrix,
    check_closed,
    check_nondegenerate,
    field_matrix,
    hamiltonian_vector_field,
    jacobi_residual,
    map_points,
    poisson_bracket,
    solve_hamiltonian,
)
