from flows.integrator import DEFAULT_FLOW, FlowParams, integrate_trajectory, integrate_vector_field, joint_flow
from flows.system import IntegrableSystemSpec, momentum_map, regularity, require_regular
from flows.action import (
    CommutationReport,
    PairStatistics,
    commutation_report,
    conservation_report,
    flow_commutation_report,
    integrate_flow,
    isotropy_check,
    joint_action,
    order_permutation_residual,
    orbit_times,
    symplectic_action_residual,
)
from flows.lattice import (
    OrbitTopology,
    detect_period_lattice,
    lattice_continuity,
    reduce_lattice,
    return_residual,
)
