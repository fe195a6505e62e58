from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from geometry.chart import ChartDomain
from geometry.fields import VectorField
from utils.errors import LeftDomain, StepFailure, ValidationError
from utils.logger import get_logger

log = get_logger("Integrator")


@dataclass(frozen=True)
class FlowParams:
    """
    Settings of the adaptive integrator used for every flow.

    DOP853 is an explicit Runge-Kutta pair of order 8 with embedded error
    estimation and a dense-output interpolant.
    """
    rtol: float = 1e-12
    atol: float = 1e-12
    max_step: float = np.inf
    max_time: float = 1e3
    method: str = "DOP853"

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0 and self.max_step > 0 and self.max_time > 0):
            raise ValidationError("Flow tolerances, max step and max time must be positive.")


DEFAULT_FLOW = FlowParams()


def _exit_event(domain: Optional[ChartDomain]):
    if domain is None or domain.periodic_mask.all():
        return None

    def leaving(_t, z):
        return domain.exit_margin(z)

    leaving.terminal = True
    leaving.direction = -1
    return leaving


def _solve(field: VectorField, p: np.ndarray, t: float, params: FlowParams,
           domain: Optional[ChartDomain], dense: bool):
    if abs(t) > params.max_time:
        raise StepFailure(f"Requested time {t} exceeds max_time {params.max_time}.")
    event = _exit_event(domain)
    sol = solve_ivp(
        lambda _s, z: field(z),
        (0.0, float(t)),
        np.asarray(p, dtype=float),
        method=params.method,
        rtol=params.rtol,
        atol=params.atol,
        max_step=params.max_step,
        events=event,
        dense_output=dense,
    )
    if sol.status == -1:
        raise StepFailure(f"Integrator stalled: {sol.message}", t=float(t))
    return sol


def integrate_vector_field(field: VectorField, p, t: float,
                           params: FlowParams = DEFAULT_FLOW,
                           domain: Optional[ChartDomain] = None) -> np.ndarray:
    """
    Point reached at time `t` by the flow of `field` started at `p`.

    Raises:
        LeftDomain: The trajectory crosses a non-periodic face of `domain`.
        StepFailure: The adaptive controller fails.
    """
    z0 = np.asarray(p, dtype=float)
    if t == 0.0:
        return z0.copy()
    sol = _solve(field, z0, t, params, domain, dense=False)
    if sol.status == 1:
        t_exit = float(sol.t_events[0][0])
        raise LeftDomain(f"Trajectory left the chart at t={t_exit:.6g}.", t_exit=t_exit)
    return sol.y[:, -1].copy()


def integrate_trajectory(field: VectorField, p, t: float,
                         params: FlowParams = DEFAULT_FLOW,
                         domain: Optional[ChartDomain] = None):
    """
    Dense trajectory on [0, t], truncated where it leaves `domain`.

    Returns:
        Tuple[OdeSolution, float, np.ndarray, np.ndarray]: interpolant, the final
        time reached, and the accepted step times and states.
    """
    z0 = np.asarray(p, dtype=float)
    sol = _solve(field, z0, t, params, domain, dense=True)
    t_end = float(sol.t[-1])
    if sol.status == 1:
        log.debug(f"Trajectory truncated at chart exit t={t_end:.6g}")
    return sol.sol, t_end, sol.t, sol.y


def joint_flow(fields: Sequence[VectorField], times, p,
               params: FlowParams = DEFAULT_FLOW,
               domain: Optional[ChartDomain] = None,
               order: Optional[Sequence[int]] = None) -> np.ndarray:
    """Compose the flows of `fields` for `times`, applying index order[0] first."""
    t = np.asarray(times, dtype=float)
    z = np.asarray(p, dtype=float).copy()
    for j in (range(len(fields)) if order is None else order):
        if t[j] != 0.0:
            z = integrate_vector_field(fields[j], z, t[j], params, domain)
    return z
