from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from flows.integrator import DEFAULT_FLOW, FlowParams, integrate_trajectory, integrate_vector_field, joint_flow
from flows.system import IntegrableSystemSpec
from geometry.calculus import ResidualReport, map_points, poisson_bracket
from geometry.differentiation import jacobian
from utils.logger import get_logger

log = get_logger("Flows")


def integrate_flow(spec: IntegrableSystemSpec, j: int, p, t: float,
                   params: FlowParams = DEFAULT_FLOW) -> np.ndarray:
    """
    Flow of X_{f_j} for time `t` from `p`; warns when any f_k drifts beyond tol_conserve.

    Raises:
        LeftDomain: The trajectory leaves the chart.
        StepFailure: The integrator stalls.
    """
    z0 = spec.chart.require(p)
    z = integrate_vector_field(spec.vector_fields[j], z0, t, params, spec.chart)
    drift = float(np.max(np.abs(spec.momentum(z) - spec.momentum(z0))))
    if drift > spec.tolerances.tol_conserve:
        log.warning(f"⚠️ Conservation drift {drift:.2e} along X_{j + 1} for t={t:.4g}")
    return z


def joint_action(spec: IntegrableSystemSpec, t, p, params: FlowParams = DEFAULT_FLOW,
                 order: Optional[Sequence[int]] = None, verify: bool = False) -> np.ndarray:
    """
    The R^n-action rho(t)(p): the flows of X_1..X_n for times t_1..t_n.

    With `verify=True` the composition is repeated in reversed order and a
    warning is logged when the two results differ by more than tol_commute_flow.
    """
    z0 = spec.chart.require(p)
    z = joint_flow(spec.vector_fields, t, z0, params, spec.chart, order)
    if verify and spec.n > 1:
        base_order = list(range(spec.n)) if order is None else list(order)
        other = joint_flow(spec.vector_fields, t, z0, params, spec.chart, base_order[::-1])
        gap = float(np.linalg.norm(z - other))
        if gap > spec.tolerances.tol_commute_flow:
            log.warning(f"⚠️ Flow order changes the joint action by {gap:.2e}")
    return z


def order_permutation_residual(spec: IntegrableSystemSpec, t, p,
                               params: FlowParams = DEFAULT_FLOW) -> float:
    """Largest gap between joint actions over every composition order (reversal only for n > 4)."""
    z0 = spec.chart.require(p)
    reference = joint_flow(spec.vector_fields, t, z0, params, spec.chart)
    orders = (permutations(range(spec.n)) if spec.n <= 4
              else [tuple(range(spec.n))[::-1]])
    gap = 0.0
    for order in orders:
        other = joint_flow(spec.vector_fields, t, z0, params, spec.chart, order)
        gap = max(gap, float(np.linalg.norm(other - reference)))
    return gap


@dataclass(eq=False)
class PairStatistics:
    pair: Tuple[int, int]
    max_abs: float
    mean: float
    variance: float
    classification: str  # "commuting", "cocycle" or "non-constant"


@dataclass(eq=False)
class CommutationReport:
    """Pairwise bracket statistics; constant non-zero brackets are reported as a 2-cocycle."""
    points: np.ndarray
    brackets: np.ndarray  # (points, n, n)
    pairs: List[PairStatistics]
    threshold: float
    cocycle: np.ndarray = field(default=None)

    @property
    def passed(self) -> bool:
        return all(p.classification == "commuting" for p in self.pairs)

    @property
    def residual_report(self) -> ResidualReport:
        n = self.brackets.shape[1]
        values = (np.max(np.abs(self.brackets).reshape(len(self.points), n * n), axis=1)
                  if n > 1 else np.zeros(len(self.points)))
        return ResidualReport("commutation", self.points, values, self.threshold)

    def summary(self) -> str:
        if not self.pairs:
            return "commutation: single Hamiltonian, nothing to compare -> PASS"
        lines = []
        for s in self.pairs:
            j, k = s.pair
            lines.append(f"{{f{j + 1},f{k + 1}}}: max {s.max_abs:.3e}, mean {s.mean:.3e}, "
                         f"variance {s.variance:.3e} -> {s.classification}")
        return "\n".join(lines)


def commutation_report(spec: IntegrableSystemSpec, grid: np.ndarray) -> CommutationReport:
    """
    Statistics of {f_j, f_k} over `grid` for every pair j < k.

    A pair whose bracket is (numerically) constant but non-zero is a 2-cocycle
    c_jk; the antisymmetric matrix of these constants is attached to the report.
    """
    pts = np.atleast_2d(grid)
    n, tol = spec.n, spec.tolerances.tol_commute
    brackets = np.zeros((len(pts), n, n))
    pairs: List[PairStatistics] = []
    cocycle = np.zeros((n, n))
    for j, k in combinations(range(n), 2):
        values = map_points(lambda p: poisson_bracket(spec.omega, spec.hamiltonians[j],
                                                      spec.hamiltonians[k], p, spec.tolerances), pts)
        brackets[:, j, k] = values
        brackets[:, k, j] = -values
        max_abs = float(np.max(np.abs(values)))
        mean = float(np.mean(values))
        variance = float(np.var(values))
        if max_abs <= tol:
            kind = "commuting"
        elif np.sqrt(variance) <= max(tol, 1e-9 * abs(mean)):
            kind = "cocycle"
            cocycle[j, k], cocycle[k, j] = mean, -mean
        else:
            kind = "non-constant"
        pairs.append(PairStatistics((j, k), max_abs, mean, variance, kind))
    report = CommutationReport(pts, brackets, pairs, tol, cocycle)
    for s in pairs:
        if s.classification != "commuting":
            log.warning(f"⚠️ {{f{s.pair[0] + 1},f{s.pair[1] + 1}}} is {s.classification} (mean {s.mean:.3e})")
    log.info(f"✅ Commutation report over {len(pts)} points: {'PASS' if report.passed else 'FAIL'}")
    return report


def isotropy_check(spec: IntegrableSystemSpec, p, times: np.ndarray,
                   params: FlowParams = DEFAULT_FLOW) -> ResidualReport:
    """
    max_{j<k} |w(X_j, X_k)| at the orbit points rho(t)(p) for each row t of `times`.
    """
    ts = np.atleast_2d(times)
    orbit = np.array([joint_flow(spec.vector_fields, t, spec.chart.require(p), params, spec.chart) for t in ts])

    def residual(z):
        if spec.n < 2:
            return 0.0
        x = spec.field_matrix(z)
        gram = x.T @ spec.omega.matrix(z) @ x
        return float(np.max(np.abs(np.triu(gram, 1))))

    return ResidualReport("isotropy", orbit, map_points(residual, orbit), spec.tolerances.tol_commute)


def orbit_times(spec: IntegrableSystemSpec, horizon: float, samples: int) -> np.ndarray:
    """`samples` times per direction spread over [0, horizon] along each axis of R^n."""
    s = np.linspace(0.0, horizon, samples)
    rows = []
    for j in range(spec.n):
        block = np.zeros((samples, spec.n))
        block[:, j] = s
        rows.append(block)
    return np.vstack(rows)


def conservation_report(spec: IntegrableSystemSpec, points: np.ndarray, horizon: float,
                        params: FlowParams = DEFAULT_FLOW) -> ResidualReport:
    """Drift max_k |f_k(z(t)) - f_k(p)| along every flow X_j over [0, horizon] (accepted steps)."""
    pts = np.atleast_2d(points)

    def drift(p):
        start = spec.momentum(p)
        worst = 0.0
        for field_j in spec.vector_fields:
            _, _, _, states = integrate_trajectory(field_j, p, horizon, params, spec.chart)
            for z in states.T:
                worst = max(worst, float(np.max(np.abs(spec.momentum(z) - start))))
        return worst

    report = ResidualReport("conservation", pts, map_points(drift, pts), spec.tolerances.tol_conserve)
    log.info(report.summary())
    return report


def flow_commutation_report(spec: IntegrableSystemSpec, points: np.ndarray, times: np.ndarray,
                            params: FlowParams = DEFAULT_FLOW) -> ResidualReport:
    """Order-permutation residual of the joint action at each point, with times `times[i]`."""
    pts = np.atleast_2d(points)
    ts = np.atleast_2d(times)
    values = np.array([order_permutation_residual(spec, t, p, params) for p, t in zip(pts, ts)])
    return ResidualReport("flow_commutation", pts, values, spec.tolerances.tol_commute_flow)


def symplectic_action_residual(spec: IntegrableSystemSpec, t, points: np.ndarray,
                               params: FlowParams = DEFAULT_FLOW) -> ResidualReport:
    """max |(rho(t)^* w - w)_ij| at each point; the action is symplectic."""
    pts = np.atleast_2d(points)
    step = spec.tolerances.fd_step_flow

    def residual(p):
        def act(z):
            return joint_flow(spec.vector_fields, t, z, params)
        jac = jacobian(act, p, step, stencil=5)
        pulled = jac.T @ spec.omega.matrix(act(p)) @ jac
        return float(np.max(np.abs(pulled - spec.omega.matrix(p))))

    return ResidualReport("symplectic_action", pts, map_points(residual, pts), spec.tolerances.tol_darboux)


def single_flow_return(spec: IntegrableSystemSpec, j: int, p, t: float,
                       params: FlowParams = DEFAULT_FLOW) -> float:
    """Distance between p and its image under the flow of X_j at time t."""
    z = integrate_vector_field(spec.vector_fields[j], p, t, params, spec.chart)
    return spec.chart.distance(p, z)
