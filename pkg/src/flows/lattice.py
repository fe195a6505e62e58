"""Stabilizer lattice of the R^n-action at a point and the resulting orbit topology."""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from flows.integrator import DEFAULT_FLOW, FlowParams, integrate_trajectory, integrate_vector_field, joint_flow
from flows.system import IntegrableSystemSpec, regularity, require_regular
from geometry.calculus import ResidualReport
from geometry.differentiation import derivative_along
from utils.errors import LeftDomain, SearchExhausted, StepFailure
from utils.logger import get_logger

log = get_logger("Lattice")

MAX_NEWTON = 25


@dataclass(eq=False)
class OrbitTopology:
    """
    Orbit of p is R^(n-m) x T^m, with stabilizer generated by the rows of `basis`.

    `m` is a lower bound when `search_exhausted` is set: fewer generators
    returned within the horizon than directions were searched.
    """
    point: np.ndarray
    n: int
    basis: np.ndarray  # (m, n)
    regular: bool
    return_residuals: np.ndarray
    horizon: float
    search_exhausted: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def m(self) -> int:
        return int(self.basis.shape[0])

    @property
    def topology(self) -> str:
        return f"R^{self.n - self.m} x T^{self.m}"

    def reduce(self, t) -> np.ndarray:
        """Representative of t modulo the lattice (nearest integer combination removed)."""
        t = np.asarray(t, dtype=float)
        if self.m == 0:
            return t.copy()
        coeffs, *_ = np.linalg.lstsq(self.basis.T, t, rcond=None)
        return t - np.round(coeffs) @ self.basis

    def rows(self) -> List[dict]:
        rows = []
        for index, (vector, residual) in enumerate(zip(self.basis, self.return_residuals)):
            row = {"generator_index": index + 1}
            row.update({f"t_{k + 1}": float(v) for k, v in enumerate(vector)})
            row["return_residual"] = float(residual)
            rows.append(row)
        return rows

    def summary(self) -> str:
        flag = " (lower bound: search exhausted)" if self.search_exhausted else ""
        gens = ", ".join(np.array2string(b, precision=10) for b in self.basis) or "none"
        return f"orbit {self.topology}, m={self.m}{flag}; generators: {gens}"


def return_residual(spec: IntegrableSystemSpec, t, p, params: FlowParams = DEFAULT_FLOW) -> float:
    """|rho(t)(p) - p| with periodic axes wrapped."""
    z = joint_flow(spec.vector_fields, t, p, params)
    return spec.chart.distance(p, z)


def _coarse_returns(spec: IntegrableSystemSpec, j: int, p: np.ndarray, horizon: float,
                    params: FlowParams) -> List[float]:
    """Times of local minima of |z(t) - p| along X_j small enough to be returns."""
    field_j = spec.vector_fields[j]
    x0 = field_j(p)
    speed = float(np.linalg.norm(x0))
    accel = float(np.linalg.norm(derivative_along(field_j, p, x0, 1e-4)))
    dt = 0.01 * horizon
    if accel > 0.0:
        dt = min(dt, 0.1 * speed / accel)
    try:
        dense, t_end, _, _ = integrate_trajectory(field_j, p, horizon, params, spec.chart)
    except StepFailure as e:
        log.warning(f"⚠️ Direction {j + 1}: {e}")
        return []
    if t_end <= dt:
        return []
    times = np.arange(dt, t_end, dt)
    dist = np.array([spec.chart.distance(p, dense(t)) for t in times])
    threshold = 2.0 * speed * dt + spec.tolerances.tol_return
    found = []
    for i in range(1, len(dist) - 1):
        if dist[i - 1] > dist[i] <= dist[i + 1] and dist[i] <= threshold:
            found.append(float(times[i]))
    log.debug(f"Direction {j + 1}: dt={dt:.3g}, {len(found)} coarse return(s) up to t={t_end:.4g}")
    return found


def _refine_single(spec: IntegrableSystemSpec, j: int, p: np.ndarray, t0: float,
                   params: FlowParams) -> float:
    """One-dimensional Newton on the component of the return residual along X_j."""
    field_j = spec.vector_fields[j]
    t = t0
    for _ in range(MAX_NEWTON):
        z = integrate_vector_field(field_j, p, t, params)
        r = spec.chart.displacement(p, z)
        x = field_j(z)
        dt = -float(x @ r) / float(x @ x)
        t += dt
        if abs(dt) <= 1e-14 * max(1.0, abs(t)):
            break
    return t


def _refine_joint(spec: IntegrableSystemSpec, p: np.ndarray, t0: np.ndarray,
                  params: FlowParams) -> Tuple[np.ndarray, float]:
    """Gauss-Newton on r(t) = rho(t)(p) - p with Jacobian [X_1 .. X_n] at rho(t)(p)."""
    t = np.array(t0, dtype=float)
    residual = np.inf
    for _ in range(MAX_NEWTON):
        z = joint_flow(spec.vector_fields, t, p, params)
        r = spec.chart.displacement(p, z)
        residual = float(np.linalg.norm(r))
        if residual <= 1e-3 * spec.tolerances.tol_return:
            break
        step, *_ = np.linalg.lstsq(spec.field_matrix(z), -r, rcond=None)
        t = t + step
        if np.linalg.norm(step) <= 1e-15 * max(1.0, float(np.linalg.norm(t))):
            break
    z = joint_flow(spec.vector_fields, t, p, params)
    return t, spec.chart.distance(p, z)


def reduce_lattice(vectors: List[np.ndarray], merge_angle: float = 1e-3,
                   rank_tol: float = 1e-8) -> np.ndarray:
    """
    Near-minimal basis from candidate lattice vectors.

    Near-parallel candidates (angle below `merge_angle`) collapse to the shortest;
    a candidate is kept only if it raises the rank; the basis is then
    size-reduced pairwise until no subtraction shortens a vector.
    """
    ordered = sorted((np.asarray(v, dtype=float) for v in vectors), key=np.linalg.norm)
    kept: List[np.ndarray] = []
    for v in ordered:
        unit = v / np.linalg.norm(v)
        if any(abs(abs(unit @ (b / np.linalg.norm(b))) - 1.0) < 0.5 * merge_angle ** 2 for b in kept):
            continue
        trial = np.array(kept + [v])
        if np.linalg.matrix_rank(trial, tol=rank_tol * np.linalg.norm(trial)) == len(trial):
            kept.append(v)
    basis = [b.copy() for b in kept]
    changed = True
    while changed and len(basis) > 1:
        changed = False
        for i in range(len(basis)):
            for j in range(len(basis)):
                if i == j:
                    continue
                k = np.round(basis[i] @ basis[j] / (basis[j] @ basis[j]))
                if k != 0:
                    shorter = basis[i] - k * basis[j]
                    if np.linalg.norm(shorter) < np.linalg.norm(basis[i]) - 1e-12:
                        basis[i] = shorter
                        changed = True
    if not basis:
        return np.zeros((0, len(ordered[0]) if ordered else 0))
    return np.array(sorted(basis, key=lambda b: (int(np.argmax(np.abs(b))), np.linalg.norm(b))))


def detect_period_lattice(spec: IntegrableSystemSpec, p, params: FlowParams = DEFAULT_FLOW,
                          horizon: float = 20.0, tol_return: Optional[float] = None,
                          raise_on_exhausted: bool = False) -> OrbitTopology:
    """
    Detect the stabilizer lattice {t : rho(t)(p) = p} and the orbit topology at `p`.

    Each flow direction is scanned for returns on a dense time grid, candidates
    are refined by Newton along the flow and then jointly over all directions,
    and the accepted generators are reduced to a near-minimal basis.

    Args:
        spec: The integrable system.
        p: A regular point.
        params: Integrator settings.
        horizon: Search time T per direction.
        tol_return: Acceptance radius; defaults to `spec.tolerances.tol_return`.
        raise_on_exhausted: Raise SearchExhausted instead of flagging when m < n.

    Returns:
        OrbitTopology: m, the generators and their return residuals.

    Raises:
        NotRegular: dF_p is rank deficient.
        SearchExhausted: Only with `raise_on_exhausted`.
    """
    tol = spec.tolerances.tol_return if tol_return is None else tol_return
    z0 = spec.chart.require(p)
    require_regular(spec, z0)
    log.info(f"🚀 Searching the period lattice of {spec.name} at {np.array2string(z0, precision=6)}, T={horizon}")

    candidates: List[np.ndarray] = []
    for j in range(spec.n):
        for t_coarse in _coarse_returns(spec, j, z0, horizon, params)[:5]:
            try:
                t_line = _refine_single(spec, j, z0, t_coarse, params)
                start = np.zeros(spec.n)
                start[j] = t_line
                t_vec, residual = _refine_joint(spec, z0, start, params)
            except (LeftDomain, StepFailure) as e:
                log.debug(f"Direction {j + 1}: candidate t={t_coarse:.4g} dropped ({e})")
                continue
            if residual <= tol and np.linalg.norm(t_vec) > 0.0:
                log.debug(f"Direction {j + 1}: generator {t_vec} with residual {residual:.2e}")
                candidates.append(t_vec)
                break

    basis = reduce_lattice(candidates, spec.tolerances.merge_angle) if candidates \
        else np.zeros((0, spec.n))
    residuals = np.array([return_residual(spec, b, z0, params) for b in basis])
    notes = []
    if len(candidates) > len(basis):
        notes.append(f"{len(candidates) - len(basis)} dependent or near-resonant candidate(s) merged")
    exhausted = len(basis) < spec.n
    if exhausted:
        notes.append(f"only {len(basis)} of {spec.n} directions returned within T={horizon}; m is a lower bound")
        if raise_on_exhausted:
            raise SearchExhausted(notes[-1], horizon=horizon)
    rank, _ = regularity(spec, z0)
    topology = OrbitTopology(z0, spec.n, basis, rank == spec.n, residuals, horizon, exhausted, notes)
    log.info(f"✅ {topology.summary()}")
    return topology


def lattice_continuity(spec: IntegrableSystemSpec, p, params: FlowParams = DEFAULT_FLOW,
                       horizon: float = 20.0, radius: float = 1e-2, count: int = 5,
                       rng: Optional[np.random.Generator] = None,
                       slope: float = 10.0) -> ResidualReport:
    """
    Compare the lattice at `p` with the lattices of `count` nearby points.

    Each value is the largest generator deviation from the base lattice (inf
    when the rank differs); the threshold grows linearly with `radius`.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    base = detect_period_lattice(spec, p, params, horizon)
    z0 = np.asarray(p, dtype=float)
    points, values = [], []
    while len(points) < count:
        q = z0 + radius * rng.uniform(-1.0, 1.0, size=z0.shape)
        if not spec.chart.contains(q):
            continue
        near = detect_period_lattice(spec, q, params, horizon)
        if near.m != base.m:
            deviation = np.inf
        elif base.m == 0:
            deviation = 0.0
        else:
            deviation = max(min(min(np.linalg.norm(g - b), np.linalg.norm(g + b)) for b in base.basis)
                            for g in near.basis)
        points.append(q)
        values.append(deviation)
    scale = 1.0 + (float(np.max(np.linalg.norm(base.basis, axis=1))) if base.m else 0.0)
    report = ResidualReport("lattice_continuity", np.array(points), np.array(values),
                            slope * radius * scale, notes={"m": base.m})
    log.info(report.summary())
    return report
