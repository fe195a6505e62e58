"""Flow-box charts: coordinates in which k commuting vector fields become d/dy_1 .. d/dy_k."""
from itertools import combinations, product
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import qr

import config
from flows.integrator import DEFAULT_FLOW, FlowParams, joint_flow
from geometry.calculus import ResidualReport, map_points
from geometry.chart import ChartDomain
from geometry.differentiation import jacobian
from geometry.fields import VectorField
from utils.errors import NewtonDivergence, RankDeficient
from utils.logger import get_logger
from utils.retry import attempt_scale, shrinking

log = get_logger("FlowBox")

NEWTON_STEPS = 30


class FlowBoxChart:
    """
    Psi(x, y) = rho(y)(u0 + N x), with rho the joint flow of `fields`.

    The transversal directions N = P e_pivots are coordinate axes projected onto
    the orthogonal complement of M = [X_1(u0) .. X_k(u0)]; the pivots come from
    a column-pivoted QR of the projector, so transversal coordinates stay as
    close to chart coordinates as possible.
    """

    def __init__(self, fields: Sequence[VectorField], u0, params: FlowParams = DEFAULT_FLOW,
                 radius: float = 0.25, parent_domain: Optional[ChartDomain] = None):
        self.fields = list(fields)
        self.u0 = np.asarray(u0, dtype=float)
        self.params = params
        self.radius = radius
        self.parent_domain = parent_domain
        self.dim = len(self.u0)
        self.k = len(self.fields)
        self.frame = np.column_stack([f(self.u0) for f in self.fields])
        projector = np.eye(self.dim) - self.frame @ np.linalg.pinv(self.frame)
        _, _, pivots = qr(projector, pivoting=True)
        self.pivots = np.sort(pivots[:self.dim - self.k])
        self.normal = projector[:, self.pivots]
        self._normal_pinv = np.linalg.pinv(self.normal)

    @property
    def transversal_dim(self) -> int:
        return self.dim - self.k

    @property
    def domain(self) -> ChartDomain:
        """Flow-box coordinates (x, y) in [-radius, radius]^dim."""
        return ChartDomain.cube(self.dim // 2, self.radius)

    def forward(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        x, y = w[:self.transversal_dim], w[self.transversal_dim:]
        return joint_flow(self.fields, y, self.u0 + self.normal @ x, self.params)

    def inverse(self, z) -> np.ndarray:
        """(x, y) with Psi(x, y) = z: Newton on M^T (rho(-y) z - u0) = 0, then x = N^+ (rho(-y) z - u0)."""
        z = np.asarray(z, dtype=float)
        m = self.frame
        y, *_ = np.linalg.lstsq(m, z - self.u0, rcond=None)
        for _ in range(NEWTON_STEPS):
            back = joint_flow(self.fields, -y, z, self.params)
            g = m.T @ (back - self.u0)
            if np.linalg.norm(g) <= 1e-14 * (1.0 + np.linalg.norm(z)):
                break
            jac = -m.T @ np.column_stack([f(back) for f in self.fields])
            try:
                step = np.linalg.solve(jac, g)
            except np.linalg.LinAlgError as e:
                raise NewtonDivergence(f"Flow-box inverse is singular at {z.tolist()}.") from e
            y = y - step
            if np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(y)):
                break
        back = joint_flow(self.fields, -y, z, self.params)
        g = m.T @ (back - self.u0)
        if not np.linalg.norm(g) <= 1e-10 * (1.0 + np.linalg.norm(z)):
            raise NewtonDivergence(f"Flow-box inverse did not converge at {z.tolist()} (|g|={np.linalg.norm(g):.2e}).")
        return np.concatenate([self._normal_pinv @ (back - self.u0), y])

    def transversal_point(self, x) -> np.ndarray:
        return self.u0 + self.normal @ np.asarray(x, dtype=float)

    def transversal_jacobian(self, x) -> np.ndarray:
        """D Psi at (x, 0): [N, X_1 .. X_k] evaluated on the transversal."""
        u = self.transversal_point(x)
        return np.column_stack([self.normal] + [f(u) for f in self.fields])

    def coordinate_gradients(self) -> np.ndarray:
        """Gradients at u0 of all flow-box coordinates (rows), i.e. inv([N, M])."""
        return np.linalg.inv(np.column_stack([self.normal, self.frame]))

    def rectification_report(self, samples: np.ndarray,
                             tolerances: config.Tolerances = config.TOLERANCES) -> ResidualReport:
        """max |Psi^{-1}_* X_i - e_(2n-k+i)| at flow-box samples."""
        step = tolerances.fd_step_flow
        target = np.vstack([np.zeros((self.transversal_dim, self.k)), np.eye(self.k)])

        def residual(w):
            jac = jacobian(self.forward, w, step, stencil=5)
            z = self.forward(w)
            pushed = np.linalg.solve(jac, np.column_stack([f(z) for f in self.fields]))
            return float(np.max(np.abs(pushed - target)))

        pts = np.atleast_2d(samples)
        return ResidualReport("rectification", pts, map_points(residual, pts), tolerances.tol_rectify)


def _commutation_gap(fields: Sequence[VectorField], p: np.ndarray, t: float, params: FlowParams) -> float:
    worst = 0.0
    for i, j in combinations(range(len(fields)), 2):
        a = joint_flow([fields[i], fields[j]], [t, t], p, params)
        b = joint_flow([fields[j], fields[i]], [t, t], p, params)
        worst = max(worst, float(np.linalg.norm(a - b)))
    return worst


def flow_box(fields: Sequence[VectorField], p, params: FlowParams = DEFAULT_FLOW,
             radius: Optional[float] = None, parent_domain: Optional[ChartDomain] = None,
             tolerances: config.Tolerances = config.TOLERANCES) -> FlowBoxChart:
    """
    Rectifying chart for k commuting, pointwise independent fields near p.

    The radius starts at `flow_box_radius` and is halved until every corner of
    the box maps into `parent_domain` and inverts back, down to `box_floor`.

    Raises:
        RankDeficient: The fields are dependent at p.
        NewtonDivergence: No radius above the floor works.
    """
    z0 = np.asarray(p, dtype=float)
    frame = np.column_stack([f(z0) for f in fields])
    sv = np.linalg.svd(frame, compute_uv=False)
    if sv[-1] < tolerances.rank_floor * max(1.0, sv[0]):
        raise RankDeficient(f"Fields are dependent at {z0.tolist()}: singular values {sv.tolist()}.")
    r0 = tolerances.flow_box_radius if radius is None else radius
    gap = _commutation_gap(fields, z0, 0.1 * r0, params)
    if gap > tolerances.tol_commute_flow:
        log.warning(f"⚠️ Flow-box fields do not commute near {z0.tolist()}: gap {gap:.2e}")

    for attempt in shrinking(r0, tolerances.box_floor, (NewtonDivergence,), "flow box"):
        with attempt:
            chart = FlowBoxChart(fields, z0, params, r0 * attempt_scale(attempt), parent_domain)
            signs = np.array(list(product((-1.0, 1.0), repeat=chart.dim)))
            for corner in signs[:: max(1, len(signs) // 16)] * chart.radius:
                z = chart.forward(corner)
                if parent_domain is not None and not parent_domain.contains(z):
                    raise NewtonDivergence(f"Flow box corner {corner.tolist()} leaves the chart.")
                back = chart.inverse(z)
                if np.max(np.abs(back - corner)) > 1e-8:
                    raise NewtonDivergence(f"Flow box does not invert at corner {corner.tolist()}.")
    log.debug(f"Flow box of {chart.k} field(s) at {z0.tolist()}: radius {chart.radius:g}, pivots {chart.pivots.tolist()}")
    return chart
