"""Canonical coordinates (f, theta) with w = sum df_k ^ dtheta_k near a regular orbit."""
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from flows.integrator import DEFAULT_FLOW, FlowParams, joint_flow
from flows.lattice import OrbitTopology, detect_period_lattice
from flows.system import IntegrableSystemSpec
from foliation.homotopy import HomotopyPrimitive, homotopy_primitive
from foliation.section import AdaptedChart, FlowedSection, Section, build_section
from geometry.calculus import ResidualReport, map_points
from geometry.differentiation import derivative_along, jacobian
from geometry.forms import MatrixTwoForm, TwoForm, standard_matrix
from utils.errors import SymplecticToolkitError
from utils.logger import get_logger

log = get_logger("Canonical")


class PointChart(Protocol):
    """Anything that maps chart coordinates back to points of the original space."""

    def point(self, coords) -> np.ndarray:
        ...


@dataclass(eq=False)
class SectionShift:
    """
    Angle shift s on the base making the section lagrangian.

    `primitive` is a one-form a with da = c (the section obstruction) or None
    when the base is one-dimensional; s = -a.
    """
    section: Section
    obstruction_form: Optional[TwoForm]
    primitive: Optional[HomotopyPrimitive]
    report: Optional[ResidualReport] = None

    @property
    def n(self) -> int:
        return self.section.spec.n

    def __call__(self, f) -> np.ndarray:
        if self.primitive is None:
            return np.zeros(self.n)
        return -self.primitive.covector(f)

    def corrected_section(self, params: FlowParams = DEFAULT_FLOW) -> Section:
        """sigma'(f) = rho(-s(f))(sigma(f))."""
        return FlowedSection(self.section, lambda f: -self(f), params)


def obstruction_form(section: Section) -> TwoForm:
    """The base two-form c(f) = sigma* w."""
    step = section.spec.tolerances.fd_step_flow if isinstance(section, FlowedSection) else None
    return MatrixTwoForm(section.spec.n, section.obstruction, step=step)


def lagrangianize_section(spec: IntegrableSystemSpec, section: Section,
                          params: FlowParams = DEFAULT_FLOW,
                          samples: Optional[np.ndarray] = None) -> SectionShift:
    """
    Shift s with rho(-s(f))(sigma(f)) lagrangian.

    The obstruction c = sigma* w is closed on the base; its radial primitive a
    about the base centre gives s = -a, and the corrected obstruction is
    c + ds = 0. With `samples`, the corrected section's obstruction is
    measured there and attached as a report.

    Raises:
        NotClosed: c fails the closedness check (dw != 0 or non-commuting flows).
    """
    if spec.n == 1:
        log.info("✅ One-dimensional base: section is already lagrangian")
        shift = SectionShift(section, None, None)
    else:
        c = obstruction_form(section)
        closed_grid = section.base.grid(3, shrink=0.5) if spec.n >= 3 else None
        primitive = homotopy_primitive(c, section.base.center, closed_grid, spec.tolerances)
        shift = SectionShift(section, c, primitive)
    if samples is not None:
        shift.report = lagrangian_report(shift, samples, params)
        log.info(shift.report.summary())
    return shift


def lagrangian_report(shift: SectionShift, samples: np.ndarray,
                      params: FlowParams = DEFAULT_FLOW) -> ResidualReport:
    """max |c'_jk| of the corrected section at base samples."""
    pts = np.atleast_2d(samples)
    tolerances = shift.section.spec.tolerances
    if shift.n == 1:
        return ResidualReport("lagrangian", pts, np.zeros(len(pts)), tolerances.tol_lagrangian)
    corrected = shift.corrected_section(params)
    values = map_points(lambda f: float(np.max(np.abs(corrected.obstruction(f)))), pts)
    return ResidualReport("lagrangian", pts, values, tolerances.tol_lagrangian)


class CanonicalChart:
    """
    Coordinates (f_1..f_n, theta_1..theta_n) near a regular orbit.

    theta(p) = t + s(F(p)) where rho(-t)(p) = sigma(F(p)); the inverse map is
    point(f, theta) = rho(theta - s(f))(sigma(f)). theta is a real lift: in
    periodic directions it is only defined modulo `lattice`.
    """

    def __init__(self, adapted: AdaptedChart, shift: SectionShift,
                 lattice: Optional[OrbitTopology] = None):
        self.adapted = adapted
        self.shift = shift
        self.lattice = lattice

    @property
    def spec(self) -> IntegrableSystemSpec:
        return self.adapted.spec

    @property
    def n(self) -> int:
        return self.adapted.n

    @property
    def sub_box(self) -> dict:
        return self.adapted.sub_box

    def coordinates(self, p, guess=None) -> np.ndarray:
        f, t = self.adapted.inverse(p, guess)
        return np.concatenate([f, t + self.shift(f)])

    def point(self, coords) -> np.ndarray:
        w = np.asarray(coords, dtype=float)
        f, theta = w[:self.n], w[self.n:]
        return self.adapted.forward(f, theta - self.shift(f))

    def sample_coordinates(self, rng: np.random.Generator, count: int, shrink: float = 1.0) -> np.ndarray:
        """Random (f, theta) in the validity sub-box, theta around the shift at each f."""
        f = self.adapted.section.base.sample(rng, count, shrink)
        half = shrink * self.adapted.time_half_width
        t = rng.uniform(-half, half, size=(count, self.n))
        return np.hstack([f, t + np.array([self.shift(x) for x in f])])

    def sample_points(self, rng: np.random.Generator, count: int, shrink: float = 1.0) -> np.ndarray:
        return np.array([self.point(w) for w in self.sample_coordinates(rng, count, shrink)])

    def delta_residual(self, points: np.ndarray) -> ResidualReport:
        """max_jk |X_j(theta_k) - delta_jk| and |X_j(f_k)| at each point."""
        spec = self.spec
        n, step = self.n, spec.tolerances.fd_step_flow
        target = np.vstack([np.zeros((n, n)), np.eye(n)])

        def residual(p):
            theta0 = self.coordinates(p)[n:]
            fields = spec.field_matrix(p)
            derivs = np.column_stack([
                derivative_along(lambda z: self.coordinates(z, guess=theta0 - self.shift(spec.momentum(z))),
                                 p, fields[:, j], step / (1.0 + np.linalg.norm(fields[:, j])), stencil=5)
                for j in range(n)
            ])
            return float(np.max(np.abs(derivs - target)))

        pts = np.atleast_2d(points)
        return ResidualReport("delta", pts, map_points(residual, pts), spec.tolerances.tol_delta)

    def linear_residual(self, points: np.ndarray, times: np.ndarray,
                        params: Optional[FlowParams] = None) -> ResidualReport:
        """|theta(rho(t)p) - theta(p) - t| (mod lattice) and |f(rho(t)p) - f(p)| per point."""
        spec = self.spec
        n = self.n
        params = self.adapted.params if params is None else params
        pts = np.atleast_2d(points)
        ts = np.atleast_2d(times)

        def residual(args):
            p, t = args[:spec.dim], args[spec.dim:]
            before = self.coordinates(p)
            after = self.coordinates(joint_flow(spec.vector_fields, t, p, params),
                                     guess=before[n:] + t - self.shift(before[:n]))
            drift = after[n:] - before[n:] - t
            if self.lattice is not None:
                drift = self.lattice.reduce(drift)
            return float(max(np.max(np.abs(drift)), np.max(np.abs(after[:n] - before[:n]))))

        values = map_points(residual, np.hstack([pts, ts]))
        return ResidualReport("linear", pts, values, spec.tolerances.tol_linear)

    def darboux_residual(self, coords: np.ndarray) -> ResidualReport:
        return darboux_residual(self.spec.omega, self, coords,
                                self.spec.tolerances.fd_step_flow, self.spec.tolerances.tol_darboux)


def darboux_residual(omega: TwoForm, chart: PointChart, coords: np.ndarray,
                     rel_step: float = 1e-3, threshold: float = 1e-6) -> ResidualReport:
    """
    max |J^T W(point(x)) J - standard block| over chart coordinates `coords`,
    with J the five-point Jacobian of `chart.point`.
    """
    pts = np.atleast_2d(coords)
    standard = standard_matrix(pts.shape[1] // 2)

    def residual(x):
        jac = jacobian(chart.point, x, rel_step, stencil=5)
        pulled = jac.T @ omega.matrix(chart.point(x)) @ jac
        return float(np.max(np.abs(pulled - standard)))

    report = ResidualReport("darboux", pts, map_points(residual, pts), threshold)
    log.debug(report.summary())
    return report


def canonical_coordinates(spec: IntegrableSystemSpec, p0, params: FlowParams = DEFAULT_FLOW,
                          time_half_width: float = 1.0,
                          lattice_horizon: Optional[float] = None,
                          section: Optional[Section] = None) -> CanonicalChart:
    """
    Canonical chart near the orbit of a regular point p0.

    Builds a transversal section, lagrangianizes it with the homotopy
    primitive and wraps the adapted chart with the angle shift. With
    `lattice_horizon` the period lattice at p0 is detected so that angle
    residuals can be reduced modulo it.

    Raises:
        NotRegular, NewtonDivergence, NotClosed: From the construction stages.
    """
    log.info(f"🚀 Canonical coordinates for {spec.name} near {np.array2string(np.asarray(p0), precision=6)}")
    stage = "section"
    try:
        section = build_section(spec, p0) if section is None else section
        stage = "lagrangianize"
        shift = lagrangianize_section(spec, section, params)
        lattice = None
        if lattice_horizon is not None:
            stage = "lattice"
            lattice = detect_period_lattice(spec, p0, params, lattice_horizon)
    except SymplecticToolkitError as e:
        log.error(f"❌ Canonical coordinates failed at stage '{stage}': {e}")
        raise e.with_stage(stage)
    chart = CanonicalChart(AdaptedChart(spec, section, params, time_half_width), shift, lattice)
    log.info(f"✅ Canonical chart ready on {chart.sub_box}")
    return chart
