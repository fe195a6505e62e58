"""Darboux coordinates near a point: seed, extend to n commuting functions, linearize."""
from typing import Dict, Optional

import numpy as np

import config
from darboux.family import CommutingFamily, extend_commuting_family, seed_family
from flows.integrator import DEFAULT_FLOW, FlowParams
from flows.system import IntegrableSystemSpec
from foliation.canonical import CanonicalChart, canonical_coordinates, darboux_residual
from geometry.calculus import ResidualReport, check_closed, check_nondegenerate, map_points
from geometry.chart import ChartDomain
from geometry.differentiation import jacobian
from geometry.forms import SymplecticStructure, TwoForm, standard_matrix
from utils.errors import NotClosed, PipelineError, SingularForm, SymplecticToolkitError
from utils.logger import get_logger

log = get_logger("Darboux")


class DarbouxChart:
    """
    Coordinates (f_1..f_n, theta_1..theta_n) with w = sum df_k ^ dtheta_k near p.

    point() runs the canonical chart of the last family level and then every
    flow box back to the original coordinates; coordinates() inverts that
    chain.
    """

    def __init__(self, omega: TwoForm, family: CommutingFamily, canonical: CanonicalChart,
                 reports: Optional[Dict[str, ResidualReport]] = None):
        self.omega = omega
        self.family = family
        self.canonical = canonical
        self.reports: Dict[str, ResidualReport] = reports or {}

    @property
    def n(self) -> int:
        return self.omega.dim // 2

    @property
    def depth(self) -> int:
        return len(self.family.levels) - 1

    def point(self, coords) -> np.ndarray:
        return self.family.from_level(self.canonical.point(coords), self.depth)

    def coordinates(self, z) -> np.ndarray:
        return self.canonical.coordinates(self.family.to_level(z, self.depth))

    def sample_coordinates(self, rng: np.random.Generator, count: int, shrink: float = 1.0) -> np.ndarray:
        return self.canonical.sample_coordinates(rng, count, shrink)

    def residual(self, coords: np.ndarray,
                 tolerances: config.Tolerances = config.TOLERANCES) -> ResidualReport:
        return darboux_residual(self.omega, self, coords, tolerances.fd_step_flow, tolerances.tol_darboux)

    def transition_residual(self, reference, coords: np.ndarray,
                            tolerances: config.Tolerances = config.TOLERANCES) -> ResidualReport:
        """
        How far x -> reference(point(x)) is from symplectic: max |J^T J0 J - J0|.

        `reference` maps original points to another Darboux chart; both charts
        agree up to a canonical transformation exactly when this vanishes.
        """
        pts = np.atleast_2d(coords)
        standard = standard_matrix(self.n)

        def residual(x):
            jac = jacobian(lambda v: np.asarray(reference(self.point(v)), dtype=float), x,
                           tolerances.fd_step_flow, stencil=5)
            return float(np.max(np.abs(jac.T @ standard @ jac - standard)))

        return ResidualReport("transition", pts, map_points(residual, pts), tolerances.tol_darboux)


def _precheck(omega: TwoForm, chart: ChartDomain, p: np.ndarray,
              tolerances: config.Tolerances) -> Dict[str, ResidualReport]:
    local = chart.sub_box(p, 0.5 * tolerances.flow_box_radius)
    grid = local.grid(3)
    closed = check_closed(omega, grid, tolerances)
    if not closed.passed:
        raise NotClosed(f"Form is not closed near p: residual {closed.worst_value:.3e}.",
                        residual=closed.worst_value)
    nondegenerate = check_nondegenerate(omega, grid, tolerances)
    if not nondegenerate.passed:
        raise SingularForm(f"Form is degenerate at {np.array2string(nondegenerate.worst_point, precision=6)}.",
                           point=nondegenerate.worst_point.tolist())
    return {"closed": closed, "nondegenerate": nondegenerate}


def darboux_chart(omega: TwoForm, p, chart: Optional[ChartDomain] = None,
                  params: FlowParams = DEFAULT_FLOW, cloud_size: int = 100,
                  rng: Optional[np.random.Generator] = None,
                  tolerances: config.Tolerances = config.TOLERANCES) -> DarbouxChart:
    """
    Darboux chart of `omega` near `p`.

    Stages: closedness and nondegeneracy near p, seed function, extension of
    the commuting family to n members, canonical coordinates of the resulting
    free action. Errors are re-raised tagged with the stage they came from.

    Args:
        omega: Symplectic form.
        p: Base point.
        chart: Original chart; a cube of half-width 1 around p by default.
        params: Integrator settings.
        cloud_size: Size of the bracket-certification cloud per extension.
        rng: Generator for the clouds.
        tolerances: Tolerances for every stage.

    Returns:
        DarbouxChart: Chart with stage reports attached.
    """
    z0 = np.asarray(p, dtype=float)
    n = omega.dim // 2
    chart = ChartDomain.cube(n, 1.0, z0) if chart is None else chart
    rng = np.random.default_rng(config.DEFAULT_SEED) if rng is None else rng
    log.info(f"🚀 Darboux chart near {np.array2string(z0, precision=6)} (n={n})")
    stage = "precheck"
    reports: Dict[str, ResidualReport] = {}
    try:
        reports.update(_precheck(omega, chart, z0, tolerances))
        stage = "seed"
        family = seed_family(omega, z0, chart, tolerances)
        while family.k < n:
            stage = f"extend:{family.k + 1}"
            family = extend_commuting_family(family, params, cloud_size, rng, tolerances)
            if family.report is not None:
                reports[f"family_{family.k}"] = family.report
        stage = "canonical"
        top = family.top
        spec = IntegrableSystemSpec(top.chart, SymplecticStructure(top.omega), tuple(top.functions),
                                    name=f"darboux level {len(family.levels) - 1}", tolerances=tolerances)
        radius = float(np.min(top.chart.half_widths)) if family.k > 1 else tolerances.flow_box_radius
        canonical = canonical_coordinates(spec, top.point, params, time_half_width=min(1.0, radius))
    except SymplecticToolkitError as e:
        log.error(f"❌ Darboux pipeline failed at stage '{stage}': {e}")
        raise e.with_stage(stage)
    except (ArithmeticError, np.linalg.LinAlgError) as e:
        log.error(f"❌ Darboux pipeline failed at stage '{stage}': {e}")
        raise PipelineError(str(e), stage=stage) from e
    result = DarbouxChart(omega, family, canonical, reports)
    log.info(f"✅ Darboux chart built with {result.depth} flow-box level(s)")
    return result
