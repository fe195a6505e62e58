"""Commuting Hamiltonian families built level by level through flow boxes."""
from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Sequence

import numpy as np

import config
from darboux.flow_box import FlowBoxChart, flow_box
from darboux.seed import seed_hamiltonian
from flows.integrator import DEFAULT_FLOW, FlowParams
from geometry.calculus import HamiltonianVectorField, ResidualReport, checked_matrix, map_points, poisson_bracket, solve_hamiltonian
from geometry.chart import ChartDomain
from geometry.fields import CallableField, ScalarField
from geometry.forms import MatrixTwoForm, TwoForm
from utils.errors import NoIndependentCandidate
from utils.logger import get_logger

log = get_logger("Darboux")


@dataclass(eq=False)
class FamilyLevel:
    """
    The family expressed in the coordinates of one flow box.

    Level 0 uses the original chart. Level L+1 uses the flow-box coordinates
    (x, y) of level L, where the pulled-back form and every family member
    depend on x only.
    """
    chart: ChartDomain
    omega: TwoForm
    functions: List[ScalarField]
    point: np.ndarray
    to_parent: Optional[FlowBoxChart] = None

    def vector_fields(self, tolerances: config.Tolerances) -> List[HamiltonianVectorField]:
        return [HamiltonianVectorField(self.omega, f, tolerances, enforce_domain=False) for f in self.functions]


class TransversalPullback(ScalarField):
    """f(u0 + N x) viewed as a function of (x, y); gradient [N^T grad f, 0]."""

    def __init__(self, base: ScalarField, box: FlowBoxChart):
        super().__init__(box.dim)
        self.base = base
        self.box = box
        self.exact = base.exact

    def __call__(self, w) -> float:
        return self.base(self.box.transversal_point(np.asarray(w)[:self.box.transversal_dim]))

    def grad(self, w) -> np.ndarray:
        u = self.box.transversal_point(np.asarray(w)[:self.box.transversal_dim])
        return np.concatenate([self.box.normal.T @ self.base.grad(u), np.zeros(self.box.k)])


class CoordinateField(ScalarField):
    exact = True

    def __init__(self, dim: int, index: int):
        super().__init__(dim)
        self.index = index

    def __call__(self, w) -> float:
        return float(np.asarray(w, dtype=float)[self.index])

    def grad(self, w) -> np.ndarray:
        g = np.zeros(self.dim)
        g[self.index] = 1.0
        return g

    def __repr__(self) -> str:
        return f"x{self.index + 1}"


def transversal_form(omega: TwoForm, box: FlowBoxChart) -> TwoForm:
    """Psi* w at (x, y) = [N, X(u)]^T W(u) [N, X(u)] with u = u0 + N x; independent of y."""

    def pulled(w: np.ndarray) -> np.ndarray:
        x = w[:box.transversal_dim]
        jac = box.transversal_jacobian(x)
        return jac.T @ omega.matrix(box.transversal_point(x)) @ jac

    return MatrixTwoForm(omega.dim, pulled, box.domain)


@dataclass(eq=False)
class CommutingFamily:
    """
    f_1 .. f_k with pairwise vanishing brackets and independent fields at `point`.

    `members` pairs each function with the level it was created at; its
    original-coordinate version is that function composed with the inverse
    flow boxes down to level 0.
    """
    omega: TwoForm
    point: np.ndarray
    levels: List[FamilyLevel]
    members: List[tuple]  # (level index, field at that level)
    report: Optional[ResidualReport] = None
    rank: int = 0
    smallest_singular_value: float = 0.0
    notes: List[str] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.members)

    @property
    def top(self) -> FamilyLevel:
        return self.levels[-1]

    def to_level(self, z, level: int) -> np.ndarray:
        w = np.asarray(z, dtype=float)
        for lvl in self.levels[1:level + 1]:
            w = lvl.to_parent.inverse(w)
        return w

    def from_level(self, w, level: int) -> np.ndarray:
        z = np.asarray(w, dtype=float)
        for lvl in reversed(self.levels[1:level + 1]):
            z = lvl.to_parent.forward(z)
        return z

    def functions(self, tolerances: config.Tolerances = config.TOLERANCES) -> List[ScalarField]:
        """Family members as functions of the original coordinates."""
        out = []
        for level, f in self.members:
            if level == 0:
                out.append(f)
            else:
                out.append(CallableField(self.omega.dim, lambda z, f=f, level=level: f(self.to_level(z, level)),
                                         step=tolerances.fd_step_flow, name=f"{f!r}@level{level}",
                                         stencil=5))
        return out


def seed_family(omega: TwoForm, p, chart: ChartDomain,
                tolerances: config.Tolerances = config.TOLERANCES) -> CommutingFamily:
    seed, _ = seed_hamiltonian(omega, p, tolerances)
    z0 = np.asarray(p, dtype=float)
    level = FamilyLevel(chart, omega, [seed], z0)
    x = level.vector_fields(tolerances)[0](z0)
    norm = float(np.linalg.norm(x))
    return CommutingFamily(omega, z0, [level], [(0, seed)], rank=1, smallest_singular_value=norm)


def _candidate_margins(omega: TwoForm, box: FlowBoxChart, tolerances: config.Tolerances) -> np.ndarray:
    """Smallest singular value of [X_1 .. X_k, X_{x_l}] at u0 for each transversal coordinate x_l."""
    w = checked_matrix(omega, box.u0, tolerances.nondegeneracy_floor, enforce_domain=False)
    grads = box.coordinate_gradients()
    margins = []
    for l in range(box.transversal_dim):
        x_g = solve_hamiltonian(w, grads[l], tolerances.tol_solve)
        margins.append(float(np.linalg.svd(np.column_stack([box.frame, x_g]), compute_uv=False)[-1]))
    return np.array(margins)


def certify_family(omega: TwoForm, functions: Sequence[ScalarField], cloud: np.ndarray,
                   tolerances: config.Tolerances = config.TOLERANCES) -> ResidualReport:
    """Largest |{f_i, f_j}| over the cloud; flow-based members use the looser flow tolerance."""
    pts = np.atleast_2d(cloud)
    pairs = list(combinations(range(len(functions)), 2))
    threshold = tolerances.tol_commute if all(f.exact for f in functions) else tolerances.tol_commute_flow

    def worst(p):
        if not pairs:
            return 0.0
        return max(abs(poisson_bracket(omega, functions[i], functions[j], p, tolerances)) for i, j in pairs)

    return ResidualReport("family_brackets", pts, map_points(worst, pts), threshold)


def extend_commuting_family(family: CommutingFamily, params: FlowParams = DEFAULT_FLOW,
                            cloud_size: int = 100, rng: Optional[np.random.Generator] = None,
                            tolerances: config.Tolerances = config.TOLERANCES) -> CommutingFamily:
    """
    Add f_{k+1}: a transversal coordinate of the flow box of the current family.

    Being constant along y_1..y_k, it Poisson-commutes with f_1..f_k. Among the
    transversal coordinates the one with the largest smallest singular value
    of the extended field matrix at the point is taken (the first within a
    relative 1e-6 of the best). The new family is re-expressed in the flow-box
    coordinates and its brackets are certified on a cloud of `cloud_size`
    original points around the base point.

    Raises:
        NoIndependentCandidate: Every candidate leaves the fields dependent.
        RankDeficient, NewtonDivergence: From the flow box.
    """
    top = family.top
    dim = top.omega.dim
    if family.k >= dim // 2:
        raise NoIndependentCandidate(f"Family already has {family.k} = n members.")
    box = flow_box(top.vector_fields(tolerances), top.point, params,
                   parent_domain=top.chart, tolerances=tolerances)
    margins = _candidate_margins(top.omega, box, tolerances)
    best = float(np.max(margins))
    scale = float(np.linalg.svd(box.frame, compute_uv=False)[0])
    if best < tolerances.rank_floor * max(1.0, scale):
        raise NoIndependentCandidate(
            f"No transversal coordinate is independent at level {len(family.levels) - 1}: margins {margins.tolist()}."
        )
    choice = int(np.flatnonzero(margins >= best * (1.0 - 1e-6))[0])
    log.info(f"✅ Level {len(family.levels)}: f{family.k + 1} = x{choice + 1} (margin {margins[choice]:.3e})")

    pulled = [TransversalPullback(f, box) for f in top.functions]
    new_f = CoordinateField(dim, choice)
    level = FamilyLevel(box.domain, transversal_form(top.omega, box), pulled + [new_f],
                        np.zeros(dim), box)
    grown = CommutingFamily(family.omega, family.point, family.levels + [level],
                            family.members + [(len(family.levels), new_f)],
                            rank=family.k + 1, smallest_singular_value=float(margins[choice]),
                            notes=list(family.notes))
    if cloud_size > 0:
        rng = np.random.default_rng(config.DEFAULT_SEED) if rng is None else rng
        depth = len(grown.levels) - 1
        cloud = np.array([grown.from_level(w, depth) for w in level.chart.sample(rng, cloud_size, shrink=0.5)])
        grown.report = certify_family(family.omega, grown.functions(tolerances), cloud, tolerances)
        log.info(grown.report.summary())
    return grown
