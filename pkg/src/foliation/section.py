"""Sections of the momentum map and the adapted chart (f, t) -> rho(t)(sigma(f))."""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import product
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from flows.integrator import DEFAULT_FLOW, FlowParams, joint_flow
from flows.system import IntegrableSystemSpec, momentum_map, require_regular
from geometry.calculus import ResidualReport, map_points
from geometry.differentiation import jacobian
from utils.errors import InversionFailure, NewtonDivergence, SymplecticToolkitError
from utils.logger import get_logger
from utils.retry import attempt_scale, shrinking

log = get_logger("Section")

NEWTON_STEPS = 50
INVERSION_STEPS = 30
INVERSION_TOL = 1e-9


@dataclass(frozen=True)
class BaseBox:
    """Box of momentum values f in R^n."""
    center: np.ndarray
    half_widths: np.ndarray

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half_widths

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half_widths

    def corners(self) -> np.ndarray:
        signs = np.array(list(product((-1.0, 1.0), repeat=self.n)))
        return self.center + signs * self.half_widths

    def grid(self, points_per_axis: int, shrink: float = 1.0) -> np.ndarray:
        h = shrink * self.half_widths
        axes = [np.linspace(c - w, c + w, points_per_axis) for c, w in zip(self.center, h)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sample(self, rng: np.random.Generator, count: int, shrink: float = 1.0) -> np.ndarray:
        return self.center + shrink * self.half_widths * rng.uniform(-1.0, 1.0, size=(count, self.n))

    def contains(self, f, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(np.asarray(f) - self.center) <= self.half_widths + tol))

    def scaled(self, factor: float) -> "BaseBox":
        return BaseBox(self.center, factor * self.half_widths)

    def bounds(self) -> list:
        return [[float(lo), float(hi)] for lo, hi in zip(self.lower, self.upper)]


class Section(ABC):
    """A map sigma from a base box into the chart with F(sigma(f)) = f."""

    def __init__(self, spec: IntegrableSystemSpec, base: BaseBox):
        self.spec = spec
        self.base = base

    @abstractmethod
    def __call__(self, f) -> np.ndarray:
        ...

    @abstractmethod
    def jacobian(self, f) -> np.ndarray:
        """D sigma at f, shape (2n, n)."""

    def obstruction(self, f) -> np.ndarray:
        """c_jk(f) = w(D sigma e_j, D sigma e_k); zero iff the section is lagrangian at f."""
        z = self(f)
        d = self.jacobian(f)
        c = d.T @ self.spec.omega.matrix(z) @ d
        return 0.5 * (c - c.T)


class AffineSection(Section):
    """
    sigma(f) = p0 + N y(f), with N an orthonormal basis of the complement of
    span{X_1(p0), .., X_n(p0)} and y(f) solving F(p0 + N y) = f by Newton.
    """

    def __init__(self, spec: IntegrableSystemSpec, p0, normal: np.ndarray, base: BaseBox):
        super().__init__(spec, base)
        self.p0 = np.asarray(p0, dtype=float)
        self.normal = normal

    def solve(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        spec = self.spec
        z = self.p0.copy()
        y = np.zeros(self.normal.shape[1])
        for _ in range(NEWTON_STEPS):
            r = spec.momentum(z) - f
            if np.linalg.norm(r) <= 1e-14 * (1.0 + np.linalg.norm(f)):
                return y
            jac = spec.momentum_jacobian(z) @ self.normal
            try:
                step = np.linalg.solve(jac, r)
            except np.linalg.LinAlgError as e:
                raise NewtonDivergence(f"Singular section Jacobian at f={f.tolist()}.") from e
            y = y - step
            z = self.p0 + self.normal @ y
            if not np.all(np.isfinite(z)) or not spec.chart.contains(z):
                raise NewtonDivergence(f"Section Newton left the chart for f={f.tolist()}.")
            if np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(y)):
                break
        r = spec.momentum(z) - f
        if np.linalg.norm(r) > 1e-11 * (1.0 + np.linalg.norm(f)):
            raise NewtonDivergence(f"Section Newton did not converge for f={f.tolist()} (|r|={np.linalg.norm(r):.2e}).")
        return y

    def __call__(self, f) -> np.ndarray:
        return self.p0 + self.normal @ self.solve(f)

    def jacobian(self, f) -> np.ndarray:
        z = self(f)
        return self.normal @ np.linalg.inv(self.spec.momentum_jacobian(z) @ self.normal)


class FlowedSection(Section):
    """sigma'(f) = rho(times(f))(sigma(f)); D sigma' by five-point differences through the flows."""

    def __init__(self, inner: Section, times: Callable[[np.ndarray], np.ndarray],
                 params: FlowParams = DEFAULT_FLOW):
        super().__init__(inner.spec, inner.base)
        self.inner = inner
        self.times = times
        self.params = params

    def __call__(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return joint_flow(self.spec.vector_fields, self.times(f), self.inner(f), self.params)

    def jacobian(self, f) -> np.ndarray:
        return jacobian(self, np.asarray(f, dtype=float), self.spec.tolerances.fd_step_flow, stencil=5)


def initial_base_box(spec: IntegrableSystemSpec, f0: np.ndarray) -> BaseBox:
    """Half width box_fraction * |f0_k| per axis, or box_fraction itself where f0_k = 0."""
    fraction = spec.tolerances.box_fraction
    half = np.where(np.abs(f0) > 0.0, fraction * np.abs(f0), fraction)
    return BaseBox(np.asarray(f0, dtype=float), half)


def build_section(spec: IntegrableSystemSpec, p0, base: Optional[BaseBox] = None) -> AffineSection:
    """
    Section through a regular point p0, transversal to the orbit.

    The base box is halved until Newton converges at its centre and corners,
    down to `box_floor`.

    Raises:
        NotRegular: dF_p0 is rank deficient.
        NewtonDivergence: No box above the floor works.
    """
    z0 = spec.chart.require(p0, "base point")
    require_regular(spec, z0)
    fields = spec.field_matrix(z0)
    normal = null_space(fields.T)
    f0 = momentum_map(spec, z0)
    box = initial_base_box(spec, f0) if base is None else base
    floor = spec.tolerances.box_floor

    for attempt in shrinking(float(np.max(box.half_widths)), floor, (NewtonDivergence,), "section"):
        with attempt:
            trial = box.scaled(attempt_scale(attempt))
            section = AffineSection(spec, z0, normal, trial)
            for f in np.vstack([trial.center, trial.corners()]):
                section.solve(f)
    log.info(f"✅ Section through {np.array2string(z0, precision=6)} on base box {section.base.bounds()}")
    return section


class AdaptedChart:
    """
    Phi(f, t) = rho(t)(sigma(f)) and its numerical inverse.

    The inverse takes f = F(p) and solves rho(-t)(p) = sigma(f) for t by
    Gauss-Newton; the Jacobian of t -> rho(-t)(p) is -[X_1 .. X_n] there.
    """

    def __init__(self, spec: IntegrableSystemSpec, section: Section,
                 params: FlowParams = DEFAULT_FLOW, time_half_width: float = 1.0):
        self.spec = spec
        self.section = section
        self.params = params
        self.time_half_width = time_half_width

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def sub_box(self) -> dict:
        return {"base": self.section.base.bounds(),
                "time": [[-self.time_half_width, self.time_half_width]] * self.n}

    def forward(self, f, t) -> np.ndarray:
        return joint_flow(self.spec.vector_fields, t, self.section(f), self.params)

    def inverse_time(self, p, f=None, guess: Optional[Sequence[float]] = None) -> np.ndarray:
        spec = self.spec
        z = np.asarray(p, dtype=float)
        f = spec.momentum(z) if f is None else np.asarray(f, dtype=float)
        try:
            target = self.section(f)
        except SymplecticToolkitError as e:
            raise InversionFailure(f"No section point for f={f.tolist()}: {e}", sub_box=self.sub_box) from e
        if guess is None:
            tau, *_ = np.linalg.lstsq(spec.field_matrix(target), spec.chart.displacement(target, z), rcond=None)
        else:
            tau = np.asarray(guess, dtype=float)
        residual = np.inf
        for _ in range(INVERSION_STEPS):
            back = joint_flow(spec.vector_fields, -tau, z, self.params)
            r = spec.chart.displacement(target, back)
            residual = float(np.linalg.norm(r))
            if residual <= 1e-13 * (1.0 + np.linalg.norm(z)):
                break
            step, *_ = np.linalg.lstsq(spec.field_matrix(back), r, rcond=None)
            tau = tau + step
        if not residual <= INVERSION_TOL * (1.0 + np.linalg.norm(z)):
            raise InversionFailure(
                f"Chart inverse failed at {np.array2string(z, precision=6)} (residual {residual:.2e}).",
                sub_box=self.sub_box,
            )
        return tau

    def inverse(self, p, guess=None) -> Tuple[np.ndarray, np.ndarray]:
        f = self.spec.momentum(p)
        return f, self.inverse_time(p, f, guess)

    def conservation_report(self, samples: np.ndarray) -> ResidualReport:
        """|F(Phi(f, t)) - f| at samples (f, t)."""
        n = self.n
        values = map_points(lambda w: float(np.max(np.abs(
            self.spec.momentum(self.forward(w[:n], w[n:])) - w[:n]))), samples)
        return ResidualReport("adapted_conservation", np.atleast_2d(samples), values,
                              self.spec.tolerances.tol_conserve)

    def injectivity_report(self, samples: np.ndarray, floor: Optional[float] = None) -> ResidualReport:
        """Smallest singular value of D Phi at samples (f, t); must stay above `floor`."""
        n = self.n
        step = self.spec.tolerances.fd_step_flow

        def smallest(w):
            jac = jacobian(lambda v: self.forward(v[:n], v[n:]), w, step, stencil=5)
            return float(np.linalg.svd(jac, compute_uv=False)[-1])

        return ResidualReport("adapted_injectivity", np.atleast_2d(samples), map_points(smallest, samples),
                              self.spec.tolerances.rank_floor if floor is None else floor, bound="lower")
