from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

import config
from geometry.calculus import HamiltonianVectorField, field_matrix
from geometry.chart import ChartDomain
from geometry.fields import ScalarField
from geometry.forms import TwoForm
from utils.errors import NotRegular, ValidationError


@dataclass(frozen=True, eq=False)
class IntegrableSystemSpec:
    """
    Chart, symplectic form and n Hamiltonians f_1..f_n.

    The Hamiltonians are the comomentum data: basis vector e_j of R^n is sent
    to f_j, and the R^n-action is the joint flow of their Hamiltonian fields.
    """
    chart: ChartDomain
    omega: TwoForm
    hamiltonians: Tuple[ScalarField, ...]
    name: str = "system"
    tolerances: config.Tolerances = field(default=config.TOLERANCES)

    def __post_init__(self):
        hams = tuple(self.hamiltonians)
        object.__setattr__(self, "hamiltonians", hams)
        if self.omega.dim != self.chart.dim:
            raise ValidationError(
                f"Form dimension {self.omega.dim} does not match chart dimension {self.chart.dim}."
            )
        if len(hams) != self.chart.n:
            raise ValidationError(
                f"An integrable system on R^{self.chart.dim} needs {self.chart.n} Hamiltonians, got {len(hams)}."
            )
        for f in hams:
            if f.dim != self.chart.dim:
                raise ValidationError(f"Hamiltonian {f!r} has dimension {f.dim}, expected {self.chart.dim}.")
        fields = tuple(HamiltonianVectorField(self.omega, f, self.tolerances, enforce_domain=False)
                       for f in hams)
        object.__setattr__(self, "_fields", fields)

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def vector_fields(self) -> Tuple[HamiltonianVectorField, ...]:
        return self._fields

    def momentum(self, p) -> np.ndarray:
        """F(p) = (f_1(p), .., f_n(p))."""
        return np.array([f(p) for f in self.hamiltonians])

    def momentum_jacobian(self, p) -> np.ndarray:
        """dF_p, shape (n, 2n)."""
        return np.stack([f.grad(p) for f in self.hamiltonians])

    def field_matrix(self, p) -> np.ndarray:
        """Columns X_1(p) .. X_n(p)."""
        return field_matrix(self.omega, self.hamiltonians, p, self.tolerances)


def momentum_map(spec: IntegrableSystemSpec, p) -> np.ndarray:
    """F(p) for a point of the chart; raises OutOfDomain outside it."""
    return spec.momentum(spec.chart.require(p, "momentum point"))


def regularity(spec: IntegrableSystemSpec, p) -> Tuple[int, float]:
    """Rank of dF_p and its smallest singular value."""
    sv = np.linalg.svd(spec.momentum_jacobian(p), compute_uv=False)
    floor = spec.tolerances.rank_floor * max(1.0, float(sv[0]) if sv.size else 1.0)
    return int(np.sum(sv > floor)), float(sv[-1]) if sv.size else 0.0


def require_regular(spec: IntegrableSystemSpec, p) -> None:
    rank, smallest = regularity(spec, p)
    if rank < spec.n:
        raise NotRegular(
            f"dF has rank {rank} < {spec.n} at {np.asarray(p).tolist()} (smallest singular value {smallest:.2e}).",
            rank=rank,
        )
