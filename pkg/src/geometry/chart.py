from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import OutOfDomain, ValidationError


@dataclass(frozen=True)
class ChartDomain:
    """
    Axis-aligned box in R^2n with coordinates ordered (q1..qn, p1..pn).

    An axis may be periodic (an angle variable); its bounds then describe one
    fundamental domain and points are compared modulo the period.
    """
    n: int
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    periods: Tuple[Optional[float], ...] = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"Degrees of freedom must be positive, got {self.n}.")
        if len(self.lower) != 2 * self.n or len(self.upper) != 2 * self.n:
            raise ValidationError(
                f"A chart with n={self.n} needs {2 * self.n} bounds, got "
                f"{len(self.lower)} lower and {len(self.upper)} upper."
            )
        for axis, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not lo < hi:
                raise ValidationError(f"Axis {self.names[axis]} has empty bounds [{lo}, {hi}].")
        periods = tuple(self.periods) if self.periods else (None,) * (2 * self.n)
        if len(periods) != 2 * self.n:
            raise ValidationError("Periods must be given for every axis (None for non-periodic).")
        object.__setattr__(self, "periods", periods)

    @classmethod
    def box(cls, n: int, bounds: Sequence[Sequence[float]],
            periods: Optional[Sequence[Optional[float]]] = None) -> "ChartDomain":
        lower = tuple(float(b[0]) for b in bounds)
        upper = tuple(float(b[1]) for b in bounds)
        return cls(n, lower, upper, tuple(periods) if periods else ())

    @classmethod
    def cube(cls, n: int, half_width: float, center: Optional[Sequence[float]] = None) -> "ChartDomain":
        c = np.zeros(2 * n) if center is None else np.asarray(center, dtype=float)
        return cls(n, tuple(c - half_width), tuple(c + half_width))

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def names(self) -> List[str]:
        return [f"q{i + 1}" for i in range(self.n)] + [f"p{i + 1}" for i in range(self.n)]

    @property
    def aliases(self) -> List[str]:
        return [f"z{i + 1}" for i in range(self.dim)]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lower) + np.asarray(self.upper))

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.upper) - np.asarray(self.lower))

    @property
    def periodic_mask(self) -> np.ndarray:
        return np.array([p is not None for p in self.periods])

    def contains(self, p: Sequence[float], tol: float = 0.0) -> bool:
        return self.exit_margin(p) >= -tol

    def exit_margin(self, p: Sequence[float]) -> float:
        """Signed distance to the nearest non-periodic face (negative outside)."""
        z = np.asarray(p, dtype=float)
        mask = ~self.periodic_mask
        if not mask.any():
            return np.inf
        lo = np.asarray(self.lower)[mask]
        hi = np.asarray(self.upper)[mask]
        return float(np.min(np.minimum(z[mask] - lo, hi - z[mask])))

    def require(self, p: Sequence[float], what: str = "point") -> np.ndarray:
        z = np.asarray(p, dtype=float)
        if z.shape != (self.dim,):
            raise OutOfDomain(f"{what} has shape {z.shape}, expected ({self.dim},).")
        if not np.all(np.isfinite(z)) or not self.contains(z):
            raise OutOfDomain(f"{what} {np.array2string(z, precision=6)} lies outside the chart.")
        return z

    def displacement(self, a: Sequence[float], b: Sequence[float]) -> np.ndarray:
        """b - a, with periodic axes reduced to the shortest representative."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        for axis, period in enumerate(self.periods):
            if period is not None:
                d[axis] -= period * np.round(d[axis] / period)
        return d

    def distance(self, a: Sequence[float], b: Sequence[float]) -> float:
        return float(np.linalg.norm(self.displacement(a, b)))

    def grid(self, points_per_axis: int, shrink: float = 1.0) -> np.ndarray:
        """Tensor grid of `points_per_axis`^(2n) points over the (shrunk) box."""
        c, h = self.center, shrink * self.half_widths
        axes = [np.linspace(c[i] - h[i], c[i] + h[i], points_per_axis) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sample(self, rng: np.random.Generator, count: int, shrink: float = 1.0) -> np.ndarray:
        c, h = self.center, shrink * self.half_widths
        return c + h * rng.uniform(-1.0, 1.0, size=(count, self.dim))

    def sub_box(self, center: Sequence[float], half_widths) -> "ChartDomain":
        c = np.asarray(center, dtype=float)
        h = np.broadcast_to(np.asarray(half_widths, dtype=float), c.shape)
        lower = np.maximum(c - h, self.lower)
        upper = np.minimum(c + h, self.upper)
        for axis, period in enumerate(self.periods):
            if period is not None:
                lower[axis], upper[axis] = c[axis] - h[axis], c[axis] + h[axis]
        return ChartDomain(self.n, tuple(lower), tuple(upper), self.periods)
