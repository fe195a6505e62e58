"""Closed-form flows, period lattices and charts for the catalog systems.

Nothing here integrates an ODE: oracles must stay independent of the flows
they are compared with.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import ellipk

from utils.errors import ValidationError


@dataclass(frozen=True)
class OracleBundle:
    """
    Analytic references for one system.

    flow(j, p, t): exact time-t flow of X_j; lattice(p): stabilizer basis (rows);
    chart(p): exact canonical or Darboux coordinates of a point, when known.
    """
    flow: Optional[Callable[[int, np.ndarray, float], np.ndarray]] = None
    lattice: Optional[Callable[[np.ndarray], np.ndarray]] = None
    chart: Optional[Callable[[np.ndarray], np.ndarray]] = None


def rotation_flow(frequencies: Sequence[float]):
    """Flow of X_j = w_j (-p_j, q_j): rotation of the (q_j, p_j) plane by angle w_j t."""
    freqs = np.asarray(frequencies, dtype=float)
    n = len(freqs)

    def flow(j: int, p, t: float) -> np.ndarray:
        z = np.array(p, dtype=float)
        angle = freqs[j] * t
        q, mom = z[j], z[n + j]
        z[j] = q * np.cos(angle) - mom * np.sin(angle)
        z[n + j] = q * np.sin(angle) + mom * np.cos(angle)
        return z

    return flow


def rotation_lattice(frequencies: Sequence[float]):
    freqs = np.asarray(frequencies, dtype=float)
    return lambda p: np.diag(2.0 * np.pi / freqs)


def rotation_chart(frequencies: Sequence[float]):
    """(f_j, theta_j) = (w_j (q_j^2 + p_j^2) / 2, atan2(p_j, q_j) / w_j)."""
    freqs = np.asarray(frequencies, dtype=float)
    n = len(freqs)

    def chart(p) -> np.ndarray:
        z = np.asarray(p, dtype=float)
        q, mom = z[:n], z[n:]
        return np.concatenate([freqs * (q ** 2 + mom ** 2) / 2.0, np.arctan2(mom, q) / freqs])

    return chart


def pendulum_energy(p) -> float:
    q, mom = np.asarray(p, dtype=float)
    return 0.5 * mom ** 2 - np.cos(q)


def pendulum_period(energy: float) -> float:
    """Rotation period of H = p^2/2 - cos q at energy E > 1: 4 K(m) / sqrt(2(E+1)), m = 2/(E+1)."""
    if energy <= 1.0:
        raise ValidationError(f"Energy {energy} is not in the rotation regime (E > 1).")
    return 4.0 * float(ellipk(2.0 / (energy + 1.0))) / np.sqrt(2.0 * (energy + 1.0))


def pendulum_period_quadrature(energy: float) -> float:
    """The same period as the integral of dq / |p| over one turn of the energy level."""
    if energy <= 1.0:
        raise ValidationError(f"Energy {energy} is not in the rotation regime (E > 1).")
    value, _ = quad(lambda q: 1.0 / np.sqrt(2.0 * (energy + np.cos(q))), 0.0, 2.0 * np.pi,
                    epsabs=1e-13, epsrel=1e-13, limit=200)
    return float(value)


def translation_flow(direction: Sequence[Sequence[float]]):
    """Flows z -> z + t v_j for constant fields v_j (columns)."""
    v = np.asarray(direction, dtype=float)

    def flow(j: int, p, t: float) -> np.ndarray:
        return np.asarray(p, dtype=float) + t * v[:, j]

    return flow


def cubic_inverse(x):
    """Real root q of q + q^3/3 = x."""
    x = np.asarray(x, dtype=float)
    s = np.sqrt(2.25 * x ** 2 + 1.0)
    return np.cbrt(1.5 * x + s) + np.cbrt(1.5 * x - s)


def nonstandard_flow(j: int, p, t: float) -> np.ndarray:
    """H = p under (1 + q^2) dq ^ dp: q + q^3/3 decreases at unit speed, p is fixed."""
    q, mom = np.asarray(p, dtype=float)
    return np.array([float(cubic_inverse(q + q ** 3 / 3.0 - t)), mom])


def nonstandard_chart(p) -> np.ndarray:
    """Darboux coordinates x = q + q^3/3, y = p."""
    q, mom = np.asarray(p, dtype=float)
    return np.array([q + q ** 3 / 3.0, mom])


def empty_lattice(n: int):
    return lambda p: np.zeros((0, n))
