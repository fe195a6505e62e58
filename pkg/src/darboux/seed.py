from typing import Tuple

import numpy as np
import sympy as sp

import config
from geometry.calculus import checked_matrix, solve_hamiltonian
from geometry.fields import ExpressionField, ScalarField, coordinate_symbols
from geometry.forms import TwoForm
from utils.logger import get_logger

log = get_logger("Darboux")


def seed_candidates(dim: int, p) -> list:
    """(z_i - p_i + 1)^2 for every coordinate i, as exact expression fields."""
    symbols = coordinate_symbols(dim // 2)
    z0 = np.asarray(p, dtype=float)
    return [ExpressionField((s - sp.Float(c) + 1) ** 2, symbols) for s, c in zip(symbols, z0)]


def seed_hamiltonian(omega: TwoForm, p,
                     tolerances: config.Tolerances = config.TOLERANCES) -> Tuple[ScalarField, int]:
    """
    First function of the commuting family: (z_1 + 1)^2 in coordinates centred at p.

    Falls back to the coordinate whose Hamiltonian field is largest at p when
    the first one is below `seed_floor`.

    Returns:
        Tuple[ScalarField, int]: The seed and the index of its coordinate.

    Raises:
        SingularForm: w is degenerate at p.
    """
    z0 = np.asarray(p, dtype=float)
    w = checked_matrix(omega, z0, tolerances.nondegeneracy_floor, enforce_domain=False)
    candidates = seed_candidates(omega.dim, z0)
    norms = [float(np.linalg.norm(solve_hamiltonian(w, f.grad(z0), tolerances.tol_solve))) for f in candidates]
    index = 0 if norms[0] >= tolerances.seed_floor else int(np.argmax(norms))
    if index:
        log.warning(f"⚠️ First seed coordinate is degenerate ({norms[0]:.2e}); using z{index + 1}")
    log.debug(f"Seed {candidates[index]} with |X| = {norms[index]:.3e}")
    return candidates[index], index
