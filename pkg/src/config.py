import os
from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Tolerances(BaseSettings):
    """
    Named tolerances and numerical steps shared by every module.

    Values can be overridden from the environment (or a `.env` file) with the
    `SYMPLECTIC_` prefix, e.g. `SYMPLECTIC_TOL_DARBOUX=1e-7`, and per task from
    the `[task]` section of a config document.
    """
    model_config = SettingsConfigDict(
        env_prefix="SYMPLECTIC_", env_file=".env", extra="ignore", frozen=True
    )

    # Linear algebra and form checks
    tol_solve: float = 1e-12
    tol_closed: float = 1e-8
    tol_closed_fd: float = 1e-4
    nondegeneracy_floor: float = 1e-10
    tol_grad: float = 1e-6
    tol_jacobi: float = 1e-6

    # Flows and orbits
    tol_commute: float = 1e-10
    tol_commute_flow: float = 1e-7
    tol_conserve: float = 1e-8
    tol_return: float = 1e-8
    merge_angle: float = 1e-3

    # Charts
    tol_primitive: float = 1e-6
    tol_lagrangian: float = 1e-7
    tol_delta: float = 1e-6
    tol_darboux: float = 1e-6
    tol_linear: float = 1e-6
    tol_rectify: float = 1e-8
    seed_floor: float = 1e-6
    rank_floor: float = 1e-6

    # Finite differences
    fd_step: float = 1e-6
    fd_step_flow: float = 1e-3

    # Neighbourhood shrinkage
    box_fraction: float = 0.1
    box_floor: float = 1e-4
    flow_box_radius: float = 0.25


TOLERANCES = Tolerances()

# Runtime settings
LOG_LEVEL = os.getenv("SYMPLECTIC_LOG_LEVEL", "INFO")
DEFAULT_SEED = int(os.getenv("SYMPLECTIC_SEED", "42"))
N_JOBS = int(os.getenv("SYMPLECTIC_N_JOBS", "1"))
OUTPUT_DIR = os.getenv("SYMPLECTIC_OUTPUT_DIR", os.path.join("out"))
