"""Constructive fixed-point solver for the Landau-Lifshitz-Gilbert equation.

The package realizes, at desk scale, a contraction construction for the
magnetization flow with homogeneous Neumann walls on the unit box:
nonlinear-residual evaluations alternate with frozen-coefficient vector
heat solves, and the contraction is monitored in discrete space-time
Sobolev norms.  See README.md for the mathematical conventions and the
acceptance suite.
"""

__version__ = "0.1.0"

from .errors import (
    BlowupError,
    ConfigError,
    ShapeMismatchError,
    SnapshotFormatError,
    TimeResolutionError,
)
from .grid import (
    SpaceGrid,
    TimeGrid,
    dct_forward,
    dct_inverse,
    gradient,
    laplacian,
    neumann_face_deviation,
    time_derivative,
)
from .fields import (
    PhysicsParams,
    axpy,
    cross,
    dot,
    modulus,
    modulus_deviation,
    read_snapshot,
    write_snapshot,
)
from .norms import (
    NormReport,
    NormSpec,
    l2_spacetime,
    resolved_band_cap,
    spacetime_norm,
    spacetime_seminorm,
    spatial_sobolev_norm,
    spatial_sobolev_seminorm,
)
from .residual import LOperator, build_L, residual, residual_form3_check
from .heat import (
    HeatSolveConfig,
    HeatStabilityReport,
    heat_energy_check,
    heat_solve,
    solve_collocation_modes,
)
from .initdata import InitialDataConfig, PerturbationMode, generate_m0, mean_direction
from .iterate import (
    IterateConfig,
    IterationState,
    RunSummary,
    banded_residual_coeffs,
    geometric_fit,
    initialize,
    q_diagnostics,
    run,
    step,
)
from .oracle import OracleConfig, evolve, exchange_energy, llg_rhs
from .verify import VerificationReport, check_solution, compare_oracle
from .config import OracleSettings, RunConfig, config_echo, load_config, parse_config
