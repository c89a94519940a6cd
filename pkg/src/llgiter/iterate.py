"""The constructive contraction iteration.

Starting from the time-constant extension of the initial data, every
step evaluates the nonlinear residual, solves the frozen-coefficient
vector heat problem for a correction, and subtracts it:

    r_l = R(m_l),    (L d/dt - c_e Lap) R_l = r_l,  R_l(0) = 0,
    m_{l+1} = m_l - R_l.

The whole space-time field is corrected at once: this is a global-in-
time fixed-point iteration, not a time-marching scheme.  The correction
keeps R_l(0) = 0 and stays on the cosine basis, so every iterate
preserves m_l(0) = m0 and the discrete Neumann walls exactly.
Geometric decay of the correction norms ||R_l||_{H^{k,2k}} is the
measured contraction.

Numerical realization
---------------------
Three measures keep the measured contraction clean down to rounding
level; each is a refinement of, not a departure from, the construction
above (see README for the full rationale):

* The correction solve uses the ``stencil-collocation`` heat scheme by
  default, the exact inverse of the frozen-coefficient part of the
  discrete residual.  With a mismatched scheme (implicit Euler or
  Crank-Nicolson, both selectable for comparison) the time-oscillatory
  error components contract only like 1 - O(dt) per step.
* The iterate is stored as cosine coefficients on the resolved band
  (every mode index <= N//3, the same dealiasing cap the initial-data
  generator enforces) and updated in coefficient space, so each mode
  keeps full relative precision.  Updating in physical space freezes the
  iteration at the ULP of the unit-size field values, which the norm
  multipliers amplify by lambda^(2k-1) at the band edge.
* Contraction quantities are measured with banded norms
  (``NormSpec(band="resolved")``) on the driven window (t_1 .. T): the
  zero-initial-data solve consumes the forcing samples at t_1..t_M only,
  so the t = 0 residual sample is pinned at local-truncation level by
  the initial condition and is reported separately (``r_norm_full``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowupError, ConfigError
from .fields import PhysicsParams, modulus_deviation
from .grid import (
    SpaceGrid,
    TimeGrid,
    dct_forward,
    dct_inverse,
    gradient,
    time_stencil_matrix,
)
from .heat import HeatSolveConfig, heat_solve, solve_collocation_modes
from .norms import (
    NormSpec,
    report_from_coeffs,
    resolved_band_cap,
    spacetime_norm,
    spatial_sobolev_norm,
)
from .residual import LOperator, build_L

__all__ = [
    "IterateConfig",
    "IterationState",
    "RunSummary",
    "banded_residual_coeffs",
    "initialize",
    "step",
    "run",
    "q_diagnostics",
    "QDiagnostics",
    "geometric_fit",
]


@dataclass(frozen=True)
class IterateConfig:
    tol: float = 1e-8
    max_iter: int = 50
    diverge_window: int = 3
    k: int = 3

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.diverge_window < 2:
            raise ConfigError(f"diverge_window must be >= 2, got {self.diverge_window}")
        if self.k < 2:
            raise ConfigError(f"k must be >= 2 (the residual norm uses k - 1), got {self.k}")


@dataclass
class IterationState:
    """Mutable per-run record; histories all have length ell (ratios ell-1).

    ``m_hat`` holds the authoritative banded coefficients of the current
    iterate; ``m_current`` is its physical reconstruction.
    """

    m_current: np.ndarray
    m_hat: np.ndarray
    status: str = "running"
    ell: int = 0
    r_norm_history: list[float] = field(default_factory=list)
    r_norm_full_history: list[float] = field(default_factory=list)
    R_norm_history: list[float] = field(default_factory=list)
    q_history: list[float] = field(default_factory=list)
    Q_history: list[float] = field(default_factory=list)
    m_norm_history: list[float] = field(default_factory=list)
    m_seminorm_history: list[float] = field(default_factory=list)
    modulus_history: list[float] = field(default_factory=list)
    wall_history: list[float] = field(default_factory=list)
    correction_sum: float = 0.0
    m0_spacetime_norm: float | None = None


@dataclass
class RunSummary:
    status: str
    iterations: int
    final_residual_norm: float
    final_residual_norm_full: float
    smoothness_ratio: float
    m_norm: float
    m0_spatial_norm: float
    q_fit: float | None


def _band_index(grid: SpaceGrid, cap: int):
    return (slice(None),) + tuple(slice(0, cap + 1) for _ in range(grid.dimension)) + (slice(None),)


def _band_truncate(coeffs: np.ndarray, grid: SpaceGrid, cap: int) -> np.ndarray:
    return coeffs[_band_index(grid, cap)].copy()


def _band_embed(banded: np.ndarray, grid: SpaceGrid, cap: int) -> np.ndarray:
    full = np.zeros((banded.shape[0],) + grid.shape + (3,))
    full[_band_index(grid, cap)] = banded
    return full


def _band_laplacian(grid: SpaceGrid, cap: int) -> np.ndarray:
    idx = np.ix_(*([np.arange(cap + 1)] * grid.dimension))
    return grid.mode_laplacian[idx]


def initialize(m0: np.ndarray, grid: SpaceGrid, tgrid: TimeGrid) -> IterationState:
    """Initial guess: m0 replicated across all time slices.

    The coefficient state is the resolved-band projection of that
    extension; for admissible initial data (modes capped at N//3) the
    projection residue is at rounding level.  The physical iterate starts
    as the exact replication itself (reconstructions take over once the
    first correction is applied).
    """
    cap = resolved_band_cap(grid)
    m = np.repeat(m0[None], tgrid.m_steps + 1, axis=0)
    m_hat = _band_truncate(dct_forward(m, grid, leading_axes=1), grid, cap)
    return IterationState(m_current=m, m_hat=m_hat)


def _live_window(tgrid: TimeGrid) -> TimeGrid:
    return TimeGrid(tgrid.t_final - tgrid.dt, tgrid.m_steps - 1)


def banded_residual_coeffs(
    m_hat: np.ndarray,
    m_phys: np.ndarray,
    grid: SpaceGrid,
    tgrid: TimeGrid,
    params: PhysicsParams,
):
    """Residual of a banded iterate, in physical and banded-mode form.

    ``m_hat`` holds the resolved-band coefficients, ``m_phys`` their
    physical reconstruction.  The Laplacian and the time derivative act
    on the exact banded coefficients (clean per-mode relative accuracy);
    products and the mirror-ghost gradients act on the reconstruction.
    Returns ``(r_phys, r_hat)``.
    """
    cap = resolved_band_cap(grid)
    lam_band = _band_laplacian(grid, cap)
    v = m_phys
    flat = m_hat.reshape(m_hat.shape[0], -1)
    # stencils annihilate time-constants exactly; anchoring at the first
    # slice keeps the products' rounding relative to the time variation
    vt_hat = (time_stencil_matrix(tgrid.m_steps, 1, tgrid.dt) @ (flat - flat[0])).reshape(
        m_hat.shape
    )
    vt = dct_inverse(_band_embed(vt_hat, grid, cap), grid, leading_axes=1)
    lap = dct_inverse(
        _band_embed(-lam_band[None, ..., None] * m_hat, grid, cap), grid, leading_axes=1
    )
    g = gradient(v, grid, leading_axes=1)
    gradsq = np.einsum("a...i,a...i->...", g, g)
    vsq = np.einsum("...i,...i->...", v, v)
    ce = params.c_e
    r_phys = (
        params.alpha * vt
        + np.cross(v, vt)
        - ce * vsq[..., None] * lap
        - ce * gradsq[..., None] * v
    )
    r_hat = _band_truncate(dct_forward(r_phys, grid, leading_axes=1), grid, cap)
    return r_phys, r_hat


def step(
    state: IterationState,
    grid: SpaceGrid,
    tgrid: TimeGrid,
    L: LOperator,
    params: PhysicsParams,
    cfg: IterateConfig,
    heat_cfg: HeatSolveConfig = HeatSolveConfig(scheme="stencil-collocation"),
) -> IterationState:
    """Advance one iteration; terminal states refuse further stepping."""
    if state.status != "running":
        raise RuntimeError(f"cannot step an iteration with status {state.status!r}")
    t0 = time.perf_counter()
    cap = resolved_band_cap(grid)
    lam_band = _band_laplacian(grid, cap)
    lam_flat = np.repeat(lam_band.reshape(-1), 3)
    vol = grid.cell_volume
    live = _live_window(tgrid)

    r_phys, r_hat = banded_residual_coeffs(state.m_hat, state.m_current, grid, tgrid, params)
    if not np.isfinite(r_hat).all():
        raise BlowupError(f"non-finite residual at iteration {state.ell}", dump=state)

    r_live = report_from_coeffs(
        r_hat[1:].reshape(tgrid.m_steps, -1), lam_flat, live, cfg.k - 1, vol
    ).norm
    r_full = report_from_coeffs(
        r_hat.reshape(tgrid.m_steps + 1, -1), lam_flat, tgrid, cfg.k - 1, vol
    ).norm

    if heat_cfg.scheme == "stencil-collocation":
        R_hat = solve_collocation_modes(
            r_hat.reshape(tgrid.m_steps + 1, -1, 3), lam_band.reshape(-1), tgrid, L, params.c_e
        ).reshape(r_hat.shape)
    else:
        # comparison path: the spec-shaped time-stepping solve on the full
        # grid, then projected back onto the resolved band
        R_full = heat_solve(r_phys, grid, tgrid, L, params, heat_cfg)
        R_hat = _band_truncate(dct_forward(R_full, grid, leading_axes=1), grid, cap)
    if not np.isfinite(R_hat).all():
        raise BlowupError(f"non-finite correction at iteration {state.ell}", dump=state)

    m_rep = report_from_coeffs(
        state.m_hat.reshape(tgrid.m_steps + 1, -1), lam_flat, tgrid, cfg.k, vol
    )
    R_norm = report_from_coeffs(
        R_hat.reshape(tgrid.m_steps + 1, -1), lam_flat, tgrid, cfg.k, vol
    ).norm
    if state.m0_spacetime_norm is None:
        state.m0_spacetime_norm = m_rep.norm

    # Q_j = (m_{j,0} + R_j)(1 + m_j) + R_j^2 + m_0 sum_{i<j} R_i + (sum_{i<j} R_i)^2
    s_prev = state.correction_sum
    q_bracket = (
        (m_rep.seminorm + R_norm) * (1.0 + m_rep.norm)
        + R_norm**2
        + state.m0_spacetime_norm * s_prev
        + s_prev**2
    )

    if np.any(R_hat):
        state.m_hat = state.m_hat - R_hat
        state.m_current = dct_inverse(_band_embed(state.m_hat, grid, cap), grid, leading_axes=1)
        if not np.isfinite(state.m_current).all():
            raise BlowupError(f"non-finite iterate at iteration {state.ell}", dump=state)
    # an exactly zero correction is a no-op: the iterate (and in particular
    # an exact constant initial guess) passes through bit for bit

    state.r_norm_history.append(r_live)
    state.r_norm_full_history.append(r_full)
    state.R_norm_history.append(R_norm)
    state.Q_history.append(q_bracket)
    state.m_norm_history.append(m_rep.norm)
    state.m_seminorm_history.append(m_rep.seminorm)
    state.modulus_history.append(modulus_deviation(state.m_current))
    if state.ell >= 1:
        prev = state.R_norm_history[-2]
        if prev > 0.0:
            state.q_history.append(R_norm / prev)
        else:
            state.q_history.append(0.0 if R_norm == 0.0 else math.inf)
    state.correction_sum = s_prev + R_norm
    state.ell += 1

    w = cfg.diverge_window
    if r_live < cfg.tol:
        state.status = "converged"
    elif len(state.q_history) >= w and all(q >= 1.0 for q in state.q_history[-w:]):
        state.status = "diverged"
    elif state.ell >= cfg.max_iter:
        state.status = "max-iterations"
    state.wall_history.append(time.perf_counter() - t0)
    return state


def run(
    m0: np.ndarray,
    grid: SpaceGrid,
    tgrid: TimeGrid,
    params: PhysicsParams,
    cfg: IterateConfig,
    heat_cfg: HeatSolveConfig = HeatSolveConfig(scheme="stencil-collocation"),
    x0_index: tuple[int, ...] | None = None,
    on_iteration=None,
) -> tuple[np.ndarray, IterationState, RunSummary]:
    """Drive the iteration to a terminal status and summarize.

    The returned field carries the exact initial data in its first slice
    (the iteration never touches it: corrections vanish there in
    coefficient space).  The summary holds the a-posteriori quantities:
    the residual norms of the final iterate and the smoothness ratio
    ||m||_{H^{k,2k}(D_T)} / ||m0||_{H^{2k}(D)}, the empirical stand-in
    for the bounded constant of the smoothness estimate.
    """
    L = build_L(params, m0, grid)
    state = initialize(m0, grid, tgrid)
    while state.status == "running":
        step(state, grid, tgrid, L, params, cfg, heat_cfg)
        if on_iteration is not None:
            on_iteration(state)

    m = state.m_current.copy()
    m[0] = m0
    cap = resolved_band_cap(grid)
    lam_flat = np.repeat(_band_laplacian(grid, cap).reshape(-1), 3)
    vol = grid.cell_volume
    _, r_hat = banded_residual_coeffs(state.m_hat, state.m_current, grid, tgrid, params)
    final_live = report_from_coeffs(
        r_hat[1:].reshape(tgrid.m_steps, -1), lam_flat, _live_window(tgrid), cfg.k - 1, vol
    ).norm
    final_full = report_from_coeffs(
        r_hat.reshape(r_hat.shape[0], -1), lam_flat, tgrid, cfg.k - 1, vol
    ).norm
    m_norm = spacetime_norm(m, grid, tgrid, NormSpec(k=cfg.k, band="resolved")).norm
    m0_norm = spatial_sobolev_norm(m0, grid, 2 * cfg.k)
    summary = RunSummary(
        status=state.status,
        iterations=state.ell,
        final_residual_norm=final_live,
        final_residual_norm_full=final_full,
        smoothness_ratio=m_norm / m0_norm,
        m_norm=m_norm,
        m0_spatial_norm=m0_norm,
        q_fit=geometric_fit(state.R_norm_history),
    )
    return m, state, summary


def geometric_fit(r_history: list[float], last: int = 5) -> float | None:
    """Geometric-mean contraction ratio over the last ``last`` ratios."""
    positive = [x for x in r_history if x > 0.0]
    if len(positive) < 2:
        return None
    n = min(last, len(positive) - 1)
    return float((positive[-1] / positive[-1 - n]) ** (1.0 / n))


@dataclass
class QDiagnostics:
    """Trend report for the bracket diagnostic Q_j.

    ``q_over_Q`` is the per-step measured stand-in for the aggregated
    constant relating Q_j to the realized ratio q_j; only the correlation
    is reported, never an asserted bound (the analytic constant is not
    numerically computable from the construction).
    """

    Q: list[float]
    trending_down: bool | None
    q_over_Q: list[float]
    correlation: float | None


def q_diagnostics(state: IterationState) -> QDiagnostics:
    Q = list(state.Q_history)
    trending = None
    if len(Q) >= 3:
        trending = all(Q[j + 1] <= Q[j] * (1.0 + 1e-12) for j in range(1, len(Q) - 1))
    qs = list(state.q_history)
    n = min(len(qs), len(Q))
    ratio = [qs[j] / Q[j] if Q[j] > 0 else math.nan for j in range(n)]
    corr = None
    if n >= 2:
        qa, qb = np.asarray(Q[:n]), np.asarray(qs[:n])
        if np.std(qa) > 0 and np.std(qb) > 0 and np.isfinite(qb).all():
            corr = float(np.corrcoef(qa, qb)[0, 1])
    return QDiagnostics(Q=Q, trending_down=trending, q_over_Q=ratio, correlation=corr)
