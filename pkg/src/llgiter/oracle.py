"""Independent projected Runge-Kutta baseline for cross-validation.

This integrator shares no linear-solve machinery with the constructive
iteration: time stepping is explicit, the unit-sphere constraint is kept
by pointwise projection, and the only common infrastructure is the
spectral Laplacian (which is validated separately against eigenfunction
identities).  It is deliberately not a competitive micromagnetics code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BlowupError, ConfigError
from .fields import PhysicsParams
from .grid import SpaceGrid, TimeGrid, gradient, laplacian

__all__ = ["OracleConfig", "stable_step", "llg_rhs", "evolve", "exchange_energy"]


@dataclass(frozen=True)
class OracleConfig:
    """dt_oracle = None picks 0.1 h^2 / c_e, well inside the explicit
    diffusion stability margin (the hard cap is 0.25 h^2 / c_e)."""

    dt_oracle: float | None = None
    renormalize: bool = True
    scheme: str = "rk4-projected"

    def __post_init__(self):
        if self.scheme != "rk4-projected":
            raise ConfigError(f"unknown oracle scheme {self.scheme!r}")
        if self.dt_oracle is not None and self.dt_oracle <= 0:
            raise ConfigError(f"dt_oracle must be positive, got {self.dt_oracle}")

    def resolve_dt(self, grid: SpaceGrid, params: PhysicsParams) -> float:
        cap = 0.25 * grid.spacing**2 / params.c_e
        dt = self.dt_oracle if self.dt_oracle is not None else stable_step(grid, params)
        if dt > cap:
            raise ConfigError(f"dt_oracle = {dt} exceeds the stability cap {cap}")
        return dt


def stable_step(grid: SpaceGrid, params: PhysicsParams) -> float:
    return 0.1 * grid.spacing**2 / params.c_e


def llg_rhs(m: np.ndarray, grid: SpaceGrid, params: PhysicsParams) -> np.ndarray:
    """m_t from the Gilbert form m_t - alpha m x m_t = -c_e m x Lap m.

    The pointwise map a -> a - alpha m x a is invertible for every m:
    a = (b + alpha m x b + alpha^2 (m.b) m) / (1 + alpha^2 |m|^2).
    The result is orthogonal to m at every node.
    """
    lap = laplacian(m, grid)
    b = -params.c_e * np.cross(m, lap)
    al = params.alpha
    mb = np.einsum("...i,...i->...", m, b)
    msq = np.einsum("...i,...i->...", m, m)
    return (b + al * np.cross(m, b) + (al * al * mb)[..., None] * m) / (
        1.0 + al * al * msq
    )[..., None]


def evolve(
    m0: np.ndarray,
    grid: SpaceGrid,
    tgrid: TimeGrid,
    params: PhysicsParams,
    cfg: OracleConfig = OracleConfig(),
) -> np.ndarray:
    """Integrate from m0 and sample on the time grid nodes.

    Classical four-stage steps with sub-stepping between output nodes;
    optional pointwise renormalization after every sub-step.  Raises
    BlowupError as soon as any |m| exceeds 2.
    """
    dt_target = cfg.resolve_dt(grid, params)
    n_sub = max(1, math.ceil(tgrid.dt / dt_target))
    dt = tgrid.dt / n_sub
    out = np.empty((tgrid.m_steps + 1,) + grid.shape + (3,))
    out[0] = m0
    m = np.array(m0, dtype=float)
    for n in range(1, tgrid.m_steps + 1):
        for _ in range(n_sub):
            k1 = llg_rhs(m, grid, params)
            k2 = llg_rhs(m + 0.5 * dt * k1, grid, params)
            k3 = llg_rhs(m + 0.5 * dt * k2, grid, params)
            k4 = llg_rhs(m + dt * k3, grid, params)
            m = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if cfg.renormalize:
                m = m / np.sqrt(np.einsum("...i,...i->...", m, m))[..., None]
            peak = float(np.abs(m).max())
            if not np.isfinite(peak) or peak > 2.0:
                raise BlowupError(f"oracle blow-up at t ~ {n * tgrid.dt:.4g}: max |m| = {peak}")
        out[n] = m
    return out


def exchange_energy(m: np.ndarray, grid: SpaceGrid) -> float:
    """Discrete exchange energy 0.5 int |grad m|^2, the flow's Lyapunov
    functional for positive damping."""
    g = gradient(m, grid)
    return 0.5 * grid.cell_volume * float((g * g).sum())
