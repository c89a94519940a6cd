"""Runtime verification that a computed field behaves like a strong solution.

The checks operationalize the solution characterization: vanishing
residual, exact initial data, exact discrete Neumann walls, and unit
modulus propagating from t = 0 (measured directly as max | |m| - 1 |
rather than re-simulating the scalar evolution of |m|^2, whose Gronwall
argument is analytic machinery with no separately measurable content).

``residual_norm`` uses the same measuring stick as the iteration's
stopping test (resolved band, driven window t_1..T);
``residual_norm_full`` is the literal full-spectrum norm over [0, T],
which plateaus at the discretization benchmark because the t = 0
residual sample is pinned by the initial condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError
from .fields import PhysicsParams, modulus_deviation
from .grid import SpaceGrid, TimeGrid, neumann_face_deviation
from .norms import NormSpec, spacetime_norm, spatial_sobolev_norm
from .residual import residual

__all__ = ["VerificationReport", "check_solution", "compare_oracle"]


@dataclass
class VerificationReport:
    residual_norm: float
    residual_norm_full: float
    modulus_dev: float
    neumann_dev: float
    ic_dev: float
    smoothness_ratio: float
    oracle_linf: float | None = None

    def to_dict(self) -> dict:
        return {
            "residual_norm": self.residual_norm,
            "residual_norm_full": self.residual_norm_full,
            "modulus_dev": self.modulus_dev,
            "neumann_dev": self.neumann_dev,
            "ic_dev": self.ic_dev,
            "smoothness_ratio": self.smoothness_ratio,
            "oracle_linf": self.oracle_linf,
        }


def check_solution(
    m: np.ndarray,
    m0: np.ndarray,
    grid: SpaceGrid,
    tgrid: TimeGrid,
    params: PhysicsParams,
    spec: NormSpec = NormSpec(),
    oracle_m: np.ndarray | None = None,
    m_hat: np.ndarray | None = None,
) -> VerificationReport:
    """Evaluate all solution-characterization deviations for a finished run.

    When the run's banded coefficients are supplied (``m_hat``), the
    stopping-style residual norm is evaluated through the same
    coefficient-space path the iteration uses; evaluating it from the
    physical samples alone leaves the measurement at the representation's
    rounding pedestal instead.
    """
    from .iterate import banded_residual_coeffs  # local import avoids a cycle
    from .norms import report_from_coeffs, resolved_band_cap

    live = TimeGrid(tgrid.t_final - tgrid.dt, tgrid.m_steps - 1)
    r_full_field = residual(m, grid, tgrid, params)
    if m_hat is not None:
        cap = resolved_band_cap(grid)
        idx = np.ix_(*([np.arange(cap + 1)] * grid.dimension))
        lam_flat = np.repeat(grid.mode_laplacian[idx].reshape(-1), 3)
        _, r_hat = banded_residual_coeffs(m_hat, m, grid, tgrid, params)
        residual_norm = report_from_coeffs(
            r_hat[1:].reshape(tgrid.m_steps, -1), lam_flat, live, spec.k - 1, grid.cell_volume
        ).norm
    else:
        residual_norm = spacetime_norm(
            r_full_field[1:], grid, live, NormSpec(k=spec.k - 1, band="resolved")
        ).norm
    oracle_linf = None
    if oracle_m is not None:
        oracle_linf = float(compare_oracle(m, oracle_m).max())
    return VerificationReport(
        residual_norm=residual_norm,
        residual_norm_full=spacetime_norm(
            r_full_field, grid, tgrid, NormSpec(k=spec.k - 1, band="full")
        ).norm,
        modulus_dev=modulus_deviation(m),
        neumann_dev=neumann_face_deviation(m, grid, leading_axes=1),
        ic_dev=float(np.abs(m[0] - m0).max()),
        smoothness_ratio=spacetime_norm(
            m, grid, tgrid, NormSpec(k=spec.k, band="resolved")
        ).norm
        / spatial_sobolev_norm(m0, grid, 2 * spec.k),
        oracle_linf=oracle_linf,
    )


def compare_oracle(m: np.ndarray, oracle_m: np.ndarray) -> np.ndarray:
    """Per-time-slice max-norm gaps between two space-time fields."""
    if m.shape != oracle_m.shape:
        raise ShapeMismatchError(f"incompatible fields: {m.shape} vs {oracle_m.shape}")
    return np.abs(m - oracle_m).reshape(m.shape[0], -1).max(axis=1)
