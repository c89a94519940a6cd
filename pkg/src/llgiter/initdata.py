"""Generators of discrete initial data with exact unit modulus.

The construction is u = base + eps * sum_j amp_j * prod_ax cos(k_ax pi
x_ax) e_{comp_j} followed by pointwise normalization m0 = u/|u|.  Unit
modulus is then exact at every node, and the discrete Neumann condition
holds because each factor is a Neumann cosine and normalization
preserves the even reflection symmetry across the faces.  Mode indices
are capped at N/3 so that cubic products of modes stay exactly resolved
on the grid (dealiasing margin).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .grid import SpaceGrid

__all__ = ["PerturbationMode", "InitialDataConfig", "generate_m0", "mean_direction"]


@dataclass(frozen=True)
class PerturbationMode:
    """One cosine perturbation: multi-index k, target component, amplitude."""

    k: tuple[int, ...]
    component: int
    amplitude: float = 1.0

    def __post_init__(self):
        if not 0 <= self.component <= 2:
            raise ConfigError(f"mode component must be 0..2, got {self.component}")
        if any(kj < 0 for kj in self.k):
            raise ConfigError(f"mode indices must be nonnegative, got {self.k}")


@dataclass(frozen=True)
class InitialDataConfig:
    base_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    epsilon: float = 0.02
    modes: tuple[PerturbationMode, ...] = (PerturbationMode(k=(1, 0), component=0),)
    random_modes: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        b = np.asarray(self.base_direction, dtype=float)
        if b.shape != (3,) or abs(float(b @ b) - 1.0) > 1e-12:
            raise ConfigError(f"base_direction must be a unit 3-vector, got {self.base_direction}")
        if not self.modes and self.random_modes <= 0 and self.epsilon > 0:
            raise ConfigError("epsilon > 0 needs at least one perturbation mode")


def _draw_random_modes(cfg: InitialDataConfig, grid: SpaceGrid) -> tuple[PerturbationMode, ...]:
    rng = np.random.default_rng(cfg.seed)
    kmax = max(1, grid.n_per_axis // 3)
    modes = []
    for _ in range(cfg.random_modes):
        k = tuple(int(x) for x in rng.integers(0, min(kmax, 4) + 1, size=grid.dimension))
        if all(kj == 0 for kj in k):
            k = (1,) + k[1:]
        comp = int(rng.integers(0, 3))
        amp = float(rng.uniform(0.5, 1.0))
        modes.append(PerturbationMode(k=k, component=comp, amplitude=amp))
    return tuple(modes)


def generate_m0(cfg: InitialDataConfig, grid: SpaceGrid) -> np.ndarray:
    """Build the initial vector field; |m0| = 1 exactly at every node.

    Raises if a mode exceeds the N/3 resolution cap or if the perturbed
    field comes within 0.5 of the origin anywhere (normalization would
    then amplify the perturbation instead of controlling it).
    """
    modes = tuple(cfg.modes)
    if cfg.random_modes > 0:
        modes = modes + _draw_random_modes(cfg, grid)
    kcap = grid.n_per_axis // 3
    for mode in modes:
        if len(mode.k) != grid.dimension:
            raise ConfigError(f"mode {mode.k} has wrong length for dimension {grid.dimension}")
        if any(kj > kcap for kj in mode.k):
            raise ConfigError(f"mode {mode.k} exceeds the N/3 = {kcap} resolution cap")

    meshes = grid.meshes()
    u = np.broadcast_to(np.asarray(cfg.base_direction, dtype=float), grid.shape + (3,)).copy()
    for mode in modes:
        profile = np.full(grid.shape, cfg.epsilon * mode.amplitude)
        for axis, kj in enumerate(mode.k):
            if kj:
                profile = profile * np.cos(kj * np.pi * meshes[axis])
        u[..., mode.component] += profile
    mod = np.sqrt(np.einsum("...i,...i->...", u, u))
    if float(mod.min()) < 0.5:
        raise ConfigError(
            f"perturbation too large for safe normalization: min |u| = {float(mod.min()):.3f} < 0.5"
        )
    return u / mod[..., None]


def mean_direction(m0: np.ndarray, grid: SpaceGrid) -> np.ndarray:
    """Grid average of m0 (plain node average, exact midpoint quadrature)."""
    return m0.reshape(-1, 3).mean(axis=0)
