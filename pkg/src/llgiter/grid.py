"""Tensor-product discretization of the unit box [0,1]^d and of [0,T].

Spatial fields are sampled at cell centers, x_i = (i + 1/2) h per axis
with h = 1/N.  On that layout every cosine mode cos(k pi x) has exactly
zero discrete normal derivative at both faces, so the orthonormal DCT-II
is a Neumann-compatible eigenbasis and the Laplacian acts diagonally on
it with eigenvalue -lambda_k, lambda_k = sum_j (k_j pi)^2.  The stiff
operator is therefore exact on resolved modes, while first derivatives
use second-order mirror-ghost finite differences (the unique closure
consistent with a vanishing normal derivative to second order).

Array conventions used throughout the package:

* scalar grid function: shape ``grid.shape`` = (N,)*d
* vector grid function: shape ``grid.shape + (3,)``
* space-time field:     shape ``(M + 1,) + grid.shape + (3,)``
* cosine spectrum: DCT-II coefficients in scipy's ``norm="ortho"``
  convention, same shape as the data.  Parseval in the grid metric:
  the L2(D) norm ``sqrt(h^d sum f^2)`` equals ``sqrt(h^d) ||fhat||_2``
  (|D| = 1, so the grid L2 norm is N^(-d/2) times the coefficient l2
  norm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
from scipy.fft import dctn, idctn

from .errors import ShapeMismatchError, TimeResolutionError

__all__ = [
    "SpaceGrid",
    "TimeGrid",
    "dct_forward",
    "dct_inverse",
    "laplacian",
    "gradient",
    "neumann_face_deviation",
    "time_derivative",
    "time_stencil_matrix",
]


@dataclass(frozen=True)
class SpaceGrid:
    """Cell-centered uniform grid on the unit box, N nodes per axis."""

    dimension: int
    n_per_axis: int

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.n_per_axis < 4:
            raise ValueError(f"n_per_axis must be >= 4, got {self.n_per_axis}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_per_axis,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @cached_property
    def nodes(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return (np.arange(self.n_per_axis) + 0.5) / self.n_per_axis

    @cached_property
    def mode_laplacian(self) -> np.ndarray:
        """lambda_k = sum_j (k_j pi)^2 over all cosine multi-indices k."""
        lam1d = (np.arange(self.n_per_axis) * np.pi) ** 2
        lam = np.zeros(self.shape)
        for axis in range(self.dimension):
            shape = [1] * self.dimension
            shape[axis] = self.n_per_axis
            lam = lam + lam1d.reshape(shape)
        return lam

    def meshes(self) -> list[np.ndarray]:
        """Coordinate arrays of shape ``grid.shape``, one per axis."""
        return list(np.meshgrid(*([self.nodes] * self.dimension), indexing="ij"))

    def center_index(self) -> tuple[int, ...]:
        """Index of the node nearest the box center (first on ties)."""
        i = int(np.argmin(np.abs(self.nodes - 0.5)))
        return (i,) * self.dimension


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, T] into m_steps intervals."""

    t_final: float
    m_steps: int

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.m_steps < 2:
            raise ValueError(f"m_steps must be >= 2, got {self.m_steps}")

    @property
    def dt(self) -> float:
        return self.t_final / self.m_steps

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(self.m_steps + 1) * self.dt


def _spatial_axes(field: np.ndarray, grid: SpaceGrid, leading_axes: int) -> tuple[int, ...]:
    d = grid.dimension
    if field.shape[leading_axes : leading_axes + d] != grid.shape:
        raise ShapeMismatchError(
            f"axes {leading_axes}..{leading_axes + d - 1} of shape {field.shape} "
            f"do not match grid shape {grid.shape}"
        )
    return tuple(range(leading_axes, leading_axes + d))


def _mode_broadcast(grid: SpaceGrid, field: np.ndarray, leading_axes: int) -> tuple[int, ...]:
    trailing = field.ndim - leading_axes - grid.dimension
    return (1,) * leading_axes + grid.shape + (1,) * trailing


def dct_forward(field: np.ndarray, grid: SpaceGrid, *, leading_axes: int = 0) -> np.ndarray:
    """Orthonormal DCT-II coefficients over the spatial axes.

    Linear and exactly invertible.  Leading axes (time) and trailing axes
    (vector components) are transformed independently.
    """
    axes = _spatial_axes(field, grid, leading_axes)
    return dctn(field, type=2, norm="ortho", axes=axes)


def dct_inverse(coeffs: np.ndarray, grid: SpaceGrid, *, leading_axes: int = 0) -> np.ndarray:
    """Exact inverse of :func:`dct_forward`."""
    axes = _spatial_axes(coeffs, grid, leading_axes)
    return idctn(coeffs, type=2, norm="ortho", axes=axes)


def laplacian(field: np.ndarray, grid: SpaceGrid, *, leading_axes: int = 0) -> np.ndarray:
    """Neumann spectral Laplacian: each cosine mode times -lambda_k.

    Exact on every resolved mode; the output satisfies the discrete
    Neumann condition identically.
    """
    coeffs = dct_forward(field, grid, leading_axes=leading_axes)
    lam = grid.mode_laplacian.reshape(_mode_broadcast(grid, field, leading_axes))
    return dct_inverse(coeffs * (-lam), grid, leading_axes=leading_axes)


def _mirror_pad(field: np.ndarray, axis: int) -> np.ndarray:
    # Ghost value = adjacent interior value (even reflection about the face).
    pad = [(0, 0)] * field.ndim
    pad[axis] = (1, 1)
    return np.pad(field, pad, mode="edge")


def gradient(field: np.ndarray, grid: SpaceGrid, *, leading_axes: int = 0) -> np.ndarray:
    """Second-order centered differences with mirror ghost cells.

    Returns the per-axis derivatives stacked along a new leading axis:
    shape ``(d,) + field.shape``.  Mirror ghosts keep the stencil
    second-order accurate for any field compatible with zero normal
    derivative (its even extension across the face is smooth).
    """
    _spatial_axes(field, grid, leading_axes)
    inv2h = 0.5 / grid.spacing
    out = np.empty((grid.dimension,) + field.shape)
    for axis in range(grid.dimension):
        ax = axis + leading_axes
        padded = _mirror_pad(field, ax)
        n = field.shape[ax]
        hi = np.take(padded, np.arange(2, n + 2), axis=ax)
        lo = np.take(padded, np.arange(0, n), axis=ax)
        out[axis] = (hi - lo) * inv2h
    return out


def neumann_face_deviation(field: np.ndarray, grid: SpaceGrid, *, leading_axes: int = 0) -> float:
    """Largest discrete normal derivative magnitude over all faces.

    The normal derivative at a face is the centered difference across it
    between the first interior layer and its ghost, with the ghost taken
    from the same mirror closure used by :func:`gradient`.  Under that
    closure it vanishes identically; a nonzero value therefore signals
    data produced outside the package's boundary convention.
    """
    _spatial_axes(field, grid, leading_axes)
    inv_h = 1.0 / grid.spacing
    worst = 0.0
    for axis in range(grid.dimension):
        ax = axis + leading_axes
        padded = _mirror_pad(field, ax)
        low = (np.take(padded, 1, axis=ax) - np.take(padded, 0, axis=ax)) * inv_h
        high = (np.take(padded, -1, axis=ax) - np.take(padded, -2, axis=ax)) * inv_h
        worst = max(worst, float(np.abs(low).max()), float(np.abs(high).max()))
    return worst


@lru_cache(maxsize=None)
def _fd_weights_exact(offsets: tuple[int, ...], order: int) -> tuple[Fraction, ...]:
    """Finite-difference weights for the order-th derivative at offset 0.

    Solved over the rationals (Gauss-Jordan on the moment system) so that
    structural identities such as zero row sums and polynomial exactness
    survive the conversion to binary floats whenever the weights are
    exactly representable, which they are for all stencils used here.
    """
    n = len(offsets)
    a = [[Fraction(o) ** p for o in offsets] for p in range(n)]
    rhs = [Fraction(math.factorial(p)) if p == order else Fraction(0) for p in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0:
            raise ValueError(f"singular stencil system for offsets {offsets}")
        a[col], a[piv] = a[piv], a[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = a[col][col]
        a[col] = [x / inv for x in a[col]]
        rhs[col] = rhs[col] / inv
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                rhs[r] = rhs[r] - f * rhs[col]
    return tuple(rhs)


@lru_cache(maxsize=None)
def time_stencil_matrix(m_steps: int, order: int, dt: float) -> np.ndarray:
    """Dense (M+1)x(M+1) matrix realizing d^order/dt^order on node values.

    Centered stencils of order 2 in the interior; near the ends, windows
    of order+2 nodes anchored at the boundary (also second order).
    """
    if order < 1:
        raise ValueError(f"derivative order must be >= 1, got {order}")
    if m_steps < 2 * order + 1:
        raise TimeResolutionError(
            f"need m_steps >= {2 * order + 1} for derivative order {order}, got {m_steps}"
        )
    half = (order + 1) // 2
    width_b = order + 2
    mat = np.zeros((m_steps + 1, m_steps + 1))
    scale = float(dt) ** (-order)
    for n in range(m_steps + 1):
        if n < half:
            window = range(0, width_b)
        elif n > m_steps - half:
            window = range(m_steps + 1 - width_b, m_steps + 1)
        else:
            window = range(n - half, n + half + 1)
        weights = _fd_weights_exact(tuple(j - n for j in window), order)
        for j, w in zip(window, weights):
            mat[n, j] = float(w) * scale
    return mat


def time_derivative(stf: np.ndarray, tgrid: TimeGrid, order: int) -> np.ndarray:
    """order-th time derivative of a space-time field (time axis first).

    The stencil rows annihilate time-constants exactly, so the first
    slice is subtracted before applying them; that leaves the result
    unchanged while keeping the rounding of the stencil products
    proportional to the time variation (time-constant fields give exact
    zeros regardless of their magnitude).
    """
    if order == 0:
        return stf
    if stf.shape[0] != tgrid.m_steps + 1:
        raise ShapeMismatchError(
            f"space-time field has {stf.shape[0]} slices, expected {tgrid.m_steps + 1}"
        )
    mat = time_stencil_matrix(tgrid.m_steps, order, tgrid.dt)
    flat = stf.reshape(stf.shape[0], -1)
    return (mat @ (flat - flat[0])).reshape(stf.shape)
