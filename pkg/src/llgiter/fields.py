"""Pointwise vector-field algebra and the binary snapshot format.

Fields are plain float64 arrays following the conventions documented in
:mod:`llgiter.grid`.  The magnetization target is always R^3, also on
two-dimensional domains.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError, SnapshotFormatError
from .grid import SpaceGrid, TimeGrid

_MAGIC = b"LLGFLD1\x00"
_HEADER = struct.Struct("<8sqqqdq")  # magic, d, N, M, T, ncomp


@dataclass(frozen=True)
class PhysicsParams:
    """Gilbert damping alpha and exchange constant c_e, both positive."""

    alpha: float = 1.0
    c_e: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.c_e > 0):
            raise ValueError(f"alpha and c_e must be positive, got ({self.alpha}, {self.c_e})")


def _match(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ShapeMismatchError(f"field shapes differ: {a.shape} vs {b.shape}")


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise 3D cross product."""
    _match(a, b)
    return np.cross(a, b)


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise dot product; drops the component axis."""
    _match(a, b)
    return np.einsum("...i,...i->...", a, b)


def modulus(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("...i,...i->...", a, a))


def modulus_deviation(field: np.ndarray) -> float:
    """max over all nodes of | |m| - 1 |; zero iff every node is unit length."""
    return float(np.abs(modulus(field) - 1.0).max())


def axpy(alpha: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """alpha * x + y, slice-wise and node-wise."""
    _match(x, y)
    return alpha * x + y


def assert_finite(arr: np.ndarray, what: str):
    if not np.isfinite(arr).all():
        raise ValueError(f"non-finite entries in {what}")


def validate_vector_field(field: np.ndarray, grid: SpaceGrid):
    if field.shape != grid.shape + (3,):
        raise ShapeMismatchError(
            f"vector field shape {field.shape} != expected {grid.shape + (3,)}"
        )


def validate_spacetime_field(field: np.ndarray, grid: SpaceGrid, tgrid: TimeGrid):
    expected = (tgrid.m_steps + 1,) + grid.shape + (3,)
    if field.shape != expected:
        raise ShapeMismatchError(f"space-time field shape {field.shape} != expected {expected}")


def _file_permutation(dimension: int, has_time: bool) -> tuple[int, ...]:
    # File layout: component fastest, then x1, x2(, x3), then time slowest,
    # i.e. C order over axes (t, x_d, ..., x_1, comp).  The spatial reversal
    # is an involution, so the same permutation also restores memory order.
    if has_time:
        return (0,) + tuple(range(dimension, 0, -1)) + (dimension + 1,)
    return tuple(range(dimension - 1, -1, -1)) + (dimension,)


def write_snapshot(path, field: np.ndarray, grid: SpaceGrid, tgrid: TimeGrid | None = None):
    """Write a field snapshot.

    Header (little endian): 8-byte magic, int64 d, int64 N, int64 M,
    float64 T, int64 component count; then the payload as little-endian
    float64 with component fastest, then x1, x2(, x3), then time slowest.
    Space-only fields are stored with M = 0 and T = 0.
    """
    if tgrid is None:
        validate_vector_field(field, grid)
        m_steps, t_final = 0, 0.0
    else:
        validate_spacetime_field(field, grid, tgrid)
        m_steps, t_final = tgrid.m_steps, tgrid.t_final
    perm = _file_permutation(grid.dimension, tgrid is not None)
    payload = np.ascontiguousarray(np.transpose(field, perm), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, grid.dimension, grid.n_per_axis, m_steps, t_final, 3))
        fh.write(payload.tobytes())


def read_snapshot(path) -> tuple[np.ndarray, SpaceGrid, TimeGrid | None]:
    """Read a snapshot written by :func:`write_snapshot`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header")
    magic, d, n, m_steps, t_final, ncomp = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    if d not in (2, 3) or ncomp != 3:
        raise SnapshotFormatError(f"{path}: unsupported layout d={d} ncomp={ncomp}")
    grid = SpaceGrid(d, n)
    tgrid = TimeGrid(t_final, m_steps) if m_steps > 0 else None
    count = (m_steps + 1 if m_steps > 0 else 1) * n**d * ncomp
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=_HEADER.size)
    if data.size != count:
        raise SnapshotFormatError(f"{path}: truncated payload")
    if m_steps > 0:
        file_shape = (m_steps + 1,) + (n,) * d + (ncomp,)
    else:
        file_shape = (n,) * d + (ncomp,)
    perm = _file_permutation(d, m_steps > 0)
    field = np.ascontiguousarray(np.transpose(data.reshape(file_shape), perm))
    return field, grid, tgrid
