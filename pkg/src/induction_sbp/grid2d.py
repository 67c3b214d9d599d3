"""Tensor-product 2D grid, grid functions, derivatives and inner products.

A scalar grid function is stored as a flat vector with the y-index fastest:

    w = (w_{0,0}, w_{0,1}, ..., w_{0,M-1}, w_{1,0}, ..., w_{N-1,M-1}),

which is C-order flattening of an (nx, ny) array.  The 2D derivative
operators are the tensor products D_x (x) I and I (x) D_y; they are applied
axis-wise with the banded 1D stencils, never as assembled NM x NM matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np

from .sbp1d import SbpOperator1D, SbpOrder, build_sbp

__all__ = [
    "Face",
    "FaceSelector",
    "Grid2D",
    "ScalarField",
    "VectorField2",
    "make_grid",
    "ddx",
    "ddy",
    "p_inner",
    "p_norm",
    "face",
    "face_indices",
    "boundary_term_x",
    "boundary_term_y",
    "write_fields_csv",
]


class Face(Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Uniform tensor-product grid on [ax, bx] x [ay, by]."""

    op_x: SbpOperator1D
    op_y: SbpOperator1D
    ax: float
    bx: float
    ay: float
    by: float

    def __post_init__(self):
        if self.op_x.order is not self.op_y.order:
            raise ValueError("both axes must use the same SBP order")

    @property
    def order(self) -> SbpOrder:
        return self.op_x.order

    @property
    def nx(self) -> int:
        return self.op_x.n

    @property
    def ny(self) -> int:
        return self.op_y.n

    @property
    def dx(self) -> float:
        return self.op_x.dx

    @property
    def dy(self) -> float:
        return self.op_y.dx

    @property
    def x(self) -> np.ndarray:
        return self.ax + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.ay + self.dy * np.arange(self.ny)

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays of shape (nx, ny)."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights (p_x)_i (p_y)_j as an (nx, ny) array."""
        return np.outer(self.op_x.p_diag, self.op_y.p_diag)


def make_grid(
    order: SbpOrder,
    nx: int,
    ny: int,
    domain: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0),
) -> Grid2D:
    ax, bx, ay, by = (float(v) for v in domain)
    if not (bx > ax and by > ay):
        raise ValueError(f"degenerate domain {domain}")
    op_x = build_sbp(order, nx, (bx - ax) / (nx - 1))
    op_y = build_sbp(order, ny, (by - ay) / (ny - 1))
    return Grid2D(op_x=op_x, op_y=op_y, ax=ax, bx=bx, ay=ay, by=by)


@dataclass(eq=False)
class ScalarField:
    """Scalar grid function; ``values`` is the flat y-fastest vector."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.grid.nx * self.grid.ny
        if self.values.shape != (n,):
            raise ValueError(f"expected {n} values, got shape {self.values.shape}")

    @property
    def mesh(self) -> np.ndarray:
        """(nx, ny) view of the values."""
        return self.values.reshape(self.grid.nx, self.grid.ny)

    @classmethod
    def from_mesh(cls, grid: Grid2D, mesh: np.ndarray) -> "ScalarField":
        return cls(grid, np.asarray(mesh, dtype=float).reshape(-1))

    @classmethod
    def from_function(cls, grid: Grid2D, f: Callable) -> "ScalarField":
        X, Y = grid.meshes()
        return cls.from_mesh(grid, np.broadcast_to(f(X, Y), X.shape))

    @classmethod
    def zeros(cls, grid: Grid2D) -> "ScalarField":
        return cls(grid, np.zeros(grid.nx * grid.ny))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass(eq=False)
class VectorField2:
    """Two-component grid function (the magnetic field components)."""

    b1: ScalarField
    b2: ScalarField

    def __post_init__(self):
        if self.b1.grid is not self.b2.grid:
            raise ValueError("components must share one grid")

    @property
    def grid(self) -> Grid2D:
        return self.b1.grid

    def stacked(self) -> np.ndarray:
        """Component-major 2NM vector (all of b1, then all of b2)."""
        return np.concatenate([self.b1.values, self.b2.values])

    @classmethod
    def from_stacked(cls, grid: Grid2D, vec: np.ndarray) -> "VectorField2":
        vec = np.asarray(vec, dtype=float)
        n = grid.nx * grid.ny
        if vec.shape != (2 * n,):
            raise ValueError(f"expected stacked vector of length {2 * n}, got {vec.shape}")
        return cls(ScalarField(grid, vec[:n]), ScalarField(grid, vec[n:]))

    @classmethod
    def zeros(cls, grid: Grid2D) -> "VectorField2":
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid))

    def copy(self) -> "VectorField2":
        return VectorField2(self.b1.copy(), self.b2.copy())


def _check_same_grid(v, w):
    if v.grid is not w.grid:
        ga, gb = v.grid, w.grid
        same = (
            ga.nx == gb.nx and ga.ny == gb.ny and ga.order is gb.order
            and (ga.ax, ga.bx, ga.ay, ga.by) == (gb.ax, gb.bx, gb.ay, gb.by)
        )
        if not same:
            raise ValueError("fields live on different grids")


def ddx(f: ScalarField) -> ScalarField:
    """x-derivative: the 1D stencil applied along the x-index for every j."""
    out = f.grid.op_x.d.apply(f.mesh, axis=0)
    return ScalarField.from_mesh(f.grid, out)


def ddy(f: ScalarField) -> ScalarField:
    """y-derivative: the 1D stencil applied along the y-index for every i."""
    out = f.grid.op_y.d.apply(f.mesh, axis=1)
    return ScalarField.from_mesh(f.grid, out)


def p_inner(v, w) -> float:
    """Quadrature inner product; vector fields sum their component products."""
    if isinstance(v, VectorField2) and isinstance(w, VectorField2):
        return p_inner(v.b1, w.b1) + p_inner(v.b2, w.b2)
    if isinstance(v, ScalarField) and isinstance(w, ScalarField):
        _check_same_grid(v, w)
        return float(np.einsum("ij,ij,ij->", v.grid.weights, v.mesh, w.mesh))
    raise TypeError("p_inner expects two ScalarField or two VectorField2 arguments")


def p_norm(v) -> float:
    return float(np.sqrt(max(p_inner(v, v), 0.0)))


@dataclass(frozen=True, eq=False)
class FaceSelector:
    """Flat indices of one boundary face in the y-fastest ordering."""

    face: Face
    indices: np.ndarray


def face_indices(nx: int, ny: int, which: Face) -> np.ndarray:
    which = Face(which)
    if which is Face.LEFT:
        return np.arange(ny)
    if which is Face.RIGHT:
        return (nx - 1) * ny + np.arange(ny)
    if which is Face.BOTTOM:
        return np.arange(nx) * ny
    return np.arange(nx) * ny + (ny - 1)


def face(grid: Grid2D, which: Face) -> FaceSelector:
    return FaceSelector(face=Face(which), indices=face_indices(grid.nx, grid.ny, which))


def boundary_term_x(v: ScalarField, w: ScalarField) -> float:
    """The x-direction boundary bilinear form of discrete integration by parts:
    sum_j (p_y)_j (v_{N-1,j} w_{N-1,j} - v_{0,j} w_{0,j})."""
    _check_same_grid(v, w)
    py = v.grid.op_y.p_diag
    vm, wm = v.mesh, w.mesh
    return float(np.dot(py, vm[-1] * wm[-1] - vm[0] * wm[0]))


def boundary_term_y(v: ScalarField, w: ScalarField) -> float:
    """y-direction analogue: sum_i (p_x)_i (v_{i,M-1} w_{i,M-1} - v_{i,0} w_{i,0})."""
    _check_same_grid(v, w)
    px = v.grid.op_x.p_diag
    vm, wm = v.mesh, w.mesh
    return float(np.dot(px, vm[:, -1] * wm[:, -1] - vm[:, 0] * wm[:, 0]))


def write_fields_csv(path, v: VectorField2) -> None:
    """Dump a vector field as ``x,y,b1,b2`` rows in grid ordering, 17 digits."""
    grid = v.grid
    X, Y = grid.meshes()
    cols = (X.reshape(-1), Y.reshape(-1), v.b1.values, v.b2.values)
    with open(path, "w", newline="") as fh:
        fh.write("x,y,b1,b2\n")
        for x, y, b1, b2 in zip(*cols):
            fh.write(f"{x:.17g},{y:.17g},{b1:.17g},{b2:.17g}\n")
