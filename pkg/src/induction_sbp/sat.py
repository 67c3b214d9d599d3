"""Boundary penalty operator with characteristic-inflow coefficients.

Dirichlet data is imposed weakly: the semi-discrete right-hand side gains a
penalty B(V - g) supported on the boundary faces, where B is diagonal with
entries sigma / p along each face.  The inverse quadrature weight makes the
penalty O(1/dx).  Energy stability requires, face by face,

    sigma_left  <= -max(u1, 0) / 2     sigma_right <= min(u1, 0) / 2
    sigma_bottom<= -max(u2, 0) / 2     sigma_top   <= min(u2, 0) / 2,

evaluated at the face nodes.  We take the sharp (equality) choice, so the
penalty vanishes identically on outflow faces, where no boundary condition
is imposed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid2d import Grid2D, ScalarField, VectorField2
from .model import VelocityField

__all__ = ["PenaltySet", "choose_sigmas", "sat_coefficients", "apply_sat"]


@dataclass(frozen=True, eq=False)
class PenaltySet:
    """Per-face diagonal penalty coefficients (units of velocity), all <= 0."""

    sigma_left: np.ndarray
    sigma_right: np.ndarray
    sigma_bottom: np.ndarray
    sigma_top: np.ndarray
    valid_at: float


def choose_sigmas(velocity: VelocityField, grid: Grid2D, t: float) -> PenaltySet:
    """Sharp stability-limit coefficients from face velocity samples at time t."""
    x, y = grid.x, grid.y
    u1_left = np.asarray(velocity.u1(grid.ax, y, t), dtype=float)
    u1_right = np.asarray(velocity.u1(grid.bx, y, t), dtype=float)
    u2_bottom = np.asarray(velocity.u2(x, grid.ay, t), dtype=float)
    u2_top = np.asarray(velocity.u2(x, grid.by, t), dtype=float)
    return PenaltySet(
        sigma_left=-0.5 * np.maximum(np.broadcast_to(u1_left, y.shape), 0.0),
        sigma_right=0.5 * np.minimum(np.broadcast_to(u1_right, y.shape), 0.0),
        sigma_bottom=-0.5 * np.maximum(np.broadcast_to(u2_bottom, x.shape), 0.0),
        sigma_top=0.5 * np.minimum(np.broadcast_to(u2_top, x.shape), 0.0),
        valid_at=float(t),
    )


def sat_coefficients(pen: PenaltySet, grid: Grid2D) -> np.ndarray:
    """The diagonal of the penalty operator as an (nx, ny) array.

    Face entries are sigma / p on the penalized axis; corners accumulate both
    adjacent faces; interior entries are zero.
    """
    if pen.sigma_left.shape != (grid.ny,) or pen.sigma_bottom.shape != (grid.nx,):
        raise ValueError("penalty coefficients do not match the grid")
    px, py = grid.op_x.p_diag, grid.op_y.p_diag
    b = np.zeros((grid.nx, grid.ny))
    b[0, :] += pen.sigma_left / px[0]
    b[-1, :] += pen.sigma_right / px[-1]
    b[:, 0] += pen.sigma_bottom / py[0]
    b[:, -1] += pen.sigma_top / py[-1]
    return b


def apply_sat(pen: PenaltySet, grid: Grid2D, v: VectorField2, g: VectorField2 | None = None) -> VectorField2:
    """Evaluate the penalty B(V - g) componentwise; g = None means g = 0."""
    coeff = sat_coefficients(pen, grid)
    out = []
    for comp, gcomp in ((v.b1, None if g is None else g.b1), (v.b2, None if g is None else g.b2)):
        diff = comp.mesh if gcomp is None else comp.mesh - gcomp.mesh
        out.append(ScalarField.from_mesh(grid, coeff * diff))
    return VectorField2(out[0], out[1])
